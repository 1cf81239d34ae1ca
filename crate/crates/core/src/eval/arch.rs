use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_XMAX_MB: f64 = 512.0;

/// A trained configuration summarized by its memory use and output SIR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchCandidate {
    /// Architecture description, e.g. `nb=16384 h=200 l=3`.
    pub config: String,
    /// Free-form annotation carried through to the report.
    #[serde(default)]
    pub label: String,
    pub mem_mb: f64,
    pub sir_db: f64,
}

impl ArchCandidate {
    pub fn new(config: impl Into<String>, label: impl Into<String>, mem_mb: f64, sir_db: f64) -> Self {
        Self {
            config: config.into(),
            label: label.into(),
            mem_mb,
            sir_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedArch {
    pub candidate: ArchCandidate,
    pub score: f64,
}

/// Area under the ramp-then-plateau curve that rises linearly to `sir_db`
/// at `mem_mb` and stays flat up to `x_max`: `sir_db * (x_max - mem_mb / 2)`.
pub fn arch_score(sir_db: f64, mem_mb: f64, x_max: f64) -> Result<f64> {
    if !(mem_mb > 0.0) {
        return Err(Error::invalid(format!("memory must be positive, got {mem_mb}")));
    }
    if mem_mb >= x_max {
        return Err(Error::invalid(format!(
            "memory {mem_mb} MB is not below the integration limit {x_max} MB"
        )));
    }
    Ok(sir_db * (x_max - mem_mb / 2.0))
}

/// Orders candidates by descending score; equal scores put the smaller model first.
pub fn rank_architectures(candidates: Vec<ArchCandidate>, x_max: f64) -> Result<Vec<RankedArch>> {
    let mut ranked = candidates
        .into_iter()
        .map(|c| {
            let score = arch_score(c.sir_db, c.mem_mb, x_max)?;
            Ok(RankedArch { candidate: c, score })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.candidate.mem_mb.partial_cmp(&b.candidate.mem_mb).unwrap_or(Ordering::Equal))
    });
    Ok(ranked)
}

/// Published memory/SIR results for twenty BLSTM configurations trained with
/// up to three sources: (N_B, H, L, memory MB, SIR dB).
const TABLE1: [(usize, usize, usize, f64, f64); 20] = [
    (8192, 200, 1, 16.0, 19.69),
    (8192, 200, 3, 38.0, 22.44),
    (8192, 200, 5, 60.0, 22.68),
    (8192, 300, 1, 26.0, 20.87),
    (8192, 300, 3, 76.0, 23.67),
    (8192, 300, 5, 125.0, 22.06),
    (8192, 400, 1, 39.0, 21.82),
    (8192, 400, 3, 127.0, 22.94),
    (8192, 400, 5, 215.0, 22.17),
    (8192, 500, 4, 259.0, 26.02),
    (16384, 200, 1, 16.0, 20.99),
    (16384, 200, 3, 38.0, 24.66),
    (16384, 200, 5, 60.0, 22.88),
    (16384, 300, 1, 26.0, 21.36),
    (16384, 300, 3, 76.0, 23.38),
    (16384, 300, 5, 125.0, 21.93),
    (16384, 400, 1, 39.0, 22.68),
    (16384, 400, 3, 127.0, 23.82),
    (16384, 400, 5, 215.0, 22.65),
    (16384, 500, 4, 259.0, 27.75),
];

pub fn table1_candidates() -> Vec<ArchCandidate> {
    TABLE1
        .iter()
        .map(|&(nb, h, l, mem, sir)| {
            let label = match (nb, h, l) {
                (16384, 200, 3) => "recommended",
                (8192, 300, 3) => "alternative",
                _ => "",
            };
            ArchCandidate::new(format!("nb={nb} h={h} l={l}"), label, mem, sir)
        })
        .collect()
}

/// Reads candidates from CSV with a header containing `config`, `mem_mb`
/// and `sir_db` (and optionally `label`).
pub fn read_candidates(reader: impl Read) -> Result<Vec<ArchCandidate>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ArchCandidate>().enumerate() {
        let c = row.map_err(|e| Error::Data {
            path: "<candidates>".into(),
            message: format!("row {}: {e}", i + 1),
        })?;
        out.push(c);
    }
    if out.is_empty() {
        return Err(Error::invalid("no candidates to rank"));
    }
    Ok(out)
}

/// Writes `config,label,mem_mb,sir_db,score` rows in rank order.
pub fn write_ranking(writer: impl Write, ranked: &[RankedArch]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["config", "label", "mem_mb", "sir_db", "score"])
        .map_err(csv_io)?;
    for r in ranked {
        let c = &r.candidate;
        w.write_record([
            c.config.clone(),
            c.label.clone(),
            c.mem_mb.to_string(),
            c.sir_db.to_string(),
            format!("{:.2}", r.score),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recommended_row_score() {
        let s = arch_score(24.66, 38.0, 512.0).unwrap();
        assert!((s - 24.66 * 493.0).abs() < 1e-9);
        assert!((s - 12157.38).abs() < 1e-6);
        let s = arch_score(23.67, 76.0, 512.0).unwrap();
        assert!((s - 11219.58).abs() < 1e-6);
        assert_eq!(arch_score(0.0, 10.0, 512.0).unwrap(), 0.0);
    }

    #[test]
    fn score_matches_numeric_integral() {
        let (sir, mem, xmax) = (20.0, 100.0, 512.0);
        let n = 512_000;
        let dx = xmax / n as f64;
        let area: f64 = (0..n)
            .map(|k| {
                let x = (k as f64 + 0.5) * dx;
                if x < mem { sir / mem * x } else { sir }
            })
            .sum::<f64>()
            * dx;
        assert!((area - arch_score(sir, mem, xmax).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn bad_memory() {
        assert!(arch_score(20.0, 512.0, 512.0).is_err());
        assert!(arch_score(20.0, 0.0, 512.0).is_err());
    }

    #[test]
    fn table_ranking_top_two() {
        let ranked = rank_architectures(table1_candidates(), DEFAULT_XMAX_MB).unwrap();
        assert_eq!(ranked.len(), 20);
        assert_eq!(ranked[0].candidate.config, "nb=16384 h=200 l=3");
        assert_eq!(ranked[1].candidate.config, "nb=8192 h=300 l=3");
    }

    #[test]
    fn tie_prefers_smaller_model() {
        let big = ArchCandidate::new("big", "", 200.0, 15.0);
        let small = ArchCandidate::new("small", "", 100.0, 12.0);
        let ranked = rank_architectures(vec![big, small], 300.0).unwrap();
        assert_eq!(ranked[0].score, ranked[1].score);
        assert_eq!(ranked[0].candidate.config, "small");
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        let ranked = rank_architectures(table1_candidates(), 512.0).unwrap();
        write_ranking(&mut buf, &ranked).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("config,label,mem_mb,sir_db,score\n"));
        let back = read_candidates(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 20);
        assert_eq!(back[0], ranked[0].candidate);
    }
}
