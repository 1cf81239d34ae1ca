use std::io::Write;

use serde::{Deserialize, Serialize};

use super::arch::csv_io;
use super::sir::{sir, SirResult};
use crate::array_sim::{generate_scene, GeometryKind, Scene, SceneOptions, DOA_GRID};
use crate::audio::TimeSignal;
use crate::blstm::{NetworkWeights, Real};
use crate::error::{Error, Result};
use crate::pipeline::{PipelineConfig, Separator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub trials: usize,
    /// Trial `k` uses scene seed `seed + k`, so every parameter value sees the same seeds.
    pub seed: u64,
    /// Scene length in samples.
    pub scene_len: usize,
    pub continuous_doa: bool,
}

impl SweepSettings {
    pub fn new(trials: usize, seed: u64, scene_len: usize) -> Self {
        Self {
            trials,
            seed,
            scene_len,
            continuous_doa: false,
        }
    }

    fn scene_options(&self, sources: usize, cfg: &PipelineConfig) -> SceneOptions {
        SceneOptions {
            frame_len: cfg.network.frame_len,
            continuous_doa: self.continuous_doa,
            ..SceneOptions::new(sources, self.scene_len)
        }
    }
}

/// SIR of the network output and of the beamformer SOI estimate on one scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SceneScore {
    pub output: SirResult,
    pub beamformer: SirResult,
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep: String,
    pub param: String,
    pub trial: usize,
    pub seed: u64,
    pub sir_db: f64,
    pub sir_beamformer_db: f64,
}

/// Separates `scene` steered at its SOI and scores both stages against the
/// clean sources over the whole scene.
pub fn evaluate_scene<A: Real>(separator: &Separator<A>, scene: &Scene) -> Result<SceneScore> {
    let out = separator.run(&scene.mic_signals, scene.soi_doa())?;
    let target = &scene.soi().signal;
    let interferers: Vec<&TimeSignal> = scene.interferers();
    Ok(SceneScore {
        output: sir(&out.soi, target, &interferers)?,
        beamformer: sir(&out.beamformer_soi, target, &interferers)?,
    })
}

fn run_trials<A: Real>(
    separator: &Separator<A>,
    corpus: &[TimeSignal],
    options: &SceneOptions,
    settings: &SweepSettings,
    sweep: &str,
    param: &str,
) -> Result<Vec<SweepRow>> {
    (0..settings.trials)
        .map(|trial| {
            let seed = settings.seed.wrapping_add(trial as u64);
            let scene = generate_scene(corpus, options, separator.geometry(), seed)?;
            let score = evaluate_scene(separator, &scene)?;
            log::debug!("{sweep} {param} trial {trial}: {:.2} dB", score.output.sir_db);
            Ok(SweepRow {
                sweep: sweep.into(),
                param: param.into(),
                trial,
                seed,
                sir_db: score.output.sir_db,
                sir_beamformer_db: score.beamformer.sir_db,
            })
        })
        .collect()
}

/// Output and beamformer SIR as the number of simultaneous sources varies.
pub fn sweep_sources<A: Real>(
    separator: &Separator<A>,
    corpus: &[TimeSignal],
    source_counts: &[usize],
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>> {
    for &n in source_counts {
        if n == 0 {
            return Err(Error::invalid("source count must be positive"));
        }
        if !settings.continuous_doa && n > DOA_GRID.len() {
            return Err(Error::invalid(format!(
                "{n} sources exceed the {} available DOAs; enable continuous DOA sampling",
                DOA_GRID.len()
            )));
        }
    }
    let mut rows = Vec::new();
    for &n in source_counts {
        let opts = settings.scene_options(n, separator.config());
        rows.extend(run_trials(separator, corpus, &opts, settings, "sources", &n.to_string())?);
    }
    Ok(rows)
}

/// Output and beamformer SIR across array families and microphone counts,
/// reusing one set of weights. Polygons only run at their own vertex count;
/// the linear family runs at every count in `mic_counts`.
pub fn sweep_mics_and_geometry<A: Real>(
    weights: &NetworkWeights<A>,
    config: &PipelineConfig,
    kinds: &[GeometryKind],
    mic_counts: &[usize],
    corpus: &[TimeSignal],
    num_sources: usize,
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>> {
    let mut arrays = Vec::new();
    for &kind in kinds {
        match kind.vertices() {
            None => {
                for &m in mic_counts {
                    arrays.push((kind, m));
                }
            }
            Some(v) => arrays.push((kind, v)),
        }
    }
    if arrays.is_empty() {
        return Err(Error::invalid("no array configurations to sweep"));
    }
    let opts = settings.scene_options(num_sources, config);
    let mut rows = Vec::new();
    for (kind, m) in arrays {
        let separator = Separator::new(*config, kind.build(m)?, weights.clone())?;
        let param = format!("{kind}-{m}");
        rows.extend(run_trials(&separator, corpus, &opts, settings, "array", &param)?);
    }
    Ok(rows)
}

pub fn write_sweep(writer: impl Write, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r).map_err(csv_io)?;
    }
    if rows.is_empty() {
        w.write_record(["sweep", "param", "trial", "seed", "sir_db", "sir_beamformer_db"])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}
