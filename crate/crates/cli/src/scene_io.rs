//! On-disk scene layout written by `simulate` and read back by `train`:
//! `mic_<m>.wav`, `source_<k>.wav` (source 0 is the SOI), `geometry.txt`,
//! `scene.txt` and `ideal_soi.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use phasemask::array_sim::{ideal_masks, ArrayGeometry, Scene, SceneSource};
use phasemask::audio::{wav, StftPlan, TimeSignal};
use phasemask::BinaryGrid;

pub fn write_scene(dir: &Path, scene: &Scene) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (m, mic) in scene.mic_signals.iter().enumerate() {
        wav::write_wav(dir.join(format!("mic_{m}.wav")), &[mic])?;
    }
    for (k, src) in scene.sources.iter().enumerate() {
        wav::write_wav(dir.join(format!("source_{k}.wav")), &[&src.signal])?;
    }
    fs::write(dir.join("geometry.txt"), scene.geometry.to_text())?;
    fs::write(dir.join("scene.txt"), scene.descriptor())?;
    fs::write(dir.join("ideal_soi.txt"), mask_text(&scene.ideal_soi))?;
    Ok(())
}

/// One row of `0`/`1` per frame, one character per frequency bin.
fn mask_text(mask: &BinaryGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# frames={} bins={}", mask.nrows(), mask.ncols());
    for row in mask.rows() {
        out.extend(row.iter().map(|&b| if b { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| {
        let (k, v) = l.split_once('=')?;
        (k.trim() == key).then(|| v.trim())
    })
}

fn numbered(dir: &Path, prefix: &str) -> Vec<PathBuf> {
    (0..)
        .map(|i| dir.join(format!("{prefix}_{i}.wav")))
        .take_while(|p| p.exists())
        .collect()
}

pub fn read_scene(dir: &Path) -> Result<Scene> {
    let descriptor = fs::read_to_string(dir.join("scene.txt"))
        .with_context(|| format!("reading {}", dir.join("scene.txt").display()))?;
    let geometry = ArrayGeometry::load(dir.join("geometry.txt"))?;
    let read = |paths: Vec<PathBuf>| -> Result<Vec<TimeSignal>> {
        paths
            .iter()
            .map(|p| {
                let mut ch = wav::read_wav(p)?;
                if ch.len() != 1 {
                    bail!("{}: expected a mono file", p.display());
                }
                Ok(ch.remove(0))
            })
            .collect()
    };
    let mic_signals = read(numbered(dir, "mic"))?;
    let signals = read(numbered(dir, "source"))?;
    if mic_signals.len() != geometry.num_mics() {
        bail!(
            "{}: {} microphone files for a {}-microphone geometry",
            dir.display(),
            mic_signals.len(),
            geometry.num_mics()
        );
    }
    let doas: Vec<f64> = field(&descriptor, "doas_deg")
        .context("scene.txt lacks doas_deg")?
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .context("bad doas_deg")?;
    if doas.len() != signals.len() || signals.is_empty() {
        bail!("{}: {} DOAs for {} source files", dir.display(), doas.len(), signals.len());
    }
    let frame_len: usize = field(&descriptor, "mask_frame_len")
        .unwrap_or("512")
        .parse()
        .context("bad mask_frame_len")?;
    let seed = field(&descriptor, "seed").and_then(|s| s.parse().ok()).unwrap_or(0);

    let soi = &signals[0];
    let interference = if signals.len() > 1 {
        TimeSignal::sum(&signals[1..])?
    } else {
        TimeSignal::zeros(soi.len(), soi.sample_rate())?
    };
    let (ideal_soi, ideal_int) = ideal_masks(soi, &interference, &StftPlan::new(frame_len)?)?;
    let sources = signals
        .into_iter()
        .zip(doas)
        .enumerate()
        .map(|(k, (signal, doa_deg))| SceneSource {
            signal,
            doa_deg,
            corpus_index: k,
            offset: 0,
        })
        .collect();
    Ok(Scene {
        seed,
        sources,
        geometry,
        mic_signals,
        soi_index: 0,
        ideal_soi,
        ideal_int,
        frame_len,
    })
}

/// Scene directories directly below `root`, in name order.
pub fn scene_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .with_context(|| format!("reading {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("scene.txt").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}
