//! Source material for scenes: WAV manifests and a synthetic speech-like corpus.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::RealFftPlanner;

use crate::audio::{wav, TimeSignal};
use crate::error::{Error, Result};

/// Fraction of the manifest used for training; the remainder is validation.
pub const TRAIN_FRACTION: f64 = 0.8;

/// One WAV path per line. Relative paths resolve against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::data(path, e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = PathBuf::from(l);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        })
        .collect())
}

pub fn load_corpus(paths: &[PathBuf], sample_rate: u32) -> Result<Vec<TimeSignal>> {
    if paths.is_empty() {
        return Err(Error::invalid("no sources available"));
    }
    paths.iter().map(|p| wav::read_mono(p, sample_rate)).collect()
}

/// Splits by manifest order: the first 80% (rounded up) train, the rest validate.
pub fn split_train_validation<T>(items: &[T]) -> (&[T], &[T]) {
    let cut = ((items.len() as f64 * TRAIN_FRACTION).ceil() as usize).min(items.len());
    items.split_at(cut)
}

/// Formant-shaped harmonic syllables and band-limited noise bursts separated
/// by short pauses, normalized to an RMS of 0.1.
pub fn synthetic_voice(len: usize, sample_rate: u32, seed: u64) -> Result<TimeSignal> {
    if len == 0 {
        return Err(Error::invalid("synthetic voice length must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = sample_rate as f64;
    let nyquist = fs / 2.0;
    let base_f0 = rng.gen_range(90.0..260.0);
    let mut out = vec![0.0; len];
    let mut pos = (rng.gen_range(0.0..0.1) * fs) as usize;

    while pos < len {
        let dur = ((rng.gen_range(0.08..0.35) * fs) as usize).min(len - pos);
        let gain = rng.gen_range(0.4..1.0);
        let segment = if rng.gen_bool(0.75) {
            voiced(&mut rng, dur, fs, base_f0, nyquist)
        } else {
            unvoiced(&mut rng, dur, fs)
        };
        let ramp = ((rng.gen_range(0.01..0.04) * fs) as usize).clamp(1, dur.max(2) / 2);
        for (i, v) in segment.into_iter().enumerate() {
            let edge = i.min(dur - 1 - i);
            let env = if edge < ramp {
                0.5 - 0.5 * (PI * edge as f64 / ramp as f64).cos()
            } else {
                1.0
            };
            out[pos + i] += gain * env * v;
        }
        pos += dur + (rng.gen_range(0.03..0.15) * fs) as usize;
    }

    let rms = (out.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v *= 0.1 / rms);
    }
    TimeSignal::new(out, sample_rate)
}

fn voiced(rng: &mut ChaCha8Rng, dur: usize, fs: f64, base_f0: f64, nyquist: f64) -> Vec<f64> {
    let f_start = base_f0 * rng.gen_range(0.85..1.15);
    let f_end = f_start * rng.gen_range(0.85..1.2);
    let formants = [
        (rng.gen_range(300.0..900.0), rng.gen_range(80.0..160.0), 1.0),
        (rng.gen_range(900.0..2500.0), rng.gen_range(100.0..220.0), rng.gen_range(0.3..0.8)),
        (rng.gen_range(2300.0..3600.0), rng.gen_range(150.0..300.0), rng.gen_range(0.1..0.4)),
    ];
    let envelope = |f: f64| {
        0.02 + formants
            .iter()
            .map(|(c, bw, g)| g * (-((f - c) / bw).powi(2)).exp())
            .sum::<f64>()
    };
    let max_harm = ((0.9 * nyquist.min(5000.0)) / f_start.min(f_end)) as usize;
    let mut phase = 0.0;
    (0..dur)
        .map(|i| {
            let frac = i as f64 / dur as f64;
            let f0 = f_start + (f_end - f_start) * frac;
            phase += 2.0 * PI * f0 / fs;
            (1..=max_harm)
                .map(|h| {
                    let f = h as f64 * f0;
                    envelope(f) / (h as f64).sqrt() * (h as f64 * phase).sin()
                })
                .sum()
        })
        .collect()
}

fn unvoiced(rng: &mut ChaCha8Rng, dur: usize, fs: f64) -> Vec<f64> {
    let lo: f64 = rng.gen_range(1500.0..4000.0);
    let hi: f64 = (lo + rng.gen_range(1000.0..3000.0)).min(0.45 * fs);
    let mut noise: Vec<f64> = (0..dur).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(dur);
    let ifft = planner.plan_fft_inverse(dur);
    let mut spec = fft.make_output_vec();
    fft.process(&mut noise, &mut spec).expect("planned sizes");
    for (k, bin) in spec.iter_mut().enumerate() {
        let f = k as f64 * fs / dur as f64;
        if f < lo || f > hi {
            *bin = 0.0.into();
        }
    }
    spec[0].im = 0.0;
    if dur.is_multiple_of(2) {
        spec[dur / 2].im = 0.0;
    }
    let mut out = ifft.make_output_vec();
    ifft.process(&mut spec, &mut out).expect("planned sizes");
    // roughly level-matched with the voiced segments
    out.iter().map(|v| 0.5 * v / (dur as f64).sqrt()).collect()
}

/// `count` synthetic voices of `len` samples with seeds derived from `seed`.
pub fn synthetic_corpus(count: usize, len: usize, sample_rate: u32, seed: u64) -> Result<Vec<TimeSignal>> {
    (0..count)
        .map(|i| synthetic_voice(len, sample_rate, seed.wrapping_mul(1_000_003).wrapping_add(i as u64)))
        .collect()
}
