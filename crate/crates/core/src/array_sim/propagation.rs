use std::f64::consts::PI;

use realfft::RealFftPlanner;
use rustfft::num_complex::Complex64;

use super::ArrayGeometry;
use crate::audio::TimeSignal;
use crate::error::{Error, Result};

/// Far-field arrival delay (seconds) of a plane wave from `doa_deg` at
/// microphone `mic` relative to the reference microphone (index 0).
pub fn farfield_delay(geometry: &ArrayGeometry, mic: usize, doa_deg: f64) -> Result<f64> {
    let pos = geometry.mics().get(mic).ok_or_else(|| {
        Error::invalid(format!(
            "microphone index {mic} out of range for {} microphones",
            geometry.num_mics()
        ))
    })?;
    Ok(-(pos.radius / geometry.speed_of_sound()) * cos_deg(pos.angle_deg - doa_deg))
}

/// Cosine of an angle in degrees, exactly zero at odd multiples of 90°.
fn cos_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(180.0);
    if r == 90.0 {
        0.0
    } else {
        deg.to_radians().cos()
    }
}

fn spectrum(signal: &TimeSignal, planner: &mut RealFftPlanner<f64>) -> Vec<Complex64> {
    let fft = planner.plan_fft_forward(signal.len());
    let mut input = signal.samples().to_vec();
    let mut out = fft.make_output_vec();
    fft.process(&mut input, &mut out)
        .expect("buffer sizes come from the plan");
    out
}

/// Multiplies by `e^{-i 2 pi f d}`. On even lengths the Nyquist bin must stay
/// real, so it only receives the real part of the factor.
fn rotate(spec: &mut [Complex64], delay: f64, len: usize, sample_rate: u32, gain: f64) {
    let fs = sample_rate as f64;
    let nyquist = len.is_multiple_of(2).then_some(len / 2);
    for (k, bin) in spec.iter_mut().enumerate() {
        let freq = k as f64 * fs / len as f64;
        let phase = -2.0 * PI * freq * delay;
        let factor = if Some(k) == nyquist {
            Complex64::new(phase.cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, phase)
        };
        *bin *= factor * gain;
    }
}

fn synthesize(
    mut spec: Vec<Complex64>,
    len: usize,
    sample_rate: u32,
    planner: &mut RealFftPlanner<f64>,
) -> Result<TimeSignal> {
    let ifft = planner.plan_fft_inverse(len);
    spec[0].im = 0.0;
    if len.is_multiple_of(2) {
        spec[len / 2].im = 0.0;
    }
    let mut out = ifft.make_output_vec();
    ifft.process(&mut spec, &mut out)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let scale = 1.0 / len as f64;
    TimeSignal::new(out.into_iter().map(|v| v * scale).collect(), sample_rate)
}

/// Circular fractional delay by phase rotation in the frequency domain.
pub fn delay_signal(signal: &TimeSignal, delay: f64) -> Result<TimeSignal> {
    if !delay.is_finite() || delay.abs() >= signal.duration_secs() {
        return Err(Error::invalid(format!(
            "delay {delay} s is not shorter than the signal ({} s)",
            signal.duration_secs()
        )));
    }
    if delay == 0.0 {
        return Ok(signal.clone());
    }
    let mut planner = RealFftPlanner::new();
    let mut spec = spectrum(signal, &mut planner);
    rotate(&mut spec, delay, signal.len(), signal.sample_rate(), 1.0);
    synthesize(spec, signal.len(), signal.sample_rate(), &mut planner)
}

/// Signals observed at every microphone for plane-wave sources at the given
/// DOAs (degrees). The reference microphone gets the plain sum.
pub fn simulate_mixture(
    sources: &[(TimeSignal, f64)],
    geometry: &ArrayGeometry,
) -> Result<Vec<TimeSignal>> {
    let (first, _) = sources
        .first()
        .ok_or_else(|| Error::invalid("at least one source is required"))?;
    for (s, doa) in sources {
        first.check_compatible(s)?;
        if !doa.is_finite() {
            return Err(Error::invalid("source DOA must be finite"));
        }
    }
    let len = first.len();
    let rate = first.sample_rate();
    let mut planner = RealFftPlanner::new();
    let spectra: Vec<Vec<Complex64>> = sources
        .iter()
        .map(|(s, _)| spectrum(s, &mut planner))
        .collect();

    let mut mics = Vec::with_capacity(geometry.num_mics());
    mics.push(TimeSignal::sum(sources.iter().map(|(s, _)| s))?);
    for m in 1..geometry.num_mics() {
        let mut acc = vec![Complex64::new(0.0, 0.0); len / 2 + 1];
        for ((_, doa), spec) in sources.iter().zip(&spectra) {
            let delay = farfield_delay(geometry, m, *doa)?;
            let mut rotated = spec.clone();
            rotate(&mut rotated, delay, len, rate, 1.0);
            acc.iter_mut().zip(&rotated).for_each(|(a, r)| *a += r);
        }
        mics.push(synthesize(acc, len, rate, &mut planner)?);
    }
    Ok(mics)
}
