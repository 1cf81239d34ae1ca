use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::spectra::steering_factors;
use super::{apply_masks, make_masks, mean_pairwise_phase_diff, MultichannelSpectra};
use crate::array_sim::ArrayGeometry;
use crate::audio::{hann_periodic, TimeSignal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamformerConfig {
    /// Analysis window N in samples; frames overlap by half.
    pub window_len: usize,
    /// Output buffer length N_B; a multiple of `window_len`.
    pub buffer_len: usize,
    /// Phase-difference threshold in radians.
    pub phi_max: f64,
    pub sample_rate: u32,
}

impl Default for BeamformerConfig {
    fn default() -> Self {
        Self {
            window_len: 1024,
            buffer_len: 16384,
            phi_max: PI / 3.0,
            sample_rate: 16_000,
        }
    }
}

impl BeamformerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || !self.window_len.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "beamformer window must be positive and even, got {}",
                self.window_len
            )));
        }
        if self.buffer_len == 0 || !self.buffer_len.is_multiple_of(self.window_len) {
            return Err(Error::invalid(format!(
                "buffer length {} is not a multiple of the window length {}",
                self.buffer_len, self.window_len
            )));
        }
        if !(self.phi_max > 0.0 && self.phi_max <= PI) {
            return Err(Error::invalid(format!("phi_max must lie in (0, pi], got {}", self.phi_max)));
        }
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(())
    }
}

/// One N_B-sample block of beamformer output, aligned sample-for-sample
/// with the reference microphone input starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerOutput {
    pub start: usize,
    pub soi: TimeSignal,
    pub interference: TimeSignal,
    pub reference: TimeSignal,
}

/// Incremental beamformer for one multichannel stream. Input is consumed
/// in arbitrary chunks; output appears in whole N_B buffers with a latency
/// of half a window plus the buffer fill time.
pub struct BeamformerStream {
    cfg: BeamformerConfig,
    num_mics: usize,
    window: Vec<f64>,
    steering: Array2<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    frame: Vec<Vec<f64>>,
    filled: usize,
    frames_done: usize,
    tail_soi: Vec<f64>,
    tail_int: Vec<f64>,
    pending_ref: VecDeque<f64>,
    out_soi: Vec<f64>,
    out_int: Vec<f64>,
    out_ref: Vec<f64>,
    samples_in: usize,
    emitted: usize,
}

impl fmt::Debug for BeamformerStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BeamformerStream")
            .field("cfg", &self.cfg)
            .field("num_mics", &self.num_mics)
            .field("samples_in", &self.samples_in)
            .field("emitted", &self.emitted)
            .finish()
    }
}

impl BeamformerStream {
    pub fn new(geometry: &ArrayGeometry, doa_deg: f64, cfg: BeamformerConfig) -> Result<Self> {
        cfg.validate()?;
        if !(-90.0..=90.0).contains(&doa_deg) {
            return Err(Error::invalid(format!("DOA {doa_deg}° outside [-90°, 90°]")));
        }
        let n = cfg.window_len;
        let hop = n / 2;
        let mut planner = FftPlanner::new();
        let num_mics = geometry.num_mics();
        Ok(Self {
            cfg,
            num_mics,
            window: hann_periodic(n),
            steering: steering_factors(geometry, doa_deg, n, cfg.sample_rate)?,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            // the first half-frame is the zero padding before the signal
            frame: vec![vec![0.0; n]; num_mics],
            filled: 0,
            frames_done: 0,
            tail_soi: vec![0.0; hop],
            tail_int: vec![0.0; hop],
            pending_ref: VecDeque::new(),
            out_soi: Vec::new(),
            out_int: Vec::new(),
            out_ref: Vec::new(),
            samples_in: 0,
            emitted: 0,
        })
    }

    pub fn config(&self) -> &BeamformerConfig {
        &self.cfg
    }

    /// Feeds one chunk per microphone (equal lengths) and returns any buffers completed.
    pub fn push(&mut self, chunk: &[&[f64]]) -> Result<Vec<BeamformerOutput>> {
        if chunk.len() != self.num_mics {
            return Err(Error::invalid(format!(
                "expected {} channels, got {}",
                self.num_mics,
                chunk.len()
            )));
        }
        let len = chunk[0].len();
        if chunk.iter().any(|c| c.len() != len) {
            return Err(Error::invalid("channel chunks differ in length"));
        }
        self.samples_in += len;
        self.pending_ref.extend(chunk[0].iter().copied());
        self.feed(chunk, len)?;
        Ok(self.drain())
    }

    /// Pads the stream with silence so every real input sample reaches the
    /// output, then returns the remaining complete buffers.
    pub fn flush(&mut self) -> Result<Vec<BeamformerOutput>> {
        let hop = self.cfg.window_len / 2;
        let pad = (hop - self.filled) % hop + hop;
        let zeros = vec![0.0; pad];
        let chunk: Vec<&[f64]> = (0..self.num_mics).map(|_| zeros.as_slice()).collect();
        self.pending_ref.extend(std::iter::repeat_n(0.0, pad));
        self.feed(&chunk, pad)?;
        Ok(self.drain())
    }

    fn feed(&mut self, chunk: &[&[f64]], len: usize) -> Result<()> {
        let n = self.cfg.window_len;
        let hop = n / 2;
        let mut pos = 0;
        while pos < len {
            let take = (hop - self.filled).min(len - pos);
            for (frame, ch) in self.frame.iter_mut().zip(chunk) {
                frame[hop + self.filled..hop + self.filled + take]
                    .copy_from_slice(&ch[pos..pos + take]);
            }
            self.filled += take;
            pos += take;
            if self.filled == hop {
                self.process_frame()?;
                for frame in &mut self.frame {
                    frame.copy_within(hop.., 0);
                }
                self.filled = 0;
            }
        }
        Ok(())
    }

    fn process_frame(&mut self) -> Result<()> {
        let n = self.cfg.window_len;
        let hop = n / 2;
        let mut bins = Array2::<Complex64>::zeros((self.num_mics, n));
        for (m, frame) in self.frame.iter().enumerate() {
            let mut row: Vec<Complex64> = frame
                .iter()
                .zip(&self.window)
                .map(|(x, w)| Complex64::new(x * w, 0.0))
                .collect();
            self.fft.process(&mut row);
            bins.row_mut(m).iter_mut().zip(row).for_each(|(b, v)| *b = v);
        }
        let x = MultichannelSpectra::new(bins, self.cfg.sample_rate)?;
        let aligned = MultichannelSpectra::new(x.bins() * &self.steering, self.cfg.sample_rate)?;
        let diff = mean_pairwise_phase_diff(&aligned);
        let mut masks = make_masks(&diff, self.cfg.phi_max);
        // DC and Nyquist carry no usable phase
        masks.assign_to_interference(&[0, hop]);
        // mirror the lower half so the masked spectra stay conjugate-symmetric
        let mut soi = masks.soi().to_vec();
        for f in 1..hop {
            soi[n - f] = soi[f];
        }
        let masks = super::FrequencyMaskPair::from_soi(soi);
        let (mut z_soi, mut z_int) = apply_masks(&x, &masks)?;
        self.ifft.process(&mut z_soi);
        self.ifft.process(&mut z_int);
        let scale = 1.0 / n as f64;

        if self.frames_done > 0 {
            for k in 0..hop {
                self.out_soi.push(self.tail_soi[k] + z_soi[k].re * scale);
                self.out_int.push(self.tail_int[k] + z_int[k].re * scale);
            }
            self.out_ref.extend(self.pending_ref.drain(..hop));
        }
        for k in 0..hop {
            self.tail_soi[k] = z_soi[hop + k].re * scale;
            self.tail_int[k] = z_int[hop + k].re * scale;
        }
        self.frames_done += 1;
        Ok(())
    }

    fn drain(&mut self) -> Vec<BeamformerOutput> {
        let nb = self.cfg.buffer_len;
        let rate = self.cfg.sample_rate;
        let mut out = Vec::new();
        while self.out_soi.len() >= nb && self.emitted + nb <= self.samples_in {
            let take = |v: &mut Vec<f64>| {
                let rest = v.split_off(nb);
                std::mem::replace(v, rest)
            };
            let soi = take(&mut self.out_soi);
            let int = take(&mut self.out_int);
            let reference = take(&mut self.out_ref);
            out.push(BeamformerOutput {
                start: self.emitted,
                soi: TimeSignal::new(soi, rate).expect("finite output of finite input"),
                interference: TimeSignal::new(int, rate).expect("finite output of finite input"),
                reference: TimeSignal::new(reference, rate).expect("finite input"),
            });
            self.emitted += nb;
        }
        out
    }
}

/// Runs whole signals through a [`BeamformerStream`], returning every
/// complete N_B buffer.
pub fn process_stream(
    mic_signals: &[TimeSignal],
    doa_deg: f64,
    geometry: &ArrayGeometry,
    cfg: BeamformerConfig,
) -> Result<Vec<BeamformerOutput>> {
    if mic_signals.len() != geometry.num_mics() {
        return Err(Error::invalid(format!(
            "{} signals for a {}-microphone geometry",
            mic_signals.len(),
            geometry.num_mics()
        )));
    }
    let first = &mic_signals[0];
    for s in mic_signals {
        first.check_compatible(s)?;
    }
    if first.sample_rate() != cfg.sample_rate {
        return Err(Error::invalid(format!(
            "signals are {} Hz, beamformer configured for {} Hz",
            first.sample_rate(),
            cfg.sample_rate
        )));
    }
    if first.len() < cfg.buffer_len {
        return Err(Error::invalid(format!(
            "signals of {} samples are shorter than one {}-sample buffer",
            first.len(),
            cfg.buffer_len
        )));
    }
    let mut stream = BeamformerStream::new(geometry, doa_deg, cfg)?;
    let chunk: Vec<&[f64]> = mic_signals.iter().map(|s| s.samples()).collect();
    let mut out = stream.push(&chunk)?;
    out.extend(stream.flush()?);
    Ok(out)
}
