use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Zip};
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;

use super::TimeSignal;
use crate::error::{Error, Result};
use crate::BinaryGrid;

/// Periodic Hann window; two copies offset by half a window sum to exactly one.
pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Half-spectrum STFT of a real signal. Frame `t` is centred on sample
/// `t * hop`, with zeros outside the signal, so `T = padded_len / hop + 1`.
#[derive(Clone, PartialEq)]
pub struct Spectrogram {
    bins: Array2<Complex64>,
    frame_len: usize,
    hop: usize,
    sample_rate: u32,
    signal_len: usize,
}

impl fmt::Debug for Spectrogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectrogram")
            .field("frames", &self.num_frames())
            .field("bins", &self.num_bins())
            .field("frame_len", &self.frame_len)
            .field("hop", &self.hop)
            .field("sample_rate", &self.sample_rate)
            .field("signal_len", &self.signal_len)
            .finish()
    }
}

impl Spectrogram {
    /// Wraps raw bins. Checks `F = frame_len/2 + 1` and the frame count
    /// implied by `signal_len`.
    pub fn from_parts(
        bins: Array2<Complex64>,
        frame_len: usize,
        hop: usize,
        sample_rate: u32,
        signal_len: usize,
    ) -> Result<Self> {
        check_geometry(frame_len, hop)?;
        let (t, f) = bins.dim();
        if f != frame_len / 2 + 1 {
            return Err(Error::invalid(format!(
                "spectrogram has {f} bins, expected {}",
                frame_len / 2 + 1
            )));
        }
        if t != expected_frames(signal_len, hop) {
            return Err(Error::invalid(format!(
                "spectrogram has {t} frames, expected {} for {signal_len} samples",
                expected_frames(signal_len, hop)
            )));
        }
        Ok(Self {
            bins,
            frame_len,
            hop,
            sample_rate,
            signal_len,
        })
    }

    pub fn bins(&self) -> &Array2<Complex64> {
        &self.bins
    }

    pub fn num_frames(&self) -> usize {
        self.bins.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.bins.ncols()
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn magnitudes(&self) -> Array2<f64> {
        self.bins.mapv(|c| c.norm())
    }

    /// Keeps bins where `mask` is set and zeroes the rest.
    pub fn masked(&self, mask: &BinaryGrid) -> Result<Self> {
        if mask.dim() != self.bins.dim() {
            return Err(Error::shape(format!(
                "mask {:?} does not match spectrogram {:?}",
                mask.dim(),
                self.bins.dim()
            )));
        }
        let mut bins = self.bins.clone();
        Zip::from(&mut bins).and(mask).for_each(|b, &keep| {
            if !keep {
                *b = Complex64::new(0.0, 0.0);
            }
        });
        Ok(Self { bins, ..*self })
    }
}

fn check_geometry(frame_len: usize, hop: usize) -> Result<()> {
    if frame_len == 0 || !frame_len.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "frame length must be positive and even, got {frame_len}"
        )));
    }
    if hop != frame_len / 2 {
        return Err(Error::invalid(format!(
            "hop must be half the frame length ({}), got {hop}",
            frame_len / 2
        )));
    }
    Ok(())
}

fn padded_len(signal_len: usize, hop: usize) -> usize {
    signal_len.div_ceil(hop) * hop
}

fn expected_frames(signal_len: usize, hop: usize) -> usize {
    padded_len(signal_len, hop) / hop + 1
}

/// Reusable FFT plans and window for one frame length.
#[derive(Clone)]
pub struct StftPlan {
    frame_len: usize,
    window: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StftPlan")
            .field("frame_len", &self.frame_len)
            .finish()
    }
}

impl StftPlan {
    pub fn new(frame_len: usize) -> Result<Self> {
        check_geometry(frame_len, frame_len / 2)?;
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self {
            frame_len,
            window: hann_periodic(frame_len),
            forward: planner.plan_fft_forward(frame_len),
            inverse: planner.plan_fft_inverse(frame_len),
        })
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.frame_len / 2
    }

    pub fn num_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    /// Number of frames produced for a signal of `signal_len` samples.
    pub fn num_frames(&self, signal_len: usize) -> usize {
        expected_frames(signal_len, self.hop())
    }

    pub fn forward(&self, signal: &TimeSignal) -> Result<Spectrogram> {
        let n = self.frame_len;
        let hop = self.hop();
        let x = signal.samples();
        let frames = self.num_frames(x.len());
        let mut bins = Array2::<Complex64>::zeros((frames, n / 2 + 1));
        let mut frame = self.forward.make_input_vec();
        let mut spectrum = self.forward.make_output_vec();
        let mut scratch = self.forward.make_scratch_vec();

        for t in 0..frames {
            // frame t spans [t*hop - hop, t*hop + hop)
            let start = (t * hop) as isize - hop as isize;
            for (k, v) in frame.iter_mut().enumerate() {
                let idx = start + k as isize;
                *v = if idx >= 0 && (idx as usize) < x.len() {
                    x[idx as usize] * self.window[k]
                } else {
                    0.0
                };
            }
            self.forward
                .process_with_scratch(&mut frame, &mut spectrum, &mut scratch)
                .map_err(|e| Error::Numerical(e.to_string()))?;
            bins.row_mut(t)
                .iter_mut()
                .zip(&spectrum)
                .for_each(|(b, s)| *b = *s);
        }

        Spectrogram::from_parts(bins, n, hop, signal.sample_rate(), x.len())
    }

    /// Weighted overlap-add inverse: each frame is re-windowed and the sum is
    /// divided by the overlapped squared window.
    pub fn inverse(&self, spec: &Spectrogram) -> Result<TimeSignal> {
        if spec.frame_len() != self.frame_len {
            return Err(Error::invalid(format!(
                "spectrogram frame length {} does not match plan {}",
                spec.frame_len(),
                self.frame_len
            )));
        }
        let n = self.frame_len;
        let hop = self.hop();
        let out_len = padded_len(spec.signal_len(), hop);
        let mut acc = vec![0.0; out_len];
        let mut norm = vec![0.0; out_len];
        let mut spectrum = self.inverse.make_input_vec();
        let mut frame = self.inverse.make_output_vec();
        let mut scratch = self.inverse.make_scratch_vec();
        let scale = 1.0 / n as f64;
        let last = spectrum.len() - 1;

        for (t, row) in spec.bins().rows().into_iter().enumerate() {
            spectrum.iter_mut().zip(row).for_each(|(s, b)| *s = *b);
            // DC and Nyquist of a real frame are real
            spectrum[0].im = 0.0;
            spectrum[last].im = 0.0;
            self.inverse
                .process_with_scratch(&mut spectrum, &mut frame, &mut scratch)
                .map_err(|e| Error::Numerical(e.to_string()))?;
            let start = (t * hop) as isize - hop as isize;
            for k in 0..n {
                let idx = start + k as isize;
                if idx < 0 || idx as usize >= out_len {
                    continue;
                }
                let w = self.window[k];
                acc[idx as usize] += frame[k] * scale * w;
                norm[idx as usize] += w * w;
            }
        }

        let samples = acc
            .iter()
            .zip(&norm)
            .take(spec.signal_len())
            .map(|(a, w)| if *w > 1e-12 { a / w } else { 0.0 })
            .collect();
        TimeSignal::new(samples, spec.sample_rate())
    }
}

/// One-shot STFT with a periodic Hann window. `hop` must equal `frame_len / 2`.
pub fn stft(signal: &TimeSignal, frame_len: usize, hop: usize) -> Result<Spectrogram> {
    check_geometry(frame_len, hop)?;
    StftPlan::new(frame_len)?.forward(signal)
}

pub fn istft(spec: &Spectrogram) -> Result<TimeSignal> {
    check_geometry(spec.frame_len(), spec.hop())?;
    StftPlan::new(spec.frame_len())?.inverse(spec)
}
