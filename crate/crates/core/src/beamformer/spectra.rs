use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex64;

use crate::array_sim::{farfield_delay, ArrayGeometry};
use crate::error::{Error, Result};

/// M×N full spectra of one analysis frame; row 0 is the reference microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSpectra {
    bins: Array2<Complex64>,
    sample_rate: u32,
}

impl MultichannelSpectra {
    pub fn new(bins: Array2<Complex64>, sample_rate: u32) -> Result<Self> {
        let (m, n) = bins.dim();
        if m < 2 {
            return Err(Error::invalid(format!("need at least 2 microphones, got {m}")));
        }
        if n == 0 || n % 2 != 0 {
            return Err(Error::invalid(format!("window length must be positive and even, got {n}")));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Self { bins, sample_rate })
    }

    pub fn bins(&self) -> &Array2<Complex64> {
        &self.bins
    }

    pub fn num_mics(&self) -> usize {
        self.bins.nrows()
    }

    pub fn window_len(&self) -> usize {
        self.bins.ncols()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Signed frequency (Hz) of bin `f`; bins above N/2 are negative frequencies.
    pub fn bin_frequency(&self, f: usize) -> f64 {
        signed_frequency(f, self.window_len(), self.sample_rate)
    }
}

pub(crate) fn signed_frequency(f: usize, n: usize, sample_rate: u32) -> f64 {
    let k = if f <= n / 2 { f as f64 } else { f as f64 - n as f64 };
    k * sample_rate as f64 / n as f64
}

/// Per-microphone, per-bin steering factors `e^{i 2 pi f t_m}`.
pub(crate) fn steering_factors(
    geometry: &ArrayGeometry,
    doa_deg: f64,
    n: usize,
    sample_rate: u32,
) -> Result<Array2<Complex64>> {
    let delays = (0..geometry.num_mics())
        .map(|m| farfield_delay(geometry, m, doa_deg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Array2::from_shape_fn((delays.len(), n), |(m, f)| {
        if delays[m] == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, 2.0 * PI * signed_frequency(f, n, sample_rate) * delays[m])
        }
    }))
}

/// Rotates each row so that a plane wave from `doa_deg` is in phase on every
/// microphone. Magnitudes are untouched; the reference row is unchanged.
pub fn phase_align(
    x: &MultichannelSpectra,
    doa_deg: f64,
    geometry: &ArrayGeometry,
) -> Result<MultichannelSpectra> {
    if geometry.num_mics() != x.num_mics() {
        return Err(Error::invalid(format!(
            "geometry has {} microphones, spectra have {}",
            geometry.num_mics(),
            x.num_mics()
        )));
    }
    let factors = steering_factors(geometry, doa_deg, x.window_len(), x.sample_rate())?;
    Ok(MultichannelSpectra {
        bins: &x.bins * &factors,
        sample_rate: x.sample_rate,
    })
}

/// Maps an angle to (-pi, pi].
pub fn wrap_phase(d: f64) -> f64 {
    let mut w = d % (2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    } else if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

/// Mean over all microphone pairs of the absolute wrapped phase difference,
/// per bin. Every value lies in [0, pi].
pub fn mean_pairwise_phase_diff(x: &MultichannelSpectra) -> Vec<f64> {
    let m = x.num_mics();
    let pairs = (m * (m - 1) / 2) as f64;
    let phases = x.bins().mapv(|c| c.arg());
    (0..x.window_len())
        .map(|f| {
            let col = phases.column(f);
            let mut total = 0.0;
            for i in 0..m - 1 {
                for j in i + 1..m {
                    total += wrap_phase(col[i] - col[j]).abs();
                }
            }
            total / pairs
        })
        .collect()
}

/// Complementary binary frequency masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyMaskPair {
    soi: Vec<bool>,
}

impl FrequencyMaskPair {
    pub fn from_soi(soi: Vec<bool>) -> Self {
        Self { soi }
    }

    pub fn len(&self) -> usize {
        self.soi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soi.is_empty()
    }

    pub fn soi(&self) -> &[bool] {
        &self.soi
    }

    pub fn soi_at(&self, f: usize) -> bool {
        self.soi[f]
    }

    pub fn int_at(&self, f: usize) -> bool {
        !self.soi[f]
    }

    pub fn interference(&self) -> Vec<bool> {
        self.soi.iter().map(|b| !b).collect()
    }

    /// Forces the given bins into the interference mask.
    pub fn assign_to_interference(&mut self, bins: &[usize]) {
        for &f in bins {
            if let Some(b) = self.soi.get_mut(f) {
                *b = false;
            }
        }
    }
}

/// SOI mask is set where the phase difference is at most `phi_max` (inclusive).
pub fn make_masks(phase_diff: &[f64], phi_max: f64) -> FrequencyMaskPair {
    FrequencyMaskPair {
        soi: phase_diff.iter().map(|&d| d <= phi_max).collect(),
    }
}

/// Applies both masks to the reference row: `(Z_SOI, Z_INT)`.
pub fn apply_masks(
    x: &MultichannelSpectra,
    masks: &FrequencyMaskPair,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if masks.len() != x.window_len() {
        return Err(Error::shape(format!(
            "mask length {} does not match window length {}",
            masks.len(),
            x.window_len()
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let reference = x.bins().row(0);
    let soi = reference
        .iter()
        .zip(masks.soi())
        .map(|(&v, &keep)| if keep { v } else { zero })
        .collect();
    let int = reference
        .iter()
        .zip(masks.soi())
        .map(|(&v, &keep)| if keep { zero } else { v })
        .collect();
    Ok((soi, int))
}
