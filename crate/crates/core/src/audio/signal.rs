use std::ops::{Add, Sub};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// A finite, non-empty mono signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl TimeSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal must not be empty"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Copy of `len` samples starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.samples.len() {
            return Err(Error::invalid(format!(
                "slice [{start}, {}) exceeds signal length {}",
                start + len,
                self.samples.len()
            )));
        }
        Self::new(self.samples[start..start + len].to_vec(), self.sample_rate)
    }

    /// Sample-wise sum of equal-length signals.
    pub fn sum<'a>(signals: impl IntoIterator<Item = &'a TimeSignal>) -> Result<Self> {
        let mut iter = signals.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::invalid("cannot sum an empty set of signals"))?;
        let mut acc = first.clone();
        for s in iter {
            acc.check_compatible(s)?;
            for (a, b) in acc.samples.iter_mut().zip(&s.samples) {
                *a += b;
            }
        }
        Ok(acc)
    }

    pub(crate) fn check_compatible(&self, other: &TimeSignal) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "signal length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        if self.sample_rate != other.sample_rate {
            return Err(Error::invalid(format!(
                "sample rate mismatch: {} vs {}",
                self.sample_rate, other.sample_rate
            )));
        }
        Ok(())
    }
}

impl Add for &TimeSignal {
    type Output = TimeSignal;

    /// Panics on length mismatch; use [`TimeSignal::sum`] for a checked sum.
    fn add(self, rhs: &TimeSignal) -> TimeSignal {
        assert_eq!(self.len(), rhs.len(), "signal length mismatch");
        TimeSignal {
            samples: self.samples.iter().zip(&rhs.samples).map(|(a, b)| a + b).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

impl Sub for &TimeSignal {
    type Output = TimeSignal;

    fn sub(self, rhs: &TimeSignal) -> TimeSignal {
        assert_eq!(self.len(), rhs.len(), "signal length mismatch");
        TimeSignal {
            samples: self.samples.iter().zip(&rhs.samples).map(|(a, b)| a - b).collect(),
            sample_rate: self.sample_rate,
        }
    }
}
