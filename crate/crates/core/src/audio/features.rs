use std::ops::Deref;

use ndarray::Array2;

use super::Spectrogram;
use crate::error::{Error, Result};

/// Amplitude floor applied before the logarithm so silent bins stay finite.
pub const DB_FLOOR: f64 = 1e-9;

/// `20 log10(max(|bin|, floor))` for every bin.
pub fn to_db(spec: &Spectrogram, floor: f64) -> Array2<f64> {
    spec.bins().mapv(|c| 20.0 * c.norm().max(floor).log10())
}

/// Real features with zero median and unit standard deviation over the
/// whole matrix (or all zeros for a constant input).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Wraps an already-standardized matrix without re-checking it.
    pub fn from_raw(values: Array2<f64>) -> Self {
        Self(values)
    }
}

impl Deref for FeatureMatrix {
    type Target = Array2<f64>;

    fn deref(&self) -> &Array2<f64> {
        &self.0
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

pub fn standardize(features: &Array2<f64>) -> Result<FeatureMatrix> {
    if features.is_empty() {
        return Err(Error::invalid("cannot standardize an empty matrix"));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features contain non-finite values"));
    }
    let flat: Vec<f64> = features.iter().copied().collect();
    let n = flat.len() as f64;
    let med = median(&flat);
    let mean = flat.iter().sum::<f64>() / n;
    let var = flat.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = flat.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if std <= 1e-12 * scale {
        return Ok(FeatureMatrix(Array2::zeros(features.raw_dim())));
    }
    Ok(FeatureMatrix(features.mapv(|v| (v - med) / std)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{stft, TimeSignal};
    use ndarray::array;
    use rustfft::num_complex::Complex64;

    fn stats(m: &Array2<f64>) -> (f64, f64) {
        let flat: Vec<f64> = m.iter().copied().collect();
        let n = flat.len() as f64;
        let mean = flat.iter().sum::<f64>() / n;
        let std = (flat.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        (median(&flat), std)
    }

    #[test]
    fn db_values() {
        let x = TimeSignal::zeros(512, 16000).unwrap();
        let spec = stft(&x, 256, 128).unwrap();
        let mut bins = spec.bins().clone();
        bins[[0, 0]] = Complex64::new(1.0, 0.0);
        bins[[0, 1]] = Complex64::new(0.0, 10.0);
        let spec = Spectrogram::from_parts(bins, 256, 128, 16000, 512).unwrap();
        let db = to_db(&spec, DB_FLOOR);
        assert_eq!(db[[0, 0]], 0.0);
        assert!((db[[0, 1]] - 20.0).abs() < 1e-12);
        assert!((db[[0, 2]] + 180.0).abs() < 1e-9);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn standardize_small() {
        let out = standardize(&array![[1.0, 2.0, 3.0]]).unwrap();
        let (med, std) = stats(&out);
        assert!(med.abs() < 1e-12);
        assert!((std - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standardize_constant_is_zero() {
        let out = standardize(&array![[5.0, 5.0, 5.0]]).unwrap();
        assert_eq!(*out, array![[0.0, 0.0, 0.0]]);
        let floor = Array2::from_elem((65, 257), -180.0);
        assert!(standardize(&floor).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_is_idempotent() {
        let m = Array2::from_shape_fn((7, 9), |(i, j)| ((i * 31 + j * 17) % 13) as f64 * 0.7 - 2.0);
        let once = standardize(&m).unwrap();
        let twice = standardize(&once).unwrap();
        for (a, b) in once.iter().zip(twice.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn standardize_rejects_bad_input() {
        assert!(standardize(&Array2::zeros((0, 3))).is_err());
        assert!(standardize(&array![[1.0, f64::INFINITY]]).is_err());
    }
}
