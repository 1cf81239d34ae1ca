use ndarray::{Array2, Zip};

use crate::audio::{to_db, Spectrogram, DB_FLOOR};
use crate::error::{Error, Result};
use crate::BinaryGrid;

/// Energy gate: a bin is active when its level is within `vad_db` of the
/// loudest bin in the window.
pub fn vad_mask(reference: &Spectrogram, vad_db: f64) -> BinaryGrid {
    let db = to_db(reference, DB_FLOOR);
    let max = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    db.mapv(|v| v > max - vad_db)
}

fn check_shapes(dim: (usize, usize), others: &[(usize, usize)]) -> Result<()> {
    if let Some(bad) = others.iter().find(|d| **d != dim) {
        return Err(Error::shape(format!("loss inputs disagree: {dim:?} vs {bad:?}")));
    }
    Ok(())
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Magnitude spectrum approximation loss with the VAD gate applied to the
/// SOI prediction:
/// `sum S^2 (O_soi - psi p_soi)^2 + sum S^2 (O_int - p_int)^2`.
pub fn msa_loss(
    probs_soi: &Array2<f64>,
    probs_int: &Array2<f64>,
    ideal_soi: &BinaryGrid,
    ideal_int: &BinaryGrid,
    magnitude: &Array2<f64>,
    vad: &BinaryGrid,
) -> Result<f64> {
    let dim = probs_soi.dim();
    check_shapes(
        dim,
        &[probs_int.dim(), ideal_soi.dim(), ideal_int.dim(), magnitude.dim(), vad.dim()],
    )?;
    let mut total = 0.0;
    Zip::from(probs_soi)
        .and(probs_int)
        .and(ideal_soi)
        .and(ideal_int)
        .and(magnitude)
        .and(vad)
        .for_each(|&p, &q, &os, &oi, &s, &v| {
            let s2 = s * s;
            let r_soi = indicator(os) - indicator(v) * p;
            let r_int = indicator(oi) - q;
            total += s2 * (r_soi * r_soi + r_int * r_int);
        });
    Ok(total)
}

/// Loss and its gradient with respect to the logit difference
/// `z = z_soi - z_int`, where `p_soi = sigmoid(z)` and `p_int = 1 - p_soi`.
pub fn msa_loss_grad(
    probs_soi: &Array2<f64>,
    ideal_soi: &BinaryGrid,
    ideal_int: &BinaryGrid,
    magnitude: &Array2<f64>,
    vad: &BinaryGrid,
) -> Result<(f64, Array2<f64>)> {
    let dim = probs_soi.dim();
    check_shapes(dim, &[ideal_soi.dim(), ideal_int.dim(), magnitude.dim(), vad.dim()])?;
    let mut total = 0.0;
    let mut grad = Array2::<f64>::zeros(dim);
    Zip::from(&mut grad)
        .and(probs_soi)
        .and(ideal_soi)
        .and(ideal_int)
        .and(magnitude)
        .and(vad)
        .for_each(|g, &p, &os, &oi, &s, &v| {
            let q = 1.0 - p;
            let s2 = s * s;
            let psi = indicator(v);
            let r_soi = indicator(os) - psi * p;
            let r_int = indicator(oi) - q;
            total += s2 * (r_soi * r_soi + r_int * r_int);
            let dl_dp = -2.0 * s2 * psi * r_soi;
            let dl_dq = -2.0 * s2 * r_int;
            *g = (dl_dp - dl_dq) * p * q;
        });
    Ok((total, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{stft, TimeSignal};
    use rustfft::num_complex::Complex64;

    fn grid(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> BinaryGrid {
        BinaryGrid::from_shape_fn((rows, cols), |(r, c)| f(r, c))
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let o_soi = grid(4, 5, |r, c| (r + c) % 2 == 0);
        let o_int = o_soi.mapv(|b| !b);
        let p = o_soi.mapv(indicator);
        let q = o_int.mapv(indicator);
        let s = Array2::from_elem((4, 5), 3.0);
        let vad = grid(4, 5, |_, _| true);
        assert_eq!(msa_loss(&p, &q, &o_soi, &o_int, &s, &vad).unwrap(), 0.0);
    }

    #[test]
    fn total_confusion_costs_two_per_bin() {
        let o_soi = grid(4, 5, |r, c| (r * c) % 3 == 0);
        let o_int = o_soi.mapv(|b| !b);
        let p = o_int.mapv(indicator);
        let q = o_soi.mapv(indicator);
        let s = Array2::ones((4, 5));
        let vad = grid(4, 5, |_, _| true);
        assert_eq!(msa_loss(&p, &q, &o_soi, &o_int, &s, &vad).unwrap(), 40.0);
    }

    #[test]
    fn silent_magnitude_is_zero_loss() {
        let o_soi = grid(3, 3, |r, _| r == 0);
        let o_int = o_soi.mapv(|b| !b);
        let p = Array2::from_elem((3, 3), 0.3);
        let s = Array2::zeros((3, 3));
        let vad = grid(3, 3, |_, _| true);
        assert_eq!(msa_loss(&p, &p, &o_soi, &o_int, &s, &vad).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let a = Array2::zeros((2, 2));
        let b = grid(2, 3, |_, _| true);
        let g = grid(2, 2, |_, _| true);
        assert!(msa_loss(&a, &a, &b, &g, &a, &g).is_err());
        assert!(msa_loss_grad(&a, &g, &g, &Array2::zeros((3, 2)), &g).is_err());
    }

    #[test]
    fn grad_loss_agrees_with_loss() {
        let o_soi = grid(3, 4, |r, c| r > c);
        let o_int = o_soi.mapv(|b| !b);
        let p = Array2::from_shape_fn((3, 4), |(r, c)| 0.1 + 0.07 * (r * 4 + c) as f64);
        let q = p.mapv(|v| 1.0 - v);
        let s = Array2::from_shape_fn((3, 4), |(r, c)| 0.5 + (r + c) as f64);
        let vad = grid(3, 4, |r, c| r != c);
        let a = msa_loss(&p, &q, &o_soi, &o_int, &s, &vad).unwrap();
        let (b, _) = msa_loss_grad(&p, &o_soi, &o_int, &s, &vad).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    fn spec_from_mags(mags: &[f64]) -> Spectrogram {
        let base = stft(&TimeSignal::zeros(8, 16000).unwrap(), 8, 4).unwrap();
        let mut bins = base.bins().clone();
        for (b, m) in bins.iter_mut().zip(mags.iter().cycle()) {
            *b = Complex64::new(*m, 0.0);
        }
        Spectrogram::from_parts(bins, 8, 4, 16000, 8).unwrap()
    }

    #[test]
    fn vad_examples() {
        // 3 frames x 5 bins; one loud bin, one 50 dB down, one 30 dB down
        let mut mags = vec![1e-3; 15];
        mags[7] = 1.0;
        mags[2] = 10f64.powf(-50.0 / 20.0);
        mags[3] = 10f64.powf(-30.0 / 20.0);
        let vad = vad_mask(&spec_from_mags(&mags), 40.0);
        let flat: Vec<bool> = vad.iter().copied().collect();
        assert!(flat[7]);
        assert!(!flat[2]);
        assert!(flat[3]);
        let constant = vad_mask(&spec_from_mags(&[0.2]), 40.0);
        assert!(constant.iter().all(|&b| b));
    }
}
