#![allow(dead_code)]

use ndarray::Array2;
use phasemask::audio::FeatureMatrix;
use phasemask::blstm::{loss_and_gradient, NetworkWeights, TrainingExample};
use phasemask::BinaryGrid;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random example with `frames` time steps and `bins` frequency bins.
pub fn random_example(frames: usize, bins: usize, seed: u64) -> TrainingExample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = FeatureMatrix::from_raw(Array2::from_shape_fn((frames, 2 * bins), |_| rng.gen_range(-2.0..2.0)));
    let soi = BinaryGrid::from_shape_fn((frames, bins), |_| rng.gen_bool(0.5));
    let magnitude = Array2::from_shape_fn((frames, bins), |_| rng.gen_range(0.2..1.5));
    let vad = BinaryGrid::from_shape_fn((frames, bins), |_| rng.gen_bool(0.8));
    TrainingExample::new(features, soi.clone(), soi.mapv(|b| !b), magnitude, vad).unwrap()
}

/// Worst gradient mismatch of one tensor.
#[derive(Debug)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub checked: usize,
}

/// Compares the analytic gradient with central differences for every
/// parameter. Entries where both are below `abs_floor` count as matching.
pub fn gradient_check(weights: &NetworkWeights<f64>, example: &TrainingExample, step: f64, abs_floor: f64) -> Vec<TensorCheck> {
    let (_, grad) = loss_and_gradient(weights, example).unwrap();
    let analytic: Vec<(String, Vec<f64>)> =
        grad.tensors().into_iter().map(|(n, _, v)| (n, v.to_vec())).collect();
    let mut w = weights.clone();
    let mut out = Vec::new();
    for (t, (name, a)) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for j in 0..a.len() {
            let orig = w.tensors_mut()[t][j];
            w.tensors_mut()[t][j] = orig + step;
            let plus = loss_and_gradient(&w, example).unwrap().0;
            w.tensors_mut()[t][j] = orig - step;
            let minus = loss_and_gradient(&w, example).unwrap().0;
            w.tensors_mut()[t][j] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let scale = a[j].abs().max(numeric.abs());
            if scale > abs_floor {
                worst = worst.max((a[j] - numeric).abs() / scale);
            }
        }
        out.push(TensorCheck {
            name: name.clone(),
            max_rel_err: worst,
            checked: a.len(),
        });
    }
    out
}
