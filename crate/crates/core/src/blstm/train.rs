use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::network::loss_and_gradient;
use super::optim::RmsProp;
use super::weights::NetworkWeights;
use super::NetworkConfig;
use crate::audio::{standardize, to_db, FeatureMatrix, StftPlan, TimeSignal, DB_FLOOR};
use crate::error::{Error, Result};
use crate::BinaryGrid;

/// Network input for one window: the standardized dB spectrograms of the
/// two beamformer outputs side by side, SOI estimate first.
pub fn preprocess(z_soi: &TimeSignal, z_int: &TimeSignal, cfg: &NetworkConfig) -> Result<FeatureMatrix> {
    for (name, z) in [("SOI", z_soi), ("interference", z_int)] {
        if z.len() != cfg.buffer_len {
            return Err(Error::invalid(format!(
                "{name} estimate has {} samples, expected {}",
                z.len(),
                cfg.buffer_len
            )));
        }
    }
    let plan = StftPlan::new(cfg.frame_len)?;
    let soi = standardize(&to_db(&plan.forward(z_soi)?, DB_FLOOR))?;
    let int = standardize(&to_db(&plan.forward(z_int)?, DB_FLOOR))?;
    let joined = concatenate(Axis(1), &[soi.view(), int.view()]).expect("same frame count");
    Ok(FeatureMatrix::from_raw(joined))
}

/// One supervised window: features, ideal masks, reference magnitudes and VAD gate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub features: FeatureMatrix,
    pub ideal_soi: BinaryGrid,
    pub ideal_int: BinaryGrid,
    pub magnitude: Array2<f64>,
    pub vad: BinaryGrid,
}

impl TrainingExample {
    pub fn new(
        features: FeatureMatrix,
        ideal_soi: BinaryGrid,
        ideal_int: BinaryGrid,
        magnitude: Array2<f64>,
        vad: BinaryGrid,
    ) -> Result<Self> {
        let dim = ideal_soi.dim();
        if features.nrows() != dim.0 || features.ncols() != 2 * dim.1 {
            return Err(Error::shape(format!(
                "features {:?} do not match masks {dim:?}",
                features.dim()
            )));
        }
        if ideal_int.dim() != dim || magnitude.dim() != dim || vad.dim() != dim {
            return Err(Error::shape("ideal masks, magnitudes and VAD must share a shape"));
        }
        Ok(Self {
            features,
            ideal_soi,
            ideal_int,
            magnitude,
            vad,
        })
    }
}

fn first_non_finite(w: &NetworkWeights<f64>) -> Option<String> {
    w.tensors()
        .into_iter()
        .find(|(_, _, v)| v.iter().any(|x| !x.is_finite()))
        .map(|(name, _, _)| name)
}

/// Mean loss over the batch and its gradient.
pub(crate) fn batch_gradient(
    weights: &NetworkWeights<f64>,
    batch: &[&TrainingExample],
) -> Result<(f64, NetworkWeights<f64>)> {
    if batch.is_empty() {
        return Err(Error::invalid("training batch is empty"));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    let mut acc: Option<NetworkWeights<f64>> = None;
    for example in batch {
        let (loss, grad) = loss_and_gradient(weights, example)?;
        total += loss;
        match acc.as_mut() {
            None => acc = Some(grad),
            Some(a) => {
                for (x, y) in a.tensors_mut().into_iter().zip(grad.tensors()) {
                    x.iter_mut().zip(y.2).for_each(|(p, q)| *p += q);
                }
            }
        }
    }
    let mut grad = acc.expect("non-empty batch");
    for t in grad.tensors_mut() {
        t.iter_mut().for_each(|v| *v *= scale);
    }
    Ok((total * scale, grad))
}

/// Owns the weights and optimizer state during training.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: NetworkConfig,
    pub weights: NetworkWeights<f64>,
    pub optimizer: RmsProp,
    pub step: usize,
}

impl Trainer {
    pub fn new(config: NetworkConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let weights = NetworkWeights::random(config.layers, config.hidden, config.num_bins(), rng)?;
        Ok(Self::resume(config, weights, None, 0))
    }

    pub fn resume(
        config: NetworkConfig,
        weights: NetworkWeights<f64>,
        optimizer: Option<RmsProp>,
        step: usize,
    ) -> Self {
        let optimizer = optimizer
            .unwrap_or_else(|| RmsProp::new(config.learning_rate, config.rms_decay, config.momentum));
        Self {
            config,
            weights,
            optimizer,
            step,
        }
    }

    /// One optimizer update on the mean batch loss; returns that loss as it
    /// was before the update. Non-finite values abort without touching the weights.
    pub fn train_step(&mut self, batch: &[TrainingExample]) -> Result<f64> {
        let refs: Vec<&TrainingExample> = batch.iter().collect();
        self.train_batch(&refs)
    }

    /// [`Self::train_step`] over borrowed examples.
    pub fn train_batch(&mut self, batch: &[&TrainingExample]) -> Result<f64> {
        let (loss, grad) = batch_gradient(&self.weights, batch)?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("loss is {loss} at step {}", self.step)));
        }
        if let Some(name) = first_non_finite(&grad) {
            return Err(Error::Numerical(format!(
                "non-finite gradient in {name} at step {}",
                self.step
            )));
        }
        let saved_weights = self.weights.clone();
        let saved_opt = self.optimizer.clone();
        self.optimizer.step(&mut self.weights, &grad)?;
        if let Some(name) = first_non_finite(&self.weights) {
            self.weights = saved_weights;
            self.optimizer = saved_opt;
            return Err(Error::Numerical(format!(
                "update made {name} non-finite at step {}",
                self.step
            )));
        }
        self.step += 1;
        Ok(loss)
    }

    /// One shuffled pass over `examples` in batches of `batch_size`;
    /// returns the mean of the per-batch losses.
    pub fn train_epoch(
        &mut self,
        examples: &[TrainingExample],
        batch_size: usize,
        rng: &mut impl Rng,
    ) -> Result<f64> {
        if batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&TrainingExample> = chunk.iter().map(|&i| &examples[i]).collect();
            total += self.train_batch(&batch)?;
            batches += 1;
        }
        if batches == 0 {
            return Err(Error::invalid("no training examples"));
        }
        Ok(total / batches as f64)
    }

    pub fn mean_loss(&self, batch: &[TrainingExample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::invalid("batch is empty"));
        }
        let mut total = 0.0;
        for ex in batch {
            total += loss_and_gradient(&self.weights, ex)?.0;
        }
        Ok(total / batch.len() as f64)
    }
}
