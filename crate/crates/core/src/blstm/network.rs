use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use super::loss::msa_loss_grad;
use super::lstm::{backprop, run, DirectionCache};
use super::train::TrainingExample;
use super::weights::{NetworkWeights, Real};
use crate::error::{Error, Result};
use crate::BinaryGrid;

/// Network decision for one input window.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair<A = f64> {
    pub soi: BinaryGrid,
    pub int: BinaryGrid,
    /// Softmax probability of the SOI class per bin.
    pub probabilities: Array2<A>,
}

impl<A: Real> MaskPair<A> {
    /// Binarizes by argmax; an exact tie goes to the interference class.
    pub fn from_probabilities(probabilities: Array2<A>) -> Self {
        let half = A::from_f64(0.5);
        let soi = probabilities.mapv(|p| p > half);
        let int = soi.mapv(|b| !b);
        Self {
            soi,
            int,
            probabilities,
        }
    }

    /// Complementary class probabilities.
    pub fn interference_probabilities(&self) -> Array2<A> {
        self.probabilities.mapv(|p| A::one() - p)
    }
}

struct ForwardCache<A> {
    inputs: Vec<Array2<A>>,
    directions: Vec<(DirectionCache<A>, DirectionCache<A>)>,
    top: Array2<A>,
    probabilities: Array2<A>,
}

fn check_input<A: Real>(features: &ArrayView2<A>, weights: &NetworkWeights<A>) -> Result<()> {
    if features.ncols() != weights.input_dim() {
        return Err(Error::shape(format!(
            "feature width {} does not match network input {}",
            features.ncols(),
            weights.input_dim()
        )));
    }
    if features.nrows() == 0 {
        return Err(Error::shape("empty feature sequence"));
    }
    Ok(())
}

fn run_network<A: Real>(features: ArrayView2<A>, weights: &NetworkWeights<A>) -> ForwardCache<A> {
    let mut inputs = Vec::with_capacity(weights.num_layers());
    let mut directions = Vec::with_capacity(weights.num_layers());
    let mut current = features.to_owned();
    for layer in &weights.layers {
        let fwd = run(&layer.forward, current.view(), false);
        let bwd = run(&layer.backward, current.view(), true);
        let next = concatenate(Axis(1), &[fwd.hidden.view(), bwd.hidden.view()])
            .expect("equal row counts");
        inputs.push(std::mem::replace(&mut current, next));
        directions.push((fwd, bwd));
    }
    let top = current;
    let steps = top.nrows();
    let bins = weights.num_bins();
    let mut logits = Array2::<A>::zeros((steps, 2 * bins));
    general_mat_mul(A::one(), &top, &weights.fc_weight.t(), A::zero(), &mut logits);
    logits += &weights.fc_bias;
    let probabilities = Array2::from_shape_fn((steps, bins), |(t, f)| {
        let z = logits[[t, f]] - logits[[t, bins + f]];
        A::one() / (A::one() + (-z).exp())
    });
    ForwardCache {
        inputs,
        directions,
        top,
        probabilities,
    }
}

/// Runs the BLSTM stack, the output layer and the per-bin softmax.
pub fn forward<A: Real>(features: ArrayView2<A>, weights: &NetworkWeights<A>) -> Result<MaskPair<A>> {
    check_input(&features, weights)?;
    Ok(MaskPair::from_probabilities(run_network(features, weights).probabilities))
}

/// Loss of one example and the gradient of every parameter, by
/// backpropagation through time over the full sequence.
pub fn loss_and_gradient(
    weights: &NetworkWeights<f64>,
    example: &TrainingExample,
) -> Result<(f64, NetworkWeights<f64>)> {
    let features = example.features.view();
    check_input(&features, weights)?;
    let cache = run_network(features, weights);
    let (loss, d_diff) = msa_loss_grad(
        &cache.probabilities,
        &example.ideal_soi,
        &example.ideal_int,
        &example.magnitude,
        &example.vad,
    )?;

    let mut grads = NetworkWeights::<f64>::zeros(weights.num_layers(), weights.hidden(), weights.num_bins())?;
    let d_logits = concatenate(Axis(1), &[d_diff.view(), (-&d_diff).view()]).expect("same rows");
    general_mat_mul(1.0, &d_logits.t(), &cache.top, 0.0, &mut grads.fc_weight);
    grads.fc_bias = d_logits.sum_axis(Axis(0));
    let mut d_out = d_logits.dot(&weights.fc_weight);

    let h = weights.hidden();
    for l in (0..weights.num_layers()).rev() {
        let input = cache.inputs[l].view();
        let (fwd, bwd) = &cache.directions[l];
        let layer = &weights.layers[l];
        let need = l > 0;
        let dx_f = backprop(
            &layer.forward,
            input,
            fwd,
            d_out.slice(s![.., ..h]),
            &mut grads.layers[l].forward,
            need,
        );
        let dx_b = backprop(
            &layer.backward,
            input,
            bwd,
            d_out.slice(s![.., h..]),
            &mut grads.layers[l].backward,
            need,
        );
        if let (Some(a), Some(b)) = (dx_f, dx_b) {
            d_out = a + b;
        }
    }
    Ok((loss, grads))
}
