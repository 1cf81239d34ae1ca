use std::fmt::Debug;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};

/// Floating-point types the network runs in.
pub trait Real:
    num_traits::Float + num_traits::NumAssign + ndarray::LinalgScalar + ndarray::ScalarOperand + Debug + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// One LSTM direction. Gate rows are stacked as [input, forget, cell, output].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<A = f64> {
    /// 4H × D
    pub w_input: Array2<A>,
    /// 4H × H
    pub w_recurrent: Array2<A>,
    /// 4H
    pub bias: Array1<A>,
}

impl<A: Real> LstmParams<A> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w_input: Array2::zeros((4 * hidden, input_dim)),
            w_recurrent: Array2::zeros((4 * hidden, hidden)),
            bias: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_recurrent.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlstmLayer<A = f64> {
    pub forward: LstmParams<A>,
    pub backward: LstmParams<A>,
}

/// All learned parameters. The output layer maps the 2H features of each
/// frame to 2F logits: columns [0, F) score the SOI class and [F, 2F) the
/// interference class of each bin.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights<A = f64> {
    pub layers: Vec<BlstmLayer<A>>,
    /// 2F × 2H
    pub fc_weight: Array2<A>,
    /// 2F
    pub fc_bias: Array1<A>,
}

/// Closed-form parameter count for L layers of H units over F bins per side.
pub fn parameter_count(layers: usize, hidden: usize, num_bins: usize) -> usize {
    if layers == 0 {
        return 0;
    }
    let first = 4 * ((2 * num_bins + hidden) * hidden + hidden);
    let rest = 4 * ((2 * hidden + hidden) * hidden + hidden);
    2 * first + 2 * (layers - 1) * rest + (2 * hidden + 1) * 2 * num_bins
}

impl<A: Real> NetworkWeights<A> {
    pub fn zeros(layers: usize, hidden: usize, num_bins: usize) -> Result<Self> {
        if layers == 0 || hidden == 0 || num_bins == 0 {
            return Err(Error::invalid(format!(
                "invalid network shape L={layers} H={hidden} F={num_bins}"
            )));
        }
        let layers = (0..layers)
            .map(|l| {
                let d = if l == 0 { 2 * num_bins } else { 2 * hidden };
                BlstmLayer {
                    forward: LstmParams::zeros(d, hidden),
                    backward: LstmParams::zeros(d, hidden),
                }
            })
            .collect();
        Ok(Self {
            layers,
            fc_weight: Array2::zeros((2 * num_bins, 2 * hidden)),
            fc_bias: Array1::zeros(2 * num_bins),
        })
    }

    /// Uniform weights in ±1/√H, zero biases except the forget gate at 1.
    pub fn random(layers: usize, hidden: usize, num_bins: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut w = Self::zeros(layers, hidden, num_bins)?;
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut fill = |a: &mut [A]| {
            a.iter_mut()
                .for_each(|v| *v = A::from_f64(rng.gen_range(-bound..bound)))
        };
        for layer in &mut w.layers {
            for dir in [&mut layer.forward, &mut layer.backward] {
                fill(dir.w_input.as_slice_mut().expect("standard layout"));
                fill(dir.w_recurrent.as_slice_mut().expect("standard layout"));
                dir.bias
                    .slice_mut(ndarray::s![hidden..2 * hidden])
                    .fill(A::one());
            }
        }
        fill(w.fc_weight.as_slice_mut().expect("standard layout"));
        Ok(w)
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].forward.hidden()
    }

    /// F, the bins per side.
    pub fn num_bins(&self) -> usize {
        self.fc_bias.len() / 2
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].forward.input_dim()
    }

    /// Named tensors in a fixed order, with their shapes.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[A])> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            for (tag, dir) in [("fwd", &layer.forward), ("bwd", &layer.backward)] {
                out.push((format!("l{l}.{tag}.w_input"), dir.w_input.shape().to_vec(), slice(&dir.w_input)));
                out.push((
                    format!("l{l}.{tag}.w_recurrent"),
                    dir.w_recurrent.shape().to_vec(),
                    slice(&dir.w_recurrent),
                ));
                out.push((format!("l{l}.{tag}.bias"), dir.bias.shape().to_vec(), dir.bias.as_slice().expect("contiguous")));
            }
        }
        out.push(("fc.weight".into(), self.fc_weight.shape().to_vec(), slice(&self.fc_weight)));
        out.push(("fc.bias".into(), self.fc_bias.shape().to_vec(), self.fc_bias.as_slice().expect("contiguous")));
        out
    }

    /// Mutable views of the same tensors, in the same order as [`Self::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [A]> {
        let mut out: Vec<&mut [A]> = Vec::new();
        for layer in &mut self.layers {
            for dir in [&mut layer.forward, &mut layer.backward] {
                out.push(dir.w_input.as_slice_mut().expect("standard layout"));
                out.push(dir.w_recurrent.as_slice_mut().expect("standard layout"));
                out.push(dir.bias.as_slice_mut().expect("contiguous"));
            }
        }
        out.push(self.fc_weight.as_slice_mut().expect("standard layout"));
        out.push(self.fc_bias.as_slice_mut().expect("contiguous"));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, _, v)| v.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, _, v)| v.iter().all(|x| x.is_finite()))
    }

    pub fn cast<B: Real>(&self) -> NetworkWeights<B> {
        let c2 = |a: &Array2<A>| a.mapv(|v| B::from_f64(v.to_f64()));
        let c1 = |a: &Array1<A>| a.mapv(|v| B::from_f64(v.to_f64()));
        let cp = |p: &LstmParams<A>| LstmParams {
            w_input: c2(&p.w_input),
            w_recurrent: c2(&p.w_recurrent),
            bias: c1(&p.bias),
        };
        NetworkWeights {
            layers: self
                .layers
                .iter()
                .map(|l| BlstmLayer {
                    forward: cp(&l.forward),
                    backward: cp(&l.backward),
                })
                .collect(),
            fc_weight: c2(&self.fc_weight),
            fc_bias: c1(&self.fc_bias),
        }
    }

    pub(crate) fn same_shape(&self, other: &Self) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.1 == y.1)
    }
}

fn slice<A>(a: &Array2<A>) -> &[A] {
    a.as_slice().expect("standard layout")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recommended_config_count() {
        assert_eq!(parameter_count(3, 200, 257), 3_273_314);
    }

    #[test]
    fn count_matches_tensors() {
        let mut w = NetworkWeights::<f64>::zeros(2, 7, 5).unwrap();
        assert_eq!(w.parameter_count(), parameter_count(2, 7, 5));
        assert_eq!(w.tensors().len(), w.tensors_mut().len());
    }

    #[test]
    fn init_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = NetworkWeights::<f64>::random(1, 16, 9, &mut rng).unwrap();
        let bound = 0.25;
        assert!(w.layers[0].forward.w_input.iter().all(|v| v.abs() <= bound));
        let b = &w.layers[0].backward.bias;
        assert!(b.slice(ndarray::s![16..32]).iter().all(|&v| v == 1.0));
        assert!(b.slice(ndarray::s![..16]).iter().all(|&v| v == 0.0));
        assert!(w.all_finite());
    }

    #[test]
    fn zero_shape_rejected() {
        assert!(NetworkWeights::<f64>::zeros(1, 0, 5).is_err());
        assert!(NetworkWeights::<f64>::zeros(0, 4, 5).is_err());
    }

    #[test]
    fn deeper_is_bigger() {
        assert!(parameter_count(1, 200, 257) < parameter_count(3, 200, 257));
    }
}
