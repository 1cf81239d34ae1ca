use super::weights::NetworkWeights;
use crate::error::{Error, Result};

/// RMSProp with a heavy-ball momentum buffer:
///
/// ```text
/// v <- decay * v + (1 - decay) * g^2
/// b <- momentum * b + g / (sqrt(v) + eps)
/// w <- w - lr * b
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub momentum: f64,
    pub epsilon: f64,
    mean_square: Vec<Vec<f64>>,
    velocity: Vec<Vec<f64>>,
}

impl RmsProp {
    pub fn new(learning_rate: f64, decay: f64, momentum: f64) -> Self {
        Self {
            learning_rate,
            decay,
            momentum,
            epsilon: 1e-8,
            mean_square: Vec::new(),
            velocity: Vec::new(),
        }
    }

    /// Per-tensor squared-gradient averages (empty before the first step).
    pub fn mean_square(&self) -> &[Vec<f64>] {
        &self.mean_square
    }

    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.velocity
    }

    pub fn set_state(&mut self, mean_square: Vec<Vec<f64>>, velocity: Vec<Vec<f64>>) -> Result<()> {
        if mean_square.len() != velocity.len()
            || mean_square.iter().zip(&velocity).any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::invalid("optimizer state tensors disagree in shape"));
        }
        self.mean_square = mean_square;
        self.velocity = velocity;
        Ok(())
    }

    pub fn step(&mut self, weights: &mut NetworkWeights<f64>, grads: &NetworkWeights<f64>) -> Result<()> {
        if !weights.same_shape(grads) {
            return Err(Error::shape("gradient does not match the network"));
        }
        let grad_tensors = grads.tensors();
        if self.mean_square.is_empty() {
            self.mean_square = grad_tensors.iter().map(|(_, _, g)| vec![0.0; g.len()]).collect();
            self.velocity = self.mean_square.clone();
        } else if self.mean_square.len() != grad_tensors.len()
            || self.mean_square.iter().zip(&grad_tensors).any(|(m, (_, _, g))| m.len() != g.len())
        {
            return Err(Error::shape("optimizer state does not match the network"));
        }
        let (lr, rho, mu, eps) = (self.learning_rate, self.decay, self.momentum, self.epsilon);
        for (((w, (_, _, g)), ms), vel) in weights
            .tensors_mut()
            .into_iter()
            .zip(&grad_tensors)
            .zip(&mut self.mean_square)
            .zip(&mut self.velocity)
        {
            for i in 0..w.len() {
                ms[i] = rho * ms[i] + (1.0 - rho) * g[i] * g[i];
                vel[i] = mu * vel[i] + g[i] / (ms[i].sqrt() + eps);
                w[i] -= lr * vel[i];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_only_decays_accumulators() {
        let mut w = NetworkWeights::<f64>::zeros(1, 2, 3).unwrap();
        w.fc_bias.fill(0.7);
        let before = w.clone();
        let zeros = NetworkWeights::<f64>::zeros(1, 2, 3).unwrap();
        let mut opt = RmsProp::new(1e-3, 0.9, 0.9);
        let ms: Vec<Vec<f64>> = zeros.tensors().iter().map(|(_, _, t)| vec![2.0; t.len()]).collect();
        let vel: Vec<Vec<f64>> = ms.iter().map(|t| vec![0.0; t.len()]).collect();
        opt.set_state(ms, vel).unwrap();
        opt.step(&mut w, &zeros).unwrap();
        assert_eq!(w, before);
        assert!(opt.mean_square().iter().flatten().all(|&v| (v - 1.8).abs() < 1e-15));
        assert!(opt.velocity().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn first_step_moves_against_gradient() {
        let mut w = NetworkWeights::<f64>::zeros(1, 2, 3).unwrap();
        let mut g = NetworkWeights::<f64>::zeros(1, 2, 3).unwrap();
        g.fc_bias.fill(0.5);
        g.fc_bias[0] = -0.5;
        let mut opt = RmsProp::new(0.01, 0.9, 0.9);
        opt.step(&mut w, &g).unwrap();
        // v = 0.1 g^2 so the normalized step is lr * sign(g) * sqrt(10)
        let expected = 0.01 * 10f64.sqrt();
        assert!((w.fc_bias[0] - expected).abs() < 1e-7);
        assert!((w.fc_bias[1] + expected).abs() < 1e-7);
    }

    #[test]
    fn shape_mismatch() {
        let mut w = NetworkWeights::<f64>::zeros(1, 2, 3).unwrap();
        let g = NetworkWeights::<f64>::zeros(1, 3, 3).unwrap();
        assert!(RmsProp::new(0.1, 0.9, 0.9).step(&mut w, &g).is_err());
    }
}
