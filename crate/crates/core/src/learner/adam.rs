use ndarray::Zip;

use super::mlp::{Mlp, MlpGrads};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: MlpGrads,
    second: MlpGrads,
}

impl AdamState {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: MlpGrads::zeros_like(net),
            second: MlpGrads::zeros_like(net),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam step. Fails with [`Error::Diverged`] if any
    /// parameter becomes non-finite.
    pub fn step(&mut self, net: &mut Mlp, grads: &MlpGrads) -> Result<()> {
        if grads.layers.len() != net.layers().len()
            || grads
                .layers
                .iter()
                .zip(net.layers())
                .any(|(g, l)| g.weights.dim() != l.weights.dim() || g.bias.dim() != l.bias.dim())
        {
            return Err(Error::contract("gradient shape does not match network"));
        }
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let lr = self.lr;
        let update = |p: &mut f64, &g: &f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for (((layer, g), m), v) in net
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first.layers)
            .zip(&mut self.second.layers)
        {
            Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .for_each(update);
            Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(update);
        }
        if net.is_finite() {
            Ok(())
        } else {
            Err(Error::Diverged)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::mlp::OutputActivation;
    use ndarray::Array2;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut net = Mlp::zeros(&[1, 1], OutputActivation::Identity).unwrap();
        let mut grads = MlpGrads::zeros_like(&net);
        grads.layers[0].weights[[0, 0]] = 3.0;
        grads.layers[0].bias[0] = -0.5;
        let mut opt = AdamState::new(&net, 0.01);
        opt.step(&mut net, &grads).unwrap();
        assert!((net.layers()[0].weights[[0, 0]] + 0.01).abs() < 1e-9);
        assert!((net.layers()[0].bias[0] - 0.01).abs() < 1e-9);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn fits_a_line() {
        let mut net = Mlp::zeros(&[1, 1], OutputActivation::Identity).unwrap();
        let mut opt = AdamState::new(&net, 0.05);
        let x = Array2::from_shape_fn((8, 1), |(i, _)| i as f64 / 8.0);
        let t = x.mapv(|v| 2.0 * v - 1.0);
        for _ in 0..2000 {
            let (_, g) = net.mse_loss_grad(x.clone(), &t, None).unwrap();
            opt.step(&mut net, &g).unwrap();
        }
        assert!((net.layers()[0].weights[[0, 0]] - 2.0).abs() < 1e-3);
        assert!((net.layers()[0].bias[0] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn non_finite_parameters_are_divergence() {
        let mut net = Mlp::zeros(&[1, 1], OutputActivation::Identity).unwrap();
        let mut grads = MlpGrads::zeros_like(&net);
        grads.layers[0].weights[[0, 0]] = f64::NAN;
        let mut opt = AdamState::new(&net, 0.01);
        assert!(matches!(opt.step(&mut net, &grads), Err(Error::Diverged)));
    }
}
