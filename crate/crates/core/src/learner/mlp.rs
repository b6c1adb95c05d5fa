use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OutputActivation {
    Identity,
    /// `scale * tanh(z)`.
    Tanh {
        scale: f64,
    },
}

/// Fully connected layer. `weights` is `inputs × outputs` so a batch
/// propagates as `X · W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Multilayer perceptron with ReLU hidden units.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Dense>,
    output: OutputActivation,
}

/// Gradients shaped like an [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGrads {
            layers: net
                .layers
                .iter()
                .map(|l| Dense {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Activations kept from a batched forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(sizes: &[usize], output: OutputActivation, rng: &mut SimRng) -> Result<Self> {
        let mut net = Self::zeros(sizes, output)?;
        for layer in &mut net.layers {
            let (fan_in, fan_out) = layer.weights.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            layer
                .weights
                .mapv_inplace(|_| rng.random_range(-limit..limit));
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize], output: OutputActivation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::contract(format!("invalid layer sizes {sizes:?}")));
        }
        if let OutputActivation::Tanh { scale } = output {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::contract("tanh scale must be positive"));
            }
        }
        let layers = sizes
            .windows(2)
            .map(|w| Dense {
                weights: Array2::zeros((w[0], w[1])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Ok(Mlp {
            sizes: sizes.to_vec(),
            layers,
            output,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_dim("mlp input", input.len(), self.input_dim())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_batch(&self, input: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_dim("mlp input", input.ncols(), self.input_dim())?;
        let last = self.layers.len() - 1;
        let mut x = input.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = x.dot(&layer.weights) + &layer.bias;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            } else {
                self.apply_output(&mut z);
            }
            x = z;
        }
        Ok(x)
    }

    fn apply_output(&self, z: &mut Array2<f64>) {
        if let OutputActivation::Tanh { scale } = self.output {
            z.mapv_inplace(|v| scale * v.tanh());
        }
    }

    pub fn forward_train(&self, input: Array2<f64>) -> Result<Tape> {
        check_dim("mlp input", input.ncols(), self.input_dim())?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = x.dot(&layer.weights) + &layer.bias;
            let mut a = z.clone();
            if i < last {
                a.mapv_inplace(|v| v.max(0.0));
            } else {
                self.apply_output(&mut a);
            }
            inputs.push(x);
            pre.push(z);
            x = a;
        }
        Ok(Tape {
            inputs,
            pre,
            output: x,
        })
    }

    /// Backpropagates `d_output` (gradient of the loss with respect to the
    /// network outputs, one row per sample). Returns parameter gradients and
    /// the gradient with respect to the input.
    pub fn backward(&self, tape: &Tape, d_output: &Array2<f64>) -> Result<(MlpGrads, Array2<f64>)> {
        if d_output.dim() != tape.output.dim() {
            return Err(Error::contract(format!(
                "output gradient shape {:?} does not match output {:?}",
                d_output.dim(),
                tape.output.dim()
            )));
        }
        let mut delta = d_output.clone();
        if let OutputActivation::Tanh { scale } = self.output {
            Zip::from(&mut delta).and(&tape.output).for_each(|d, &y| {
                let t = y / scale;
                *d *= scale * (1.0 - t * t);
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let d_w = tape.inputs[i].t().dot(&delta);
            let d_b = delta.sum_axis(Axis(0));
            grads.push(Dense {
                weights: d_w,
                bias: d_b,
            });
            let mut d_x = delta.dot(&layer.weights.t());
            if i > 0 {
                Zip::from(&mut d_x).and(&tape.pre[i - 1]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            delta = d_x;
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, delta))
    }

    /// Mean over the batch of `Σ_j mask_ij (out_ij - target_ij)²`, with its
    /// gradient.
    pub fn mse_loss_grad(
        &self,
        inputs: Array2<f64>,
        targets: &Array2<f64>,
        mask: Option<&Array2<f64>>,
    ) -> Result<(f64, MlpGrads)> {
        let tape = self.forward_train(inputs)?;
        if targets.dim() != tape.output.dim() || mask.is_some_and(|m| m.dim() != targets.dim()) {
            return Err(Error::contract(
                "target/mask shape does not match network output",
            ));
        }
        let n = targets.nrows() as f64;
        let mut diff = &tape.output - targets;
        if let Some(m) = mask {
            diff *= m;
        }
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let d_out = diff * (2.0 / n);
        let (grads, _) = self.backward(&tape, &d_out)?;
        Ok((loss, grads))
    }

    pub fn mse_loss(
        &self,
        inputs: ArrayView2<'_, f64>,
        targets: &Array2<f64>,
        mask: Option<&Array2<f64>>,
    ) -> Result<f64> {
        let out = self.forward_batch(inputs)?;
        let mut diff = out - targets;
        if let Some(m) = mask {
            diff *= m;
        }
        Ok(diff.iter().map(|d| d * d).sum::<f64>() / targets.nrows() as f64)
    }

    fn check_same_shape(&self, other: &Mlp) -> Result<()> {
        if self.sizes != other.sizes {
            return Err(Error::contract(format!(
                "layer sizes differ: {:?} vs {:?}",
                self.sizes, other.sizes
            )));
        }
        Ok(())
    }

    /// `self := tau * online + (1 - tau) * self`.
    pub fn polyak_update(&mut self, online: &Mlp, tau: f64) -> Result<()> {
        self.check_same_shape(online)?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::contract(format!("tau {tau} outside [0, 1]")));
        }
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            Zip::from(&mut t.weights)
                .and(&o.weights)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
            Zip::from(&mut t.bias)
                .and(&o.bias)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_owned(),
            layer_sizes: self.sizes.clone(),
            output: self.output,
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::contract(format!(
                "unknown checkpoint format '{}'",
                ckpt.format
            )));
        }
        let mut net = Mlp::zeros(&ckpt.layer_sizes, ckpt.output)?;
        check_dim("checkpoint layers", ckpt.layers.len(), net.layers.len())?;
        for (layer, params) in net.layers.iter_mut().zip(&ckpt.layers) {
            let (rows, cols) = layer.weights.dim();
            check_dim("checkpoint weights", params.weights.len(), rows * cols)?;
            check_dim("checkpoint bias", params.bias.len(), cols)?;
            layer.weights = Array2::from_shape_vec((rows, cols), params.weights.clone())
                .expect("length checked");
            layer.bias = Array1::from(params.bias.clone());
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_checkpoint())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&serde_json::from_str(&text)?)
    }
}

pub const CHECKPOINT_FORMAT: &str = "mlp-v1";

/// Flat checkpoint layout. `weights` of layer `i` is the row-major
/// `layer_sizes[i] × layer_sizes[i+1]` matrix (row `r` holds the weights
/// leaving input unit `r`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub layer_sizes: Vec<usize>,
    pub output: OutputActivation,
    pub layers: Vec<LayerParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Concatenates row blocks column-wise: `[a | b]`.
pub(crate) fn hstack(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), a.ncols() + b.ncols()));
    out.slice_mut(s![.., ..a.ncols()]).assign(a);
    out.slice_mut(s![.., a.ncols()..]).assign(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use ndarray::array;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[3, 4, 2], OutputActivation::Identity).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_linear_layer() {
        let mut net = Mlp::zeros(&[2, 2], OutputActivation::Identity).unwrap();
        // W = [[1,2],[3,4]] acting on column vectors; stored transposed
        net.layers[0].weights = array![[1.0, 3.0], [2.0, 4.0]];
        net.layers[0].bias = array![1.0, 1.0];
        assert_eq!(net.forward(&[1.0, 1.0]).unwrap(), vec![4.0, 8.0]);
    }

    #[test]
    fn output_length_and_shape_errors() {
        let mut rng = stream_rng(0, Stream::Init);
        let net = Mlp::new(&[6, 8, 8, 3], OutputActivation::Identity, &mut rng).unwrap();
        assert_eq!(net.forward(&[0.1; 6]).unwrap().len(), 3);
        assert!(net.forward(&[0.1; 5]).is_err());
    }

    #[test]
    fn tanh_output_is_bounded() {
        let mut rng = stream_rng(1, Stream::Init);
        let net = Mlp::new(
            &[2, 16, 2],
            OutputActivation::Tanh { scale: 0.05 },
            &mut rng,
        )
        .unwrap();
        let y = net.forward(&[100.0, -100.0]).unwrap();
        assert!(y.iter().all(|v| v.abs() <= 0.05));
    }

    #[test]
    fn masked_out_loss_has_zero_gradient() {
        let mut rng = stream_rng(2, Stream::Init);
        let net = Mlp::new(&[3, 5, 2], OutputActivation::Identity, &mut rng).unwrap();
        let x = Array2::from_shape_fn((4, 3), |(i, j)| (i + j) as f64 * 0.1);
        let t = Array2::ones((4, 2));
        let mask = Array2::zeros((4, 2));
        let (loss, grads) = net.mse_loss_grad(x, &t, Some(&mask)).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grads.max_abs(), 0.0);
    }

    #[test]
    fn duplicated_batch_keeps_mean_gradient() {
        let mut rng = stream_rng(3, Stream::Init);
        let net = Mlp::new(&[3, 5, 2], OutputActivation::Identity, &mut rng).unwrap();
        let x = Array2::from_shape_fn((4, 3), |(i, j)| ((i * 3 + j) as f64).sin());
        let t = Array2::from_shape_fn((4, 2), |(i, j)| (i as f64 - j as f64) * 0.3);
        let (l1, g1) = net.mse_loss_grad(x.clone(), &t, None).unwrap();
        let x2 = ndarray::concatenate![Axis(0), x, x];
        let t2 = ndarray::concatenate![Axis(0), t, t];
        let (l2, g2) = net.mse_loss_grad(x2, &t2, None).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.layers.iter().zip(&g2.layers) {
            assert!(a
                .weights
                .iter()
                .zip(b.weights.iter())
                .all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn polyak_endpoints() {
        let mut rng = stream_rng(4, Stream::Init);
        let online = Mlp::new(&[2, 3, 1], OutputActivation::Identity, &mut rng).unwrap();
        let original = Mlp::new(&[2, 3, 1], OutputActivation::Identity, &mut rng).unwrap();
        let mut target = original.clone();
        target.polyak_update(&online, 0.0).unwrap();
        assert_eq!(target, original);
        target.polyak_update(&online, 1.0).unwrap();
        assert_eq!(target, online);

        let mut t = Mlp::zeros(&[1, 1], OutputActivation::Identity).unwrap();
        let mut o = t.clone();
        o.layers[0].weights[[0, 0]] = 1.0;
        t.polyak_update(&o, 0.05).unwrap();
        assert_eq!(t.layers[0].weights[[0, 0]], 0.05);

        let other = Mlp::zeros(&[2, 1], OutputActivation::Identity).unwrap();
        assert!(t.polyak_update(&other, 0.5).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = stream_rng(5, Stream::Init);
        let net = Mlp::new(&[4, 7, 3], OutputActivation::Tanh { scale: 0.05 }, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        net.save(&path).unwrap();
        assert_eq!(Mlp::load(&path).unwrap(), net);
    }
}
