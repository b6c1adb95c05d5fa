//! Finite-difference check of the hand-written backpropagation.

use hercs::learner::{Mlp, OutputActivation};
use hercs::rng::{stream_rng, Stream};
use ndarray::Array2;
use rand::Rng;

fn main() -> hercs::Result<()> {
    let mut rng = stream_rng(7, Stream::Init);
    let h = 1e-5;
    for output in [
        OutputActivation::Identity,
        OutputActivation::Tanh { scale: 2.0 },
    ] {
        let net = Mlp::new(&[5, 16, 16, 3], output, &mut rng)?;
        let x = Array2::from_shape_fn((8, 5), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((8, 3), |_| rng.random_range(-1.0..1.0));
        let (_, grads) = net.mse_loss_grad(x.clone(), &y, None)?;

        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let layer = rng.random_range(0..net.layers().len());
            let (rows, cols) = net.layers()[layer].weights.dim();
            let (r, c) = (rng.random_range(0..rows), rng.random_range(0..cols));
            let shifted = |delta: f64| -> hercs::Result<f64> {
                let mut n = net.clone();
                n.layers_mut()[layer].weights[[r, c]] += delta;
                n.mse_loss(x.view(), &y, None)
            };
            let numeric = (shifted(h)? - shifted(-h)?) / (2.0 * h);
            let analytic = grads.layers[layer].weights[[r, c]];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12);
            worst = worst.max(rel);
            println!(
                "{output:?} w[{layer}][{r},{c}]  analytic {analytic:+.8}  numeric {numeric:+.8}"
            );
        }
        println!("worst relative error {worst:.2e}\n");
    }
    Ok(())
}
