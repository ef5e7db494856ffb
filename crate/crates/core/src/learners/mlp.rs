//! Feed-forward neural network: rectifier hidden layers, logistic output,
//! trained with mini-batch gradient descent plus momentum on the
//! cross-entropy loss.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{log_clamped, sigmoid, LearnError, MlpParams};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Fitted network parameters. `weights[l]` is row-major `out x in` for
/// layer l over `layer_sizes = [input, hidden..., 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Per-layer parameter gradients, same shapes as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// Seeded fan-in-scaled uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in))
    /// weights, zero biases.
    pub fn init(layer_sizes: Vec<usize>, rng: &mut Rng) -> MlpModel {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 1..layer_sizes.len() {
            let fan_in = layer_sizes[l - 1];
            let fan_out = layer_sizes[l];
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.uniform(-bound, bound))
                .collect();
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        MlpModel {
            layer_sizes,
            weights,
            biases,
        }
    }

    /// Forward pass for one row; returns activations of every non-input
    /// layer (hidden rectifier outputs, then the output probability).
    fn forward(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers());
        let last = self.n_layers() - 1;
        for l in 0..self.n_layers() {
            let input: &[f64] = if l == 0 { row } else { &activations[l - 1] };
            let fan_in = self.layer_sizes[l];
            let fan_out = self.layer_sizes[l + 1];
            let w = &self.weights[l];
            let mut out = vec![0.0; fan_out];
            for (j, o) in out.iter_mut().enumerate() {
                let wrow = &w[j * fan_in..(j + 1) * fan_in];
                let z: f64 =
                    wrow.iter().zip(input).map(|(wv, av)| wv * av).sum::<f64>() + self.biases[l][j];
                *o = if l == last { sigmoid(z) } else { z.max(0.0) };
            }
            activations.push(out);
        }
        activations
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let acts = self.forward(row);
        acts[self.n_layers() - 1][0]
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect()
    }

    fn zero_gradients(&self) -> MlpGradients {
        MlpGradients {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

/// Mean cross-entropy over `rows` and its gradient w.r.t. every parameter.
///
/// This is the quantity the training loop descends; gradient-correctness
/// checks difference the returned loss directly.
pub fn loss_and_gradient(
    model: &MlpModel,
    x: &Matrix,
    rows: &[usize],
    y: &[u8],
) -> (f64, MlpGradients) {
    let mut grads = model.zero_gradients();
    let n_layers = model.n_layers();
    let scale = 1.0 / rows.len() as f64;
    let mut loss = 0.0;
    for &i in rows {
        let row = x.row(i);
        let acts = model.forward(row);
        let p = acts[n_layers - 1][0];
        let yi = f64::from(y[i]);
        loss += if y[i] == 1 {
            -log_clamped(p)
        } else {
            -log_clamped(1.0 - p)
        };

        // Output delta for sigmoid + cross-entropy.
        let mut delta = vec![(p - yi) * scale];
        for l in (0..n_layers).rev() {
            let fan_in = model.layer_sizes[l];
            let input: &[f64] = if l == 0 { row } else { &acts[l - 1] };
            {
                let gw = &mut grads.weights[l];
                let gb = &mut grads.biases[l];
                for (j, &d) in delta.iter().enumerate() {
                    gb[j] += d;
                    let grow = &mut gw[j * fan_in..(j + 1) * fan_in];
                    for (g, &a) in grow.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
            }
            if l > 0 {
                // Rectifier derivative: active wherever the activation is
                // positive (zero at the kink).
                let w = &model.weights[l];
                let prev = &acts[l - 1];
                let mut next_delta = vec![0.0; fan_in];
                for (j, &d) in delta.iter().enumerate() {
                    let wrow = &w[j * fan_in..(j + 1) * fan_in];
                    for (nd, &wv) in next_delta.iter_mut().zip(wrow) {
                        *nd += wv * d;
                    }
                }
                for (nd, &a) in next_delta.iter_mut().zip(prev) {
                    if a <= 0.0 {
                        *nd = 0.0;
                    }
                }
                delta = next_delta;
            }
        }
    }
    (loss * scale, grads)
}

/// Train with mini-batch gradient descent and momentum. Row order is
/// reshuffled every epoch from the seed's substream, so training is
/// deterministic per (spec, seed).
pub fn train_mlp(
    x: &Matrix,
    y: &[u8],
    params: &MlpParams,
    seed: u64,
) -> Result<MlpModel, LearnError> {
    let mut layer_sizes = vec![x.cols()];
    layer_sizes.extend(params.hidden_layers.iter().map(|&h| h as usize));
    layer_sizes.push(1);

    let mut init_rng = Rng::substream(seed, "init");
    let mut model = MlpModel::init(layer_sizes, &mut init_rng);
    let mut velocity = model.zero_gradients();

    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut order_rng = Rng::substream(seed, "batches");
    let batch = params.batch_size as usize;
    for epoch in 0..params.epochs {
        order_rng.shuffle(&mut order);
        for rows in order.chunks(batch) {
            let (loss, grads) = loss_and_gradient(&model, x, rows, y);
            if !loss.is_finite() {
                return Err(LearnError::NonFiniteLoss {
                    at: format!("mlp epoch {epoch}"),
                });
            }
            for l in 0..model.weights.len() {
                for ((w, v), g) in model.weights[l]
                    .iter_mut()
                    .zip(&mut velocity.weights[l])
                    .zip(&grads.weights[l])
                {
                    *v = params.momentum * *v - params.learning_rate * g;
                    *w += *v;
                }
                for ((b, v), g) in model.biases[l]
                    .iter_mut()
                    .zip(&mut velocity.biases[l])
                    .zip(&grads.biases[l])
                {
                    *v = params.momentum * *v - params.learning_rate * g;
                    *b += *v;
                }
            }
        }
    }
    Ok(model)
}
