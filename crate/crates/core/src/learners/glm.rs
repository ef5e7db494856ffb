//! L2-regularized logistic regression trained by full-batch gradient
//! descent. Deterministic: weights start at zero, so no seed is consumed.

use serde::{Deserialize, Serialize};

use super::{log_clamped, sigmoid, GlmParams, LearnError};
use crate::matrix::Matrix;

/// Fitted logistic-regression parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
}

impl GlmModel {
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| {
                let row = x.row(i);
                let z: f64 = self
                    .weights
                    .iter()
                    .zip(row)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + self.bias;
                sigmoid(z)
            })
            .collect()
    }
}

/// Regularized mean logistic loss and its gradient at (weights, bias).
///
/// The bias is not penalized. Exposed so gradient-correctness checks can
/// compare against finite differences.
pub fn loss_and_gradient(
    x: &Matrix,
    y: &[u8],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.rows() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for i in 0..x.rows() {
        let row = x.row(i);
        let z: f64 = weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>() + bias;
        let p = sigmoid(z);
        let yi = f64::from(y[i]);
        loss += if y[i] == 1 {
            -log_clamped(p)
        } else {
            -log_clamped(1.0 - p)
        };
        let residual = p - yi;
        for (g, v) in grad_w.iter_mut().zip(row) {
            *g += residual * v;
        }
        grad_b += residual;
    }
    loss /= n;
    grad_b /= n;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Minimize the regularized logistic loss for the configured iteration
/// budget. Aborts with `NonFiniteLoss` if the loss diverges.
pub fn train_glm(x: &Matrix, y: &[u8], params: &GlmParams) -> Result<GlmModel, LearnError> {
    let mut weights = vec![0.0; x.cols()];
    let mut bias = 0.0;
    for iter in 0..params.iterations {
        let (loss, grad_w, grad_b) = loss_and_gradient(x, y, &weights, bias, params.l2);
        if !loss.is_finite() {
            return Err(LearnError::NonFiniteLoss {
                at: format!("glm iteration {iter}"),
            });
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= params.learning_rate * g;
        }
        bias -= params.learning_rate * grad_b;
    }
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(LearnError::NonFiniteLoss {
            at: "glm final parameters".to_string(),
        });
    }
    Ok(GlmModel {
        weights,
        bias,
        l2: params.l2,
    })
}
