use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_classes, Classifier, CostPolicy, ModelError, Result};
use crate::preprocess::FeatureMatrix;
use crate::spectra::Label;

/// `P(SIL | x) = σ(w·x + b)`; outputs are `[1 − p, p]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Ridge penalty on the weights (not the bias).
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the largest Newton step component falls below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl LogisticModel {
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear(x))
    }

    fn linear(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    pub fn from_params(p: &[f64]) -> Self {
        let (w, b) = p.split_at(p.len() - 1);
        Self {
            weights: w.to_vec(),
            bias: b[0],
        }
    }

    /// Cost-weighted mean negative log-likelihood plus `l2/2 ‖w‖²`, and its
    /// gradient with respect to [`Self::params`].
    pub fn loss_and_gradient(
        &self,
        x: &FeatureMatrix,
        targets: &[Label],
        cost: &CostPolicy,
        l2: f64,
    ) -> (f64, Vec<f64>) {
        let n = x.rows() as f64;
        let d = self.weights.len();
        let mut grad = vec![0.0; d + 1];
        let mut loss = 0.0;
        for (row, &label) in x.row_iter().zip(targets) {
            let c = cost.weight(label);
            let z = self.linear(row);
            let y = if label.is_sil() { 1.0 } else { 0.0 };
            loss += c * if label.is_sil() { softplus(-z) } else { softplus(z) };
            let r = c * (sigmoid(z) - y) / n;
            for (g, v) in grad.iter_mut().zip(row) {
                *g += r * v;
            }
            grad[d] += r;
        }
        loss /= n;
        for (g, w) in grad.iter_mut().zip(&self.weights) {
            *g += l2 * w;
        }
        loss += 0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>();
        (loss, grad)
    }

    fn hessian(&self, x: &FeatureMatrix, targets: &[Label], cost: &CostPolicy, l2: f64) -> DMatrix<f64> {
        let n = x.rows() as f64;
        let d = self.weights.len();
        let mut h = DMatrix::<f64>::zeros(d + 1, d + 1);
        let mut aug = vec![1.0; d + 1];
        for (row, &label) in x.row_iter().zip(targets) {
            let p = self.probability(row);
            let s = cost.weight(label) * p * (1.0 - p) / n;
            aug[..d].copy_from_slice(row);
            for a in 0..=d {
                let sa = s * aug[a];
                for b in a..=d {
                    h[(a, b)] += sa * aug[b];
                }
            }
        }
        for a in 0..=d {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
            h[(a, a)] += if a < d { l2 } else { 0.0 } + 1e-10;
        }
        h
    }
}

impl Classifier for LogisticModel {
    fn input_dim(&self) -> usize {
        self.weights.len()
    }

    fn scores(&self, x: &[f64]) -> [f64; 2] {
        let p = self.probability(x);
        [1.0 - p, p]
    }
}

/// [`train_logistic_with`] under the default settings.
pub fn train_logistic(
    features: &FeatureMatrix,
    targets: &[Label],
    cost: &CostPolicy,
) -> Result<LogisticModel> {
    train_logistic_with(&LogisticConfig::default(), features, targets, cost)
}

/// Newton iterations with a backtracking line search. Deterministic: no
/// random initialization is involved.
pub fn train_logistic_with(
    cfg: &LogisticConfig,
    features: &FeatureMatrix,
    targets: &[Label],
    cost: &CostPolicy,
) -> Result<LogisticModel> {
    check_classes(targets)?;
    if !(cfg.l2 >= 0.0 && cfg.l2.is_finite()) || cfg.max_iter == 0 {
        return Err(ModelError::InvalidConfig(
            "l2 must be finite and >= 0, max_iter positive".into(),
        ));
    }
    let d = features.cols();
    let mut model = LogisticModel {
        weights: vec![0.0; d],
        bias: 0.0,
    };
    let (mut loss, mut grad) = model.loss_and_gradient(features, targets, cost, cfg.l2);
    for _ in 0..cfg.max_iter {
        let h = model.hessian(features, targets, cost, cfg.l2);
        let g = DVector::from_vec(grad.clone());
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => h.lu().solve(&g).ok_or_else(|| {
                ModelError::InvalidConfig("singular logistic Hessian".into())
            })?,
        };
        let base = model.params();
        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let trial: Vec<f64> = base.iter().zip(step.iter()).map(|(p, s)| p - t * s).collect();
            let cand = LogisticModel::from_params(&trial);
            let (l, gr) = cand.loss_and_gradient(features, targets, cost, cfg.l2);
            if l.is_finite() && l <= loss - 1e-4 * t * slope {
                accepted = Some((cand, l, gr));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, l, gr)) = accepted else { break };
        let moved = step.amax() * t;
        model = cand;
        loss = l;
        grad = gr;
        if moved < cfg.tol {
            break;
        }
    }
    if cfg.l2 == 0.0 && loss < 1e-8 {
        log::warn!("logistic training data looks linearly separable; weights are unbounded");
    }
    Ok(model)
}
