//! Base classifiers: logistic discrimination, a single-hidden-layer MLP and a
//! Gaussian RBF network, trained on cost-weighted losses.
//!
//! Networks have two outputs, one per class (index 0 non-SIL, index 1 SIL).
//! The SIL score used for thresholding is the SIL output divided by the sum
//! of both outputs, with negative outputs clamped to zero.

mod kmeans;
mod logistic;
mod mlp;
mod rbf;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectra::{Histology, Label};

pub use kmeans::{kmeans, kmeans_rows, KMeans};
pub use logistic::{train_logistic, train_logistic_with, LogisticConfig, LogisticModel};
pub use mlp::{train_mlp, MlpNetwork};
pub(crate) use rbf::balanced_indices;
pub use rbf::{
    initialize_kernels, nearest_center_widths, train_rbf, KernelInit, RbfConfig, RbfNetwork,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training diverged at epoch {epoch} (learning rate {learning_rate})")]
    Diverged { epoch: usize, learning_rate: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid cost policy: {0}")]
    InvalidCost(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training data has no {0} samples")]
    MissingClass(Label),
    #[error("training data has no {0} samples for kernel placement")]
    MissingHistology(Histology),
    #[error("k-means: {0}")]
    KMeans(String),
    #[error("model file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Per-class misclassification costs and the SIL decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPolicy {
    sil_cost: f64,
    normal_cost: f64,
    decision_threshold: f64,
}

impl CostPolicy {
    pub fn new(sil_cost: f64, normal_cost: f64, decision_threshold: f64) -> Result<Self> {
        for (name, c) in [("sil_cost", sil_cost), ("normal_cost", normal_cost)] {
            if !(c.is_finite() && c > 0.0) {
                return Err(ModelError::InvalidCost(format!("{name} = {c} must be finite and > 0")));
            }
        }
        if !(decision_threshold > 0.0 && decision_threshold < 1.0) {
            return Err(ModelError::InvalidCost(format!(
                "decision threshold {decision_threshold} outside (0, 1)"
            )));
        }
        Ok(Self {
            sil_cost,
            normal_cost,
            decision_threshold,
        })
    }

    /// SIL errors cost `sil_cost` times a normal-tissue error; threshold 0.5.
    pub fn sil_weighted(sil_cost: f64) -> Result<Self> {
        Self::new(sil_cost, 1.0, 0.5)
    }

    pub fn sil_cost(&self) -> f64 {
        self.sil_cost
    }

    pub fn normal_cost(&self) -> f64 {
        self.normal_cost
    }

    pub fn decision_threshold(&self) -> f64 {
        self.decision_threshold
    }

    pub fn weight(&self, label: Label) -> f64 {
        match label {
            Label::Sil => self.sil_cost,
            Label::NonSil => self.normal_cost,
        }
    }

    pub fn max_cost(&self) -> f64 {
        self.sil_cost.max(self.normal_cost)
    }

    /// SIL iff `score >= threshold`.
    pub fn decide(&self, sil_score: f64) -> Label {
        if sil_score >= self.decision_threshold {
            Label::Sil
        } else {
            Label::NonSil
        }
    }
}

impl Default for CostPolicy {
    fn default() -> Self {
        Self {
            sil_cost: 1.0,
            normal_cost: 1.0,
            decision_threshold: 0.5,
        }
    }
}

/// Full-batch gradient descent settings shared by the MLP and RBF trainers.
///
/// The step applied each epoch is `learning_rate / max_cost`, so raising a
/// class cost does not change the stability region of the descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Consecutive low-improvement epochs tolerated before stopping.
    pub stop_patience: usize,
    /// Relative training-loss improvement counted as progress.
    pub min_rel_improvement: f64,
    pub seed: u64,
    pub cost: CostPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_epochs: 2000,
            stop_patience: 25,
            min_rel_improvement: 1e-5,
            seed: 0,
            cost: CostPolicy::default(),
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_cost(mut self, cost: CostPolicy) -> Self {
        self.cost = cost;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.max_epochs == 0 || self.stop_patience == 0 {
            return Err(ModelError::InvalidConfig(
                "max_epochs and stop_patience must be positive".into(),
            ));
        }
        if !(self.min_rel_improvement >= 0.0) {
            return Err(ModelError::InvalidConfig(
                "min_rel_improvement must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub epochs: usize,
    pub losses: Vec<f64>,
    pub stopped_early: bool,
}

/// Minimizes `objective` from `params`; `constrain` runs after every step.
/// A loss that keeps rising for `stop_patience` epochs past its starting
/// value is reported as divergence.
pub(crate) fn gradient_descent(
    mut params: Vec<f64>,
    objective: impl Fn(&[f64]) -> (f64, Vec<f64>),
    constrain: impl Fn(&mut [f64]),
    cfg: &TrainConfig,
) -> Result<(Vec<f64>, TrainingTrace)> {
    let step = cfg.learning_rate / cfg.cost.max_cost();
    let mut trace = TrainingTrace::default();
    let mut stall = 0;
    let mut rising = 0;
    for epoch in 0..cfg.max_epochs {
        let (loss, grad) = objective(&params);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::Diverged {
                epoch,
                learning_rate: cfg.learning_rate,
            });
        }
        if let Some(&prev) = trace.losses.last() {
            let rel = (prev - loss) / prev.abs().max(f64::MIN_POSITIVE);
            rising = if rel < 0.0 { rising + 1 } else { 0 };
            stall = if (0.0..cfg.min_rel_improvement).contains(&rel) { stall + 1 } else { 0 };
            if rising >= cfg.stop_patience && loss > trace.losses[0] {
                return Err(ModelError::Diverged {
                    epoch,
                    learning_rate: cfg.learning_rate,
                });
            }
        }
        trace.losses.push(loss);
        trace.epochs = epoch + 1;
        if stall >= cfg.stop_patience {
            trace.stopped_early = true;
            break;
        }
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= step * g;
        }
        constrain(&mut params);
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(ModelError::Diverged {
            epoch: trace.epochs,
            learning_rate: cfg.learning_rate,
        });
    }
    Ok((params, trace))
}

pub(crate) fn check_classes(targets: &[Label]) -> Result<()> {
    for label in [Label::Sil, Label::NonSil] {
        if !targets.contains(&label) {
            return Err(ModelError::MissingClass(label));
        }
    }
    Ok(())
}

pub(crate) fn one_hot(label: Label) -> [f64; 2] {
    match label {
        Label::NonSil => [1.0, 0.0],
        Label::Sil => [0.0, 1.0],
    }
}

/// Anything producing a (non-SIL, SIL) output pair for a feature vector.
pub trait Classifier {
    fn input_dim(&self) -> usize;
    fn scores(&self, x: &[f64]) -> [f64; 2];
}

/// SIL output normalized by the sum of both outputs. Negative outputs count
/// as zero; if both are zero the score is 0.5.
pub fn sil_score(scores: [f64; 2]) -> f64 {
    let non = scores[0].max(0.0);
    let sil = scores[1].max(0.0);
    let total = non + sil;
    if total > 0.0 {
        sil / total
    } else {
        0.5
    }
}

/// Thresholded label and the SIL score it was derived from.
pub fn classify<C: Classifier + ?Sized>(model: &C, x: &[f64], cost: &CostPolicy) -> (Label, f64) {
    let score = sil_score(model.scores(x));
    (cost.decide(score), score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    Logistic,
    Mlp,
    Rbf,
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::Logistic => "logistic",
            ModelFamily::Mlp => "mlp",
            ModelFamily::Rbf => "rbf",
        })
    }
}

impl FromStr for ModelFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "msa" => Ok(ModelFamily::Logistic),
            "mlp" => Ok(ModelFamily::Mlp),
            "rbf" => Ok(ModelFamily::Rbf),
            _ => Err(format!("unknown model family `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Logistic(LogisticModel),
    Mlp(MlpNetwork),
    Rbf(RbfNetwork),
}

impl Model {
    pub fn family(&self) -> ModelFamily {
        match self {
            Model::Logistic(_) => ModelFamily::Logistic,
            Model::Mlp(_) => ModelFamily::Mlp,
            Model::Rbf(_) => ModelFamily::Rbf,
        }
    }
}

impl Classifier for Model {
    fn input_dim(&self) -> usize {
        match self {
            Model::Logistic(m) => m.input_dim(),
            Model::Mlp(m) => m.input_dim(),
            Model::Rbf(m) => m.input_dim(),
        }
    }

    fn scores(&self, x: &[f64]) -> [f64; 2] {
        match self {
            Model::Logistic(m) => m.scores(x),
            Model::Mlp(m) => m.scores(x),
            Model::Rbf(m) => m.scores(x),
        }
    }
}

const MODEL_FORMAT: &str = "silscreen-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    /// Training settings the model was produced with, seed included.
    pub config: Option<TrainConfig>,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, config: Option<TrainConfig>) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config,
            model,
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ModelError::Format(format!(
                "unsupported format {} v{}",
                file.format, file.version
            )));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_policy_validation() {
        assert!(CostPolicy::new(1.0, 1.0, 1.0 + 1e-9).is_err());
        assert!(CostPolicy::new(0.0, 1.0, 0.5).is_err());
        assert!(CostPolicy::new(f64::INFINITY, 1.0, 0.5).is_err());
        assert!(CostPolicy::new(2.5, 1.0, 0.5).is_ok());
    }

    #[test]
    fn threshold_rule() {
        let c = CostPolicy::default();
        assert_eq!(c.decide(0.7), Label::Sil);
        assert_eq!(c.decide(0.5), Label::Sil);
        assert_eq!(c.decide(0.4999), Label::NonSil);
    }

    #[test]
    fn score_normalization() {
        assert_eq!(sil_score([0.3, 0.7]), 0.7);
        assert_eq!(sil_score([-0.2, 0.4]), 1.0);
        assert_eq!(sil_score([-1.0, -1.0]), 0.5);
        assert_eq!(sil_score([0.2, 0.2]), 0.5);
    }

    #[test]
    fn descent_reports_divergence() {
        let cfg = TrainConfig {
            learning_rate: 10.0,
            ..TrainConfig::default()
        };
        // f(x) = x², step 10 → |x| grows ×19 per epoch
        let err = gradient_descent(vec![1.0], |p| (p[0] * p[0], vec![2.0 * p[0]]), |_| {}, &cfg)
            .unwrap_err();
        assert!(matches!(err, ModelError::Diverged { learning_rate, .. } if learning_rate == 10.0));
    }

    #[test]
    fn descent_stops_on_plateau() {
        let cfg = TrainConfig {
            learning_rate: 0.1,
            stop_patience: 3,
            ..TrainConfig::default()
        };
        let (p, trace) =
            gradient_descent(vec![1.0], |p| (1.0 + p[0] * p[0], vec![2.0 * p[0]]), |_| {}, &cfg)
                .unwrap();
        assert!(trace.stopped_early);
        assert!(trace.epochs < cfg.max_epochs);
        assert!(p[0].abs() < 1e-2);
    }
}
