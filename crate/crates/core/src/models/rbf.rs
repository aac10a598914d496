use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_classes, gradient_descent, kmeans_rows, one_hot, Classifier, CostPolicy, ModelError,
    Result, TrainConfig,
};
use crate::preprocess::FeatureMatrix;
use crate::spectra::{Histology, Label, TissueGroup};

const MIN_WIDTH: f64 = 1e-6;

/// Gaussian kernels `R_j(x) = exp(-‖x − c_j‖² / (2σ_j²))` feeding a linear
/// output layer with one bias per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfNetwork {
    centers: Vec<Vec<f64>>,
    widths: Vec<f64>,
    /// `outputs × kernels`, row-major.
    output_weights: Vec<f64>,
    output_bias: Vec<f64>,
    outputs: usize,
    kernels_trainable: bool,
}

impl RbfNetwork {
    /// Network with zero output weights.
    pub fn new(
        centers: Vec<Vec<f64>>,
        widths: Vec<f64>,
        outputs: usize,
        kernels_trainable: bool,
    ) -> Self {
        assert!(!centers.is_empty(), "at least one kernel");
        assert_eq!(centers.len(), widths.len());
        let dim = centers[0].len();
        assert!(centers.iter().all(|c| c.len() == dim), "ragged centers");
        let k = centers.len();
        Self {
            centers,
            widths,
            output_weights: vec![0.0; outputs * k],
            output_bias: vec![0.0; outputs],
            outputs,
            kernels_trainable,
        }
    }

    pub fn with_output_weights(mut self, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        assert_eq!(weights.len(), self.output_weights.len());
        assert_eq!(bias.len(), self.outputs);
        self.output_weights = weights;
        self.output_bias = bias;
        self
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn kernel_count(&self) -> usize {
        self.centers.len()
    }

    pub fn kernels_trainable(&self) -> bool {
        self.kernels_trainable
    }

    pub fn activations(&self, x: &[f64]) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, &s)| (-sq_dist(x, c) / (2.0 * s * s)).exp())
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input dimension");
        head_forward(&self.activations(x), &self.output_weights, &self.output_bias)
    }

    /// Output weights, output biases, then (if trainable) centers row by row
    /// and widths.
    pub fn params(&self) -> Vec<f64> {
        let mut p = [&self.output_weights[..], &self.output_bias].concat();
        if self.kernels_trainable {
            for c in &self.centers {
                p.extend_from_slice(c);
            }
            p.extend_from_slice(&self.widths);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let (w, rest) = p.split_at(self.output_weights.len());
        let (b, rest) = rest.split_at(self.outputs);
        self.output_weights.copy_from_slice(w);
        self.output_bias.copy_from_slice(b);
        if self.kernels_trainable {
            let dim = self.input_dim();
            let (c, s) = rest.split_at(self.centers.len() * dim);
            for (center, chunk) in self.centers.iter_mut().zip(c.chunks(dim)) {
                center.copy_from_slice(chunk);
            }
            self.widths.copy_from_slice(s);
        }
    }

    /// Cost-weighted squared error `1/(2n) Σ c_y ‖o − t‖²` and its gradient
    /// with respect to [`Self::params`].
    pub fn loss_and_gradient(
        &self,
        x: &FeatureMatrix,
        targets: &[Label],
        cost: &CostPolicy,
    ) -> (f64, Vec<f64>) {
        let n = x.rows() as f64;
        let k = self.kernel_count();
        let dim = self.input_dim();
        let mut head = HeadGrad::new(self.outputs, k);
        let mut g_c = vec![0.0; if self.kernels_trainable { k * dim } else { 0 }];
        let mut g_s = vec![0.0; if self.kernels_trainable { k } else { 0 }];
        for (row, &label) in x.row_iter().zip(targets) {
            let r = self.activations(row);
            let d_r = head.accumulate(&r, label, cost, n, &self.output_weights, &self.output_bias);
            if self.kernels_trainable {
                for j in 0..k {
                    let s = self.widths[j];
                    let common = d_r[j] * r[j];
                    let mut d2 = 0.0;
                    for (i, (&xi, &ci)) in row.iter().zip(&self.centers[j]).enumerate() {
                        let diff = xi - ci;
                        d2 += diff * diff;
                        g_c[j * dim + i] += common * diff / (s * s);
                    }
                    g_s[j] += common * d2 / (s * s * s);
                }
            }
        }
        let (loss, mut grad) = head.finish(n);
        grad.extend(g_c);
        grad.extend(g_s);
        (loss, grad)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn head_forward(r: &[f64], weights: &[f64], bias: &[f64]) -> Vec<f64> {
    let k = r.len();
    bias.iter()
        .enumerate()
        .map(|(j, b)| {
            weights[j * k..(j + 1) * k]
                .iter()
                .zip(r)
                .map(|(w, a)| w * a)
                .sum::<f64>()
                + b
        })
        .collect()
}

/// Linear output layer accumulator, shared by the full and cached paths so
/// both produce identical numbers.
struct HeadGrad {
    outputs: usize,
    kernels: usize,
    loss: f64,
    g_w: Vec<f64>,
    g_b: Vec<f64>,
}

impl HeadGrad {
    fn new(outputs: usize, kernels: usize) -> Self {
        Self {
            outputs,
            kernels,
            loss: 0.0,
            g_w: vec![0.0; outputs * kernels],
            g_b: vec![0.0; outputs],
        }
    }

    /// Adds one sample; returns the loss gradient with respect to the activations.
    fn accumulate(
        &mut self,
        r: &[f64],
        label: Label,
        cost: &CostPolicy,
        n: f64,
        weights: &[f64],
        bias: &[f64],
    ) -> Vec<f64> {
        let c = cost.weight(label);
        let t = one_hot(label);
        let out = head_forward(r, weights, bias);
        let k = self.kernels;
        let mut d_r = vec![0.0; k];
        for j in 0..self.outputs {
            let err = out[j] - t.get(j).copied().unwrap_or(0.0);
            self.loss += c * err * err;
            let d = c * err / n;
            self.g_b[j] += d;
            for m in 0..k {
                self.g_w[j * k + m] += d * r[m];
                d_r[m] += d * weights[j * k + m];
            }
        }
        d_r
    }

    fn finish(self, n: f64) -> (f64, Vec<f64>) {
        (self.loss / (2.0 * n), [self.g_w, self.g_b].concat())
    }
}

impl Classifier for RbfNetwork {
    fn input_dim(&self) -> usize {
        self.centers[0].len()
    }

    fn scores(&self, x: &[f64]) -> [f64; 2] {
        let out = self.forward(x);
        [out[0], out[1]]
    }
}

/// Width of each kernel: distance to the nearest other center at a distinct
/// location. Falls back to 1 when all centers coincide.
pub fn nearest_center_widths(centers: &[Vec<f64>]) -> Vec<f64> {
    centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let nearest = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, o)| sq_dist(c, o).sqrt())
                .filter(|&d| d > 1e-12)
                .fold(f64::INFINITY, f64::min);
            if nearest.is_finite() {
                nearest.max(MIN_WIDTH)
            } else {
                1.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelInit {
    /// k-means over every training row.
    KmeansAll,
    /// Half the kernels sit on training rows of one histology; the rest come
    /// from k-means over all rows.
    HalfFixedToClass(Histology),
    /// k-means over a class-balanced subsample of the training rows.
    KmeansOnTrimmed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbfConfig {
    pub kernels: usize,
    pub init: KernelInit,
    /// Whether centers and widths move during training.
    pub trainable: bool,
}

impl RbfConfig {
    pub fn new(kernels: usize, init: KernelInit, trainable: bool) -> Self {
        Self {
            kernels,
            init,
            trainable,
        }
    }
}

/// Row indices giving every tissue group the size of the smallest one.
/// Groups are subsampled without replacement; the result is in row order.
pub(crate) fn balanced_indices(groups: &[TissueGroup], seed: u64) -> Vec<usize> {
    let mut by_group: BTreeMap<TissueGroup, Vec<usize>> = BTreeMap::new();
    for (i, &g) in groups.iter().enumerate() {
        by_group.entry(g).or_default().push(i);
    }
    let Some(m) = by_group.values().map(Vec::len).min() else {
        return Vec::new();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m * by_group.len());
    for rows in by_group.values() {
        out.extend(index::sample(&mut rng, rows.len(), m).iter().map(|i| rows[i]));
    }
    out.sort_unstable();
    out
}

/// Kernel centers [`train_rbf`] starts from when trained with `train_seed`.
pub fn initialize_kernels(
    cfg: &RbfConfig,
    features: &FeatureMatrix,
    train_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let seed = ChaCha8Rng::seed_from_u64(train_seed).next_u64();
    let rows: Vec<&[f64]> = features.row_iter().collect();
    match cfg.init {
        KernelInit::KmeansAll => Ok(kmeans_rows(&rows, cfg.kernels, seed)?.centroids),
        KernelInit::KmeansOnTrimmed => {
            let groups: Vec<TissueGroup> =
                features.histologies().iter().map(|h| h.group()).collect();
            let keep = balanced_indices(&groups, seed);
            let trimmed: Vec<&[f64]> = keep.iter().map(|&i| rows[i]).collect();
            Ok(kmeans_rows(&trimmed, cfg.kernels, seed.wrapping_add(1))?.centroids)
        }
        KernelInit::HalfFixedToClass(h) => {
            let members: Vec<usize> = features
                .histologies()
                .iter()
                .enumerate()
                .filter(|&(_, &x)| x == h)
                .map(|(i, _)| i)
                .collect();
            if members.is_empty() {
                return Err(ModelError::MissingHistology(h));
            }
            let fixed = cfg.kernels / 2;
            if fixed > members.len() {
                return Err(ModelError::InvalidConfig(format!(
                    "{fixed} kernels fixed to {h} but only {} such rows",
                    members.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picks = index::sample(&mut rng, members.len(), fixed).into_vec();
            picks.sort_unstable();
            let mut centers: Vec<Vec<f64>> =
                picks.iter().map(|&i| rows[members[i]].to_vec()).collect();
            let rest = cfg.kernels - fixed;
            if rest > 0 {
                centers.extend(kmeans_rows(&rows, rest, rng.next_u64())?.centroids);
            }
            Ok(centers)
        }
    }
}

/// Places the kernels, sets widths by the nearest-center rule and fits the
/// network by gradient descent. Frozen kernels only train the output layer,
/// on cached activations.
pub fn train_rbf(
    cfg: &TrainConfig,
    rbf: &RbfConfig,
    features: &FeatureMatrix,
    targets: &[Label],
) -> Result<RbfNetwork> {
    cfg.validate()?;
    check_classes(targets)?;
    if rbf.kernels == 0 {
        return Err(ModelError::InvalidConfig("kernel count must be positive".into()));
    }
    let centers = initialize_kernels(rbf, features, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.next_u64();
    let widths = nearest_center_widths(&centers);
    let k = centers.len();
    let w0: Vec<f64> = (0..2 * k).map(|_| rng.random_range(-0.1..0.1)).collect();
    let mut net =
        RbfNetwork::new(centers, widths, 2, rbf.trainable).with_output_weights(w0, vec![0.0; 2]);

    if rbf.trainable {
        let template = net.clone();
        let dim = net.input_dim();
        let width_offset = 2 * k + 2 + k * dim;
        let (params, _) = gradient_descent(
            net.params(),
            |p| {
                let mut m = template.clone();
                m.set_params(p);
                m.loss_and_gradient(features, targets, &cfg.cost)
            },
            |p| {
                for s in &mut p[width_offset..] {
                    *s = s.max(MIN_WIDTH);
                }
            },
            cfg,
        )?;
        net.set_params(&params);
    } else {
        let phi: Vec<Vec<f64>> = features.row_iter().map(|x| net.activations(x)).collect();
        let n = features.rows() as f64;
        let (params, _) = gradient_descent(
            net.params(),
            |p| {
                let (w, b) = p.split_at(2 * k);
                let mut head = HeadGrad::new(2, k);
                for (r, &label) in phi.iter().zip(targets) {
                    head.accumulate(r, label, &cfg.cost, n, w, b);
                }
                head.finish(n)
            },
            |_| {},
            cfg,
        )?;
        net.set_params(&params);
    }
    Ok(net)
}
