//! Pools of independently seeded classifiers whose outputs are merged by an
//! elementwise average or median before thresholding.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{sil_score, Classifier, CostPolicy, Model, ModelError, ModelFamily};
use crate::spectra::Label;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("empty pool")]
    EmptyPool,
    #[error("member {index} has {found} outputs, expected {expected}")]
    ArityMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("mixed pool ({0} and {1}) not allowed here")]
    MixedPool(ModelFamily, ModelFamily),
    #[error("member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: ModelError,
    },
    #[error("seed stride {stride} is smaller than the pool size {pool}")]
    SeedOverlap { stride: u64, pool: usize },
    #[error("ensemble file: {0}")]
    Format(String),
}

type Result<T> = std::result::Result<T, EnsembleError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Combiner {
    Average,
    Median,
}

impl Combiner {
    pub fn tag(self) -> &'static str {
        match self {
            Combiner::Average => "ave",
            Combiner::Median => "med",
        }
    }

    pub fn combine(self, outputs: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            Combiner::Average => combine_average(outputs),
            Combiner::Median => combine_median(outputs),
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Combiner {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ave" | "average" | "mean" => Ok(Combiner::Average),
            "med" | "median" => Ok(Combiner::Median),
            _ => Err(format!("unknown combiner `{s}` (expected ave or med)")),
        }
    }
}

fn check_pool(outputs: &[Vec<f64>]) -> Result<usize> {
    let first = outputs.first().ok_or(EnsembleError::EmptyPool)?;
    for (index, o) in outputs.iter().enumerate() {
        if o.len() != first.len() {
            return Err(EnsembleError::ArityMismatch {
                index,
                expected: first.len(),
                found: o.len(),
            });
        }
    }
    Ok(first.len())
}

/// Elementwise mean. Computed as an offset from the first member so a pool
/// of identical outputs returns them exactly, then clamped to the member range.
pub fn combine_average(outputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let arity = check_pool(outputs)?;
    let n = outputs.len() as f64;
    Ok((0..arity)
        .map(|j| {
            let x0 = outputs[0][j];
            let (lo, hi) = outputs
                .iter()
                .fold((x0, x0), |(lo, hi), o| (lo.min(o[j]), hi.max(o[j])));
            let shift: f64 = outputs.iter().map(|o| o[j] - x0).sum();
            (x0 + shift / n).clamp(lo, hi)
        })
        .collect())
}

/// Elementwise median; even pools average the two middle values.
pub fn combine_median(outputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let arity = check_pool(outputs)?;
    let n = outputs.len();
    let mut column = Vec::with_capacity(n);
    Ok((0..arity)
        .map(|j| {
            column.clear();
            column.extend(outputs.iter().map(|o| o[j]));
            column.sort_by(f64::total_cmp);
            if n % 2 == 1 {
                column[n / 2]
            } else {
                let (a, b) = (column[n / 2 - 1], column[n / 2]);
                a + (b - a) / 2.0
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    members: Vec<Model>,
    combiner: Combiner,
    member_seeds: Vec<u64>,
}

impl Ensemble {
    /// All members must share a model family.
    pub fn new(members: Vec<Model>, combiner: Combiner, member_seeds: Vec<u64>) -> Result<Self> {
        if let Some(first) = members.first() {
            if let Some(other) = members.iter().find(|m| m.family() != first.family()) {
                return Err(EnsembleError::MixedPool(first.family(), other.family()));
            }
        }
        Self::new_mixed(members, combiner, member_seeds)
    }

    /// Pool that may hold several model families.
    pub fn new_mixed(members: Vec<Model>, combiner: Combiner, member_seeds: Vec<u64>) -> Result<Self> {
        if members.is_empty() {
            return Err(EnsembleError::EmptyPool);
        }
        Ok(Self {
            members,
            combiner,
            member_seeds,
        })
    }

    pub fn members(&self) -> &[Model] {
        &self.members
    }

    pub fn member_seeds(&self) -> &[u64] {
        &self.member_seeds
    }

    pub fn combiner(&self) -> Combiner {
        self.combiner
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Same members, different combiner.
    pub fn with_combiner(&self, combiner: Combiner) -> Self {
        Self {
            combiner,
            ..self.clone()
        }
    }

    /// Outputs of every member for one input.
    pub fn member_outputs(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| m.scores(x).to_vec()).collect()
    }

    pub fn predict(&self, x: &[f64], cost: &CostPolicy) -> (Label, f64) {
        let score = sil_score(self.scores(x));
        (cost.decide(score), score)
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let e: Ensemble =
            serde_json::from_str(text).map_err(|e| EnsembleError::Format(e.to_string()))?;
        if e.members.is_empty() {
            return Err(EnsembleError::EmptyPool);
        }
        Ok(e)
    }
}

impl Classifier for Ensemble {
    fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    fn scores(&self, x: &[f64]) -> [f64; 2] {
        let c = self
            .combiner
            .combine(&self.member_outputs(x))
            .expect("members share arity");
        [c[0], c[1]]
    }
}

/// Trains `n` members in parallel with seeds `base_seed + i`.
pub fn build_ensemble<F>(train: F, n: usize, base_seed: u64, combiner: Combiner) -> Result<Ensemble>
where
    F: Fn(u64) -> std::result::Result<Model, ModelError> + Sync,
{
    let seeds: Vec<u64> = (0..n as u64).map(|i| base_seed.wrapping_add(i)).collect();
    let members = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &s)| train(s).map_err(|source| EnsembleError::Member { index, source }))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new_mixed(members, combiner, seeds)
}

/// `reps` disjoint pools; repetition `r` uses seeds starting at `base_seed + r·stride`.
pub fn repeat_ensembles<F>(
    train: F,
    reps: usize,
    n: usize,
    base_seed: u64,
    stride: u64,
    combiner: Combiner,
) -> Result<Vec<Ensemble>>
where
    F: Fn(u64) -> std::result::Result<Model, ModelError> + Sync,
{
    if stride < n as u64 {
        return Err(EnsembleError::SeedOverlap { stride, pool: n });
    }
    (0..reps as u64)
        .map(|r| build_ensemble(&train, n, base_seed.wrapping_add(r * stride), combiner))
        .collect()
}
