//! Composite decision schemes: the two constituent algorithms, the two-step
//! cascade, the one-step classifier on 26 concatenated features and the
//! misclassification-cost sweep.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dimred::{self, DimredError, PcaModel, ALGO1_PAIRS, ALGO2_PAIRS};
use crate::ensemble::{self, Combiner, EnsembleError};
use crate::eval::{self, EvalError, EvalReport};
use crate::models::{
    balanced_indices, sil_score, train_logistic_with, train_mlp, train_rbf, Classifier,
    CostPolicy, KernelInit, LogisticConfig, Model, ModelError, ModelFamily, RbfConfig,
    TrainConfig,
};
use crate::preprocess::{
    self, select_columns, FeatureMatrix, MeanScalePolicy, NormalizationPolicy, PreprocessError,
    Preprocessing,
};
use crate::spectra::{Dataset, Histology, Label, TissueGroup, WavelengthPair};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Dimred(#[from] DimredError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid constituent: {0}")]
    InvalidSpec(String),
    #[error("invalid run settings: {0}")]
    InvalidRun(String),
    #[error("cost list is empty")]
    EmptyCosts,
    #[error("no {0:?} rows to trim")]
    EmptyClass(TissueGroup),
}

type Result<T> = std::result::Result<T, PipelineError>;

/// Seed offset separating the step-2 pools of the cascade from step 1.
pub const STEP2_SEED_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstituentId {
    Algo1,
    Algo2,
}

impl ConstituentId {
    pub fn preprocessing(self) -> Preprocessing {
        match self {
            ConstituentId::Algo1 => Preprocessing::Normalized,
            ConstituentId::Algo2 => Preprocessing::NormalizedMeanScaled,
        }
    }

    pub fn negative_class(self) -> Histology {
        match self {
            ConstituentId::Algo1 => Histology::NormalSquamous,
            ConstituentId::Algo2 => Histology::NormalColumnar,
        }
    }
}

impl fmt::Display for ConstituentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstituentId::Algo1 => "algo1",
            ConstituentId::Algo2 => "algo2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    Full160,
    /// The `k` principal components with the smallest t-test p-values.
    Pcs(usize),
    Reduced13Algo1,
    Reduced13Algo2,
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSet::Full160 => f.write_str("full160"),
            FeatureSet::Pcs(k) => write!(f, "pcs{k}"),
            FeatureSet::Reduced13Algo1 => f.write_str("reduced13_algo1"),
            FeatureSet::Reduced13Algo2 => f.write_str("reduced13_algo2"),
        }
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full160" => Ok(FeatureSet::Full160),
            "reduced13_algo1" => Ok(FeatureSet::Reduced13Algo1),
            "reduced13_algo2" => Ok(FeatureSet::Reduced13Algo2),
            _ => s
                .strip_prefix("pcs")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(FeatureSet::Pcs)
                .ok_or_else(|| format!("unknown feature set `{s}`")),
        }
    }
}

/// Model family plus its size settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Preset {
    Logistic(LogisticConfig),
    /// `learning_rate` replaces the one in [`TrainConfig`].
    Mlp { hidden: usize, learning_rate: f64 },
    Rbf(RbfConfig),
}

/// Step size of the MLP presets.
pub const MLP_LEARNING_RATE: f64 = 1.0;

impl Preset {
    pub fn family(&self) -> ModelFamily {
        match self {
            Preset::Logistic(_) => ModelFamily::Logistic,
            Preset::Mlp { .. } => ModelFamily::Mlp,
            Preset::Rbf(_) => ModelFamily::Rbf,
        }
    }

    /// Sizes used for each constituent: 3 hidden units or kernels on PCs,
    /// 10 otherwise; algorithm (2) RBFs fix half their kernels on columnar
    /// rows and keep all kernels frozen.
    pub fn default_for(id: ConstituentId, family: ModelFamily, features: FeatureSet) -> Self {
        let on_pcs = matches!(features, FeatureSet::Pcs(_));
        match family {
            ModelFamily::Logistic => Preset::Logistic(LogisticConfig::default()),
            ModelFamily::Mlp => Preset::Mlp {
                hidden: if on_pcs { 3 } else { 10 },
                learning_rate: MLP_LEARNING_RATE,
            },
            ModelFamily::Rbf => Preset::Rbf(match (id, on_pcs) {
                (_, true) => RbfConfig::new(3, KernelInit::KmeansAll, true),
                (ConstituentId::Algo1, false) => RbfConfig::new(10, KernelInit::KmeansAll, true),
                (ConstituentId::Algo2, false) => RbfConfig::new(
                    10,
                    KernelInit::HalfFixedToClass(Histology::NormalColumnar),
                    false,
                ),
            }),
        }
    }

    /// Frozen 10-kernel RBF initialized on a class-balanced subsample.
    pub fn one_step() -> Self {
        Preset::Rbf(RbfConfig::new(10, KernelInit::KmeansOnTrimmed, false))
    }
}

/// Trains one model of the preset's family.
pub fn train_member(
    preset: &Preset,
    cfg: &TrainConfig,
    x: &FeatureMatrix,
    y: &[Label],
) -> std::result::Result<Model, ModelError> {
    Ok(match preset {
        Preset::Logistic(lc) => Model::Logistic(train_logistic_with(lc, x, y, &cfg.cost)?),
        Preset::Mlp {
            hidden,
            learning_rate,
        } => {
            let cfg = TrainConfig {
                learning_rate: *learning_rate,
                ..*cfg
            };
            Model::Mlp(train_mlp(&cfg, *hidden, x, y)?)
        }
        Preset::Rbf(rc) => Model::Rbf(train_rbf(cfg, rc, x, y)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstituentSpec {
    pub id: ConstituentId,
    pub preprocessing: Preprocessing,
    pub feature_set: FeatureSet,
    pub negative_class: Histology,
    pub preset: Preset,
}

impl ConstituentSpec {
    pub fn new(id: ConstituentId, feature_set: FeatureSet, family: ModelFamily) -> Self {
        Self {
            id,
            preprocessing: id.preprocessing(),
            feature_set,
            negative_class: id.negative_class(),
            preset: Preset::default_for(id, family, feature_set),
        }
    }

    pub fn algo1(feature_set: FeatureSet, family: ModelFamily) -> Self {
        Self::new(ConstituentId::Algo1, feature_set, family)
    }

    pub fn algo2(feature_set: FeatureSet, family: ModelFamily) -> Self {
        Self::new(ConstituentId::Algo2, feature_set, family)
    }

    pub fn validate(&self) -> Result<()> {
        if self.preprocessing != self.id.preprocessing()
            || self.negative_class != self.id.negative_class()
        {
            return Err(PipelineError::InvalidSpec(format!(
                "{} requires {} preprocessing against {}",
                self.id,
                self.id.preprocessing(),
                self.id.negative_class()
            )));
        }
        Ok(())
    }
}

/// Leading principal components screened by the t-test for `Pcs(k)`.
pub const PC_CANDIDATES: usize = 10;

/// Maps a preprocessed 160-column matrix onto a constituent's inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureTransform {
    Columns(Vec<WavelengthPair>),
    Pcs { model: PcaModel, indices: Vec<usize> },
}

impl FeatureTransform {
    /// Fitted on the rows used to train the constituent.
    pub fn fit(feature_set: FeatureSet, train: &FeatureMatrix) -> Result<Self> {
        Ok(match feature_set {
            FeatureSet::Full160 => FeatureTransform::Columns(
                train.column_labels().iter().filter_map(|l| l.pair()).collect(),
            ),
            FeatureSet::Reduced13Algo1 => FeatureTransform::Columns(ALGO1_PAIRS.to_vec()),
            FeatureSet::Reduced13Algo2 => FeatureTransform::Columns(ALGO2_PAIRS.to_vec()),
            FeatureSet::Pcs(k) => {
                let n = PC_CANDIDATES.min(train.rows().saturating_sub(1)).min(train.cols());
                let model = dimred::fit_pca(train, n)?;
                let n = model.n_components();
                if k > n {
                    return Err(PipelineError::InvalidSpec(format!(
                        "{k} components requested, {n} available"
                    )));
                }
                let scores = dimred::project(&model, train, n)?;
                let sel = dimred::select_components(&scores, &train.targets(), 0.05)?;
                FeatureTransform::Pcs {
                    model,
                    indices: sel.most_significant(k),
                }
            }
        })
    }

    pub fn apply(&self, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
        match self {
            FeatureTransform::Columns(pairs) => Ok(select_columns(fm, pairs)?),
            FeatureTransform::Pcs { model, indices } => {
                let last = indices.iter().max().map_or(0, |&i| i + 1);
                Ok(dimred::project(model, fm, last)?.select_column_indices(indices))
            }
        }
    }
}

fn preprocess_for(ds: &Dataset, mode: Preprocessing) -> Result<FeatureMatrix> {
    Ok(preprocess::preprocess(
        ds,
        mode,
        NormalizationPolicy::default(),
        MeanScalePolicy::default(),
    )?)
}

/// Training inputs of one constituent: its negative class against all SILs.
#[derive(Debug, Clone)]
pub struct PreparedConstituent {
    pub spec: ConstituentSpec,
    pub transform: FeatureTransform,
    pub features: FeatureMatrix,
    pub targets: Vec<Label>,
}

impl PreparedConstituent {
    pub fn new(spec: &ConstituentSpec, train: &Dataset) -> Result<Self> {
        spec.validate()?;
        let neg = spec.negative_class;
        let full = preprocess_for(train, spec.preprocessing)?
            .filter_rows(|h| h == neg || h.is_sil());
        let transform = FeatureTransform::fit(spec.feature_set, &full)?;
        let features = transform.apply(&full)?;
        let targets = features.targets();
        Ok(Self {
            spec: spec.clone(),
            transform,
            features,
            targets,
        })
    }

    /// All rows of `ds`, preprocessed and transformed like the training rows.
    pub fn inputs(&self, ds: &Dataset) -> Result<FeatureMatrix> {
        self.transform.apply(&preprocess_for(ds, self.spec.preprocessing)?)
    }

    pub fn train(&self, cfg: &TrainConfig) -> std::result::Result<Model, ModelError> {
        train_member(&self.spec.preset, cfg, &self.features, &self.targets)
    }
}

/// Pool size, repetitions and seeds shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pool_size: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Template for member training; seed and cost are set per member.
    pub train: TrainConfig,
    /// Leave inflammation out of the test set.
    pub exclude_inflammation: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pool_size: 20,
            repetitions: 10,
            base_seed: 0,
            train: TrainConfig::default(),
            exclude_inflammation: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pool_size == 0 || self.repetitions == 0 {
            return Err(PipelineError::InvalidRun(
                "pool size and repetitions must be at least 1".into(),
            ));
        }
        self.train.validate()?;
        Ok(())
    }

    /// Seed of member `m` in repetition `r`.
    pub fn member_seed(&self, r: usize, m: usize) -> u64 {
        self.base_seed
            .wrapping_add((r * self.pool_size) as u64)
            .wrapping_add(m as u64)
    }

    fn keep_test(&self, h: Histology) -> bool {
        !(self.exclude_inflammation && h == Histology::Inflammation)
    }
}

/// Cascade rule. `step2` only runs when `step1` says SIL.
pub fn two_step_classify(step1: impl FnOnce() -> Label, step2: impl FnOnce() -> Label) -> Label {
    match step1() {
        Label::NonSil => Label::NonSil,
        Label::Sil => step2(),
    }
}

/// Step 1 separates SILs from squamous normals; samples it calls SIL go to
/// step 2, which separates SILs from columnar normals.
#[derive(Debug, Clone)]
pub struct TwoStepClassifier<C1, C2> {
    pub step1: C1,
    pub step2: C2,
    pub cost1: CostPolicy,
    pub cost2: CostPolicy,
}

impl<C1: Classifier, C2: Classifier> TwoStepClassifier<C1, C2> {
    /// `x1` and `x2` are the same sample in each step's feature space.
    pub fn classify(&self, x1: &[f64], x2: &[f64]) -> Label {
        two_step_classify(
            || self.cost1.decide(sil_score(self.step1.scores(x1))),
            || self.cost2.decide(sil_score(self.step2.scores(x2))),
        )
    }

    pub fn classify_all(&self, x1: &FeatureMatrix, x2: &FeatureMatrix) -> Vec<Label> {
        x1.row_iter()
            .zip(x2.row_iter())
            .map(|(a, b)| self.classify(a, b))
            .collect()
    }
}

/// Member outputs of one pool on every test row: `outputs[member][row]`.
fn pool_outputs(pool: &ensemble::Ensemble, x: &FeatureMatrix) -> Vec<Vec<[f64; 2]>> {
    pool.members()
        .iter()
        .map(|m| x.row_iter().map(|r| m.scores(r)).collect())
        .collect()
}

fn combined_labels(
    outputs: &[Vec<[f64; 2]>],
    combiner: Option<Combiner>,
    cost: &CostPolicy,
) -> Result<Vec<Label>> {
    let rows = outputs[0].len();
    (0..rows)
        .map(|i| {
            let s = match combiner {
                None => outputs[0][i],
                Some(c) => {
                    let per_member: Vec<Vec<f64>> =
                        outputs.iter().map(|o| o[i].to_vec()).collect();
                    let v = c.combine(&per_member)?;
                    [v[0], v[1]]
                }
            };
            Ok(cost.decide(sil_score(s)))
        })
        .collect()
}

const VARIANTS: [(Option<Combiner>, &str); 3] = [
    (None, "single"),
    (Some(Combiner::Average), "ave"),
    (Some(Combiner::Median), "med"),
];

struct Tally {
    raw: [Vec<(f64, f64)>; 3],
    seeds: Vec<u64>,
}

impl Tally {
    fn new() -> Self {
        Self {
            raw: [Vec::new(), Vec::new(), Vec::new()],
            seeds: Vec::new(),
        }
    }

    fn reports(self, name: &str, cost: f64, pool_size: usize) -> Result<Vec<EvalReport>> {
        let Tally { raw, seeds } = self;
        raw.into_iter()
            .zip(VARIANTS)
            .map(|(raw, (c, tag))| {
                let n = if c.is_some() { pool_size } else { 1 };
                Ok(EvalReport::from_runs(name, tag, cost, n, seeds.clone(), raw)?)
            })
            .collect()
    }
}

/// Trains pools and scores a constituent on its own two test classes.
/// Returns single, ave and med reports.
pub fn run_constituent(
    spec: &ConstituentSpec,
    run: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    cost: CostPolicy,
) -> Result<Vec<EvalReport>> {
    run.validate()?;
    let prepared = PreparedConstituent::new(spec, train)?;
    let neg = spec.negative_class;
    let x = prepared.inputs(&test.filter(|h| h == neg || h.is_sil()))?;
    let truth = x.targets();
    let cfg = run.train.with_cost(cost);
    let mut tally = Tally::new();
    for r in 0..run.repetitions {
        let base = run.member_seed(r, 0);
        let pool = ensemble::build_ensemble(
            |s| prepared.train(&cfg.with_seed(s)),
            run.pool_size,
            base,
            Combiner::Average,
        )?;
        tally.seeds.extend_from_slice(pool.member_seeds());
        let outs = pool_outputs(&pool, &x);
        for (v, (c, _)) in VARIANTS.iter().enumerate() {
            let pred = combined_labels(&outs, *c, &cost)?;
            tally.raw[v].push(eval::evaluate(&pred, &truth)?);
        }
    }
    let name = format!("{} {}", spec.id, spec.preset.family());
    tally.reports(&name, cost.sil_cost(), run.pool_size)
}

/// Two-step cascade over the whole test set. Each step has its own pool;
/// step-2 seeds are offset by [`STEP2_SEED_OFFSET`].
pub fn run_two_step(
    spec1: &ConstituentSpec,
    spec2: &ConstituentSpec,
    run: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    cost1: CostPolicy,
    cost2: CostPolicy,
) -> Result<Vec<EvalReport>> {
    run.validate()?;
    if spec1.id != ConstituentId::Algo1 || spec2.id != ConstituentId::Algo2 {
        return Err(PipelineError::InvalidSpec(
            "the cascade runs algo1 then algo2".into(),
        ));
    }
    let p1 = PreparedConstituent::new(spec1, train)?;
    let p2 = PreparedConstituent::new(spec2, train)?;
    let test = test.filter(|h| run.keep_test(h));
    let x1 = p1.inputs(&test)?;
    let x2 = p2.inputs(&test)?;
    let truth = test.labels();
    let (cfg1, cfg2) = (run.train.with_cost(cost1), run.train.with_cost(cost2));
    let mut tally = Tally::new();
    for r in 0..run.repetitions {
        let base = run.member_seed(r, 0);
        let pool1 = ensemble::build_ensemble(
            |s| p1.train(&cfg1.with_seed(s)),
            run.pool_size,
            base,
            Combiner::Average,
        )?;
        let pool2 = ensemble::build_ensemble(
            |s| p2.train(&cfg2.with_seed(s)),
            run.pool_size,
            base.wrapping_add(STEP2_SEED_OFFSET),
            Combiner::Average,
        )?;
        tally.seeds.extend_from_slice(pool1.member_seeds());
        tally.seeds.extend_from_slice(pool2.member_seeds());
        let (o1, o2) = (pool_outputs(&pool1, &x1), pool_outputs(&pool2, &x2));
        for (v, (c, _)) in VARIANTS.iter().enumerate() {
            let l1 = combined_labels(&o1, *c, &cost1)?;
            let l2 = combined_labels(&o2, *c, &cost2)?;
            let pred: Vec<Label> = l1
                .iter()
                .zip(&l2)
                .map(|(&a, &b)| two_step_classify(|| a, || b))
                .collect();
            tally.raw[v].push(eval::evaluate(&pred, &truth)?);
        }
    }
    let name = format!("2-step {}", spec1.preset.family());
    tally.reports(&name, cost1.sil_cost(), run.pool_size)
}

/// The 13 algorithm-(1) pairs after normalization followed by the 13
/// algorithm-(2) pairs after normalization and mean-scaling.
pub fn build_one_step_features(ds: &Dataset) -> Result<FeatureMatrix> {
    let norm = preprocess::normalize(ds)?;
    let nms = preprocess::mean_scale(&norm)?;
    let a = select_columns(&norm, &ALGO1_PAIRS)?;
    let b = select_columns(&nms, &ALGO2_PAIRS)?;
    Ok(a.hconcat(&b)?)
}

/// Random subsample in which every tissue group present has as many rows as
/// the smallest group. Only used to place kernels.
pub fn trim_training_set(fm: &FeatureMatrix, seed: u64) -> Result<FeatureMatrix> {
    let groups: Vec<TissueGroup> = fm.histologies().iter().map(|h| h.group()).collect();
    if groups.is_empty() {
        return Err(PipelineError::EmptyClass(TissueGroup::Sil));
    }
    Ok(fm.select_rows(&balanced_indices(&groups, seed)))
}

/// One-step training rows: normal squamous, normal columnar and SIL.
pub fn one_step_training_rows(fm: &FeatureMatrix) -> FeatureMatrix {
    fm.filter_rows(|h| h != Histology::Inflammation)
}

/// Pools of frozen-kernel RBFs on the 26 concatenated features.
/// Returns single, ave and med reports.
pub fn run_one_step(
    run: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    cost: CostPolicy,
) -> Result<Vec<EvalReport>> {
    let (x, y, xt, truth) = one_step_data(run, train, test)?;
    one_step_reports(run, &x, &y, &xt, &truth, cost)
}

type OneStepData = (FeatureMatrix, Vec<Label>, FeatureMatrix, Vec<Label>);

fn one_step_data(run: &RunConfig, train: &Dataset, test: &Dataset) -> Result<OneStepData> {
    run.validate()?;
    let x = one_step_training_rows(&build_one_step_features(train)?);
    let y = x.targets();
    let xt = build_one_step_features(test)?.filter_rows(|h| run.keep_test(h));
    let truth = xt.targets();
    Ok((x, y, xt, truth))
}

fn one_step_reports(
    run: &RunConfig,
    x: &FeatureMatrix,
    y: &[Label],
    xt: &FeatureMatrix,
    truth: &[Label],
    cost: CostPolicy,
) -> Result<Vec<EvalReport>> {
    let preset = Preset::one_step();
    let cfg = run.train.with_cost(cost);
    let mut tally = Tally::new();
    for r in 0..run.repetitions {
        let pool = ensemble::build_ensemble(
            |s| train_member(&preset, &cfg.with_seed(s), x, y),
            run.pool_size,
            run.member_seed(r, 0),
            Combiner::Average,
        )?;
        tally.seeds.extend_from_slice(pool.member_seeds());
        let outs = pool_outputs(&pool, xt);
        for (v, (c, _)) in VARIANTS.iter().enumerate() {
            let pred = combined_labels(&outs, *c, &cost)?;
            tally.raw[v].push(eval::evaluate(&pred, truth)?);
        }
    }
    tally.reports("1-step RBF", cost.sil_cost(), run.pool_size)
}

/// One-step results at each SIL cost, ave and med rows, sorted by cost.
/// Every cost reuses the same member seeds.
pub fn cost_sweep(
    run: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    costs: &[f64],
    decision_threshold: f64,
) -> Result<Vec<EvalReport>> {
    if costs.is_empty() {
        return Err(PipelineError::EmptyCosts);
    }
    let mut sorted = costs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let policies = sorted
        .iter()
        .map(|&c| CostPolicy::new(c, 1.0, decision_threshold))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let (x, y, xt, truth) = one_step_data(run, train, test)?;
    let mut out = Vec::new();
    for cost in policies {
        let reports = one_step_reports(run, &x, &y, &xt, &truth, cost)?;
        out.extend(reports.into_iter().filter(|r| r.combiner != "single"));
    }
    Ok(out)
}

/// Default SIL cost of each scheme: 2 for algorithm (1), 1 for algorithm
/// (2), 2.5 for the one-step classifier.
pub fn default_cost(scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Constituent1 | Scheme::TwoStep => 2.0,
        Scheme::Constituent2 => 1.0,
        Scheme::OneStep => 2.5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    Constituent1,
    Constituent2,
    TwoStep,
    OneStep,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Constituent1 => "constituent1",
            Scheme::Constituent2 => "constituent2",
            Scheme::TwoStep => "two-step",
            Scheme::OneStep => "one-step",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constituent1" => Ok(Scheme::Constituent1),
            "constituent2" => Ok(Scheme::Constituent2),
            "two-step" => Ok(Scheme::TwoStep),
            "one-step" => Ok(Scheme::OneStep),
            _ => Err(format!("unknown pipeline `{s}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn cascade_short_circuits() {
        let calls = Cell::new(0);
        let step2 = |l| {
            calls.set(calls.get() + 1);
            l
        };
        assert_eq!(two_step_classify(|| Label::NonSil, || step2(Label::Sil)), Label::NonSil);
        assert_eq!(calls.get(), 0);
        assert_eq!(two_step_classify(|| Label::Sil, || step2(Label::NonSil)), Label::NonSil);
        assert_eq!(two_step_classify(|| Label::Sil, || step2(Label::Sil)), Label::Sil);
        assert_eq!(calls.get(), 2);
    }

    #[test]
    fn feature_set_names() {
        for f in [
            FeatureSet::Full160,
            FeatureSet::Pcs(3),
            FeatureSet::Reduced13Algo1,
            FeatureSet::Reduced13Algo2,
        ] {
            assert_eq!(f.to_string().parse::<FeatureSet>().unwrap(), f);
        }
        assert!("pcs0".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn spec_invariants() {
        let mut s = ConstituentSpec::algo2(FeatureSet::Reduced13Algo2, ModelFamily::Rbf);
        assert!(s.validate().is_ok());
        assert_eq!(
            s.preset,
            Preset::Rbf(RbfConfig::new(
                10,
                KernelInit::HalfFixedToClass(Histology::NormalColumnar),
                false
            ))
        );
        s.negative_class = Histology::NormalSquamous;
        assert!(s.validate().is_err());
    }

    #[test]
    fn member_seeds_are_disjoint() {
        let run = RunConfig::default();
        let mut all: Vec<u64> = (0..run.repetitions)
            .flat_map(|r| (0..run.pool_size).map(move |m| (r, m)))
            .map(|(r, m)| run.member_seed(r, m))
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 200);
    }
}
