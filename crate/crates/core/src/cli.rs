//! Command-line front end.
//!
//! Experiments are described by a flat `key = value` config file. Every key
//! can be overridden with `--set key=value`; the common ones also have
//! dedicated flags. Each command writes its outputs together with a
//! `manifest.txt` that, passed back as `--config`, reproduces them exactly.
//!
//! Exit codes: 0 success, 1 invalid input or config, 2 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dimred::{self, ReductionCriterion};
use crate::ensemble::Combiner;
use crate::eval::{self, EvalReport, Variability};
use crate::kv::{KeyValues, KvError};
use crate::models::{CostPolicy, ModelFamily, TrainConfig};
use crate::pipeline::{
    self, default_cost, ConstituentSpec, FeatureSet, RunConfig, Scheme, MLP_LEARNING_RATE,
    PC_CANDIDATES,
};
use crate::preprocess::{self, MeanScalePolicy, NormalizationPolicy, Preprocessing};
use crate::spectra::{
    self, format_tally, Dataset, Histology, SplitTag, SynthConfig, WavelengthGrid, CANONICAL_SEED,
};
use crate::{Error, Result};

/// Output root used when neither `--out` nor the environment variable is set.
pub const DEFAULT_OUT: &str = "silscreen-out";
pub const OUT_ENV: &str = "SILSCREEN_OUT";

#[derive(Debug, Parser)]
#[command(name = "silscreen", version, about = "Pre-cancer detection from fluorescence spectra")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic train and test datasets.
    Generate(ExperimentArgs),
    /// Normalize (and mean-scale) a dataset into a feature matrix.
    Preprocess(PreprocessArgs),
    /// PCA, t-test and loading-based selection of wavelength pairs.
    ReduceWavelengths(ReduceArgs),
    /// Train and evaluate one scheme.
    Run {
        /// constituent1, constituent2, two-step or one-step.
        #[arg(value_parser = parse_scheme)]
        scheme: Scheme,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// One-step results across misclassification costs.
    Sweep {
        /// Comma-separated SIL costs.
        #[arg(long)]
        costs: Option<String>,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Print the table of a finished run or sweep.
    Report {
        /// Directory holding report.csv and manifest.txt.
        dir: PathBuf,
    },
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse()
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// ave or med; both are reported when omitted.
    #[arg(long)]
    pub combiner: Option<String>,
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// logistic, mlp or rbf.
    #[arg(long)]
    pub family: Option<String>,
    /// SIL misclassification cost.
    #[arg(long)]
    pub cost: Option<f64>,
    /// Training dataset CSV; synthetic data is used when omitted.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// raw, norm or nms.
    #[arg(long, default_value = "norm")]
    pub mode: String,
    #[arg(long, default_value = "per_excitation_peak")]
    pub normalization: String,
    #[arg(long, default_value = "per_patient")]
    pub mean_scaling: String,
    /// Output file; defaults to `<out>/features.csv`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// norm or nms.
    #[arg(long, default_value = "norm")]
    pub mode: String,
    /// Normal class contrasted with SIL: NS or NC.
    #[arg(long, default_value = "NS")]
    pub negative: String,
    /// Significance level of the component t-test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Keep this many pairs.
    #[arg(long, conflicts_with = "threshold")]
    pub top_k: Option<usize>,
    /// Keep pairs whose |loading| reaches this value.
    #[arg(long)]
    pub threshold: Option<f64>,
}

/// Effective settings of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Seed of the synthetic training set; the test set uses `seed + 1`.
    pub seed: u64,
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    /// `synth.*` keys with the prefix removed.
    pub synth: KeyValues,
    pub family: ModelFamily,
    pub features1: FeatureSet,
    pub features2: FeatureSet,
    pub combiner: Option<Combiner>,
    pub cost: Option<f64>,
    pub costs: Vec<f64>,
    /// Normal-columnar cost of algorithm (2).
    pub algo2_normal_cost: f64,
    pub threshold: f64,
    pub pool_size: usize,
    pub repetitions: usize,
    pub member_seed: u64,
    pub learning_rate: f64,
    pub mlp_learning_rate: f64,
    pub max_epochs: usize,
    pub stop_patience: usize,
    pub min_rel_improvement: f64,
    pub exclude_inflammation: bool,
}

const KEYS: &[&str] = &[
    "seed",
    "train_csv",
    "test_csv",
    "family",
    "features1",
    "features2",
    "combiner",
    "cost",
    "costs",
    "algo2.normal_cost",
    "threshold",
    "pool_size",
    "repetitions",
    "member_seed",
    "learning_rate",
    "mlp.learning_rate",
    "max_epochs",
    "stop_patience",
    "min_rel_improvement",
    "exclude_inflammation",
];

/// Synthetic-generator keys settable under `synth.`.
const SYNTH_KEYS: &[&str] = &["patients", "patient_scale", "site_scale"];

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let synth = SynthConfig::canonical_train(CANONICAL_SEED);
        let mut kv = KeyValues::new();
        kv.set("patient_scale", synth.patient_scale);
        kv.set("site_scale", synth.site_scale);
        Self {
            seed: CANONICAL_SEED,
            train_csv: None,
            test_csv: None,
            synth: kv,
            family: ModelFamily::Rbf,
            features1: FeatureSet::Reduced13Algo1,
            features2: FeatureSet::Reduced13Algo2,
            combiner: None,
            cost: None,
            costs: vec![1.0, 2.0, 2.5, 3.0, 4.0, 5.0],
            algo2_normal_cost: 1.0,
            threshold: 0.5,
            pool_size: 20,
            repetitions: 10,
            member_seed: 0,
            learning_rate: train.learning_rate,
            mlp_learning_rate: MLP_LEARNING_RATE,
            max_epochs: train.max_epochs,
            stop_patience: train.stop_patience,
            min_rel_improvement: train.min_rel_improvement,
            exclude_inflammation: false,
        }
    }
}

fn bad(key: &str, value: &str) -> KvError {
    KvError::BadValue {
        key: key.into(),
        value: value.into(),
    }
}

fn parse_with<T>(kv: &KeyValues, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
    match kv.get(key) {
        None => Ok(None),
        Some(v) => f(v).map(Some).ok_or_else(|| bad(key, v).into()),
    }
}

impl ExperimentConfig {
    /// Defaults overridden by `kv`. Unknown keys are rejected.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let mut c = Self::default();
        for key in kv.keys() {
            let known = match key.strip_prefix("synth.") {
                Some(s) => SYNTH_KEYS.contains(&s),
                None => KEYS.contains(&key),
            };
            if !known {
                return Err(KvError::UnknownKey(key.into()).into());
            }
        }
        macro_rules! set {
            ($field:ident, $key:expr) => {
                if let Some(v) = kv.parse($key)? {
                    c.$field = v;
                }
            };
        }
        set!(seed, "seed");
        set!(algo2_normal_cost, "algo2.normal_cost");
        set!(threshold, "threshold");
        set!(pool_size, "pool_size");
        set!(repetitions, "repetitions");
        set!(member_seed, "member_seed");
        set!(learning_rate, "learning_rate");
        set!(mlp_learning_rate, "mlp.learning_rate");
        set!(max_epochs, "max_epochs");
        set!(stop_patience, "stop_patience");
        set!(min_rel_improvement, "min_rel_improvement");
        set!(exclude_inflammation, "exclude_inflammation");
        c.train_csv = kv.get("train_csv").map(PathBuf::from);
        c.test_csv = kv.get("test_csv").map(PathBuf::from);
        if let Some(v) = parse_with(kv, "family", |s| s.parse().ok())? {
            c.family = v;
        }
        if let Some(v) = parse_with(kv, "features1", |s| s.parse().ok())? {
            c.features1 = v;
        }
        if let Some(v) = parse_with(kv, "features2", |s| s.parse().ok())? {
            c.features2 = v;
        }
        c.combiner = parse_with(kv, "combiner", |s| s.parse().ok())?;
        c.cost = kv.parse("cost")?;
        if let Some(v) = kv.parse_list("costs")? {
            c.costs = v;
        }
        for (k, v) in kv.iter() {
            if let Some(s) = k.strip_prefix("synth.") {
                c.synth.set(s, v);
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pool_size == 0 || self.repetitions == 0 {
            return Err(Error::Cli("pool_size and repetitions must be at least 1".into()));
        }
        if self.train_csv.is_some() != self.test_csv.is_some() {
            return Err(Error::Cli("train_csv and test_csv go together".into()));
        }
        if self.costs.is_empty() || self.costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Cli("costs must be a non-empty list of positive numbers".into()));
        }
        for file in [&self.train_csv, &self.test_csv].into_iter().flatten() {
            if !file.is_file() {
                return Err(Error::Cli(format!("dataset `{}` not found", file.display())));
            }
        }
        Ok(())
    }

    /// Every setting as config lines; loading them back gives `self`.
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("seed", self.seed);
        if let (Some(a), Some(b)) = (&self.train_csv, &self.test_csv) {
            kv.set("train_csv", a.display());
            kv.set("test_csv", b.display());
        }
        for (k, v) in self.synth.iter() {
            kv.set(format!("synth.{k}"), v);
        }
        kv.set("family", self.family);
        kv.set("features1", self.features1);
        kv.set("features2", self.features2);
        if let Some(c) = self.combiner {
            kv.set("combiner", c);
        }
        if let Some(c) = self.cost {
            kv.set("cost", c);
        }
        let costs: Vec<String> = self.costs.iter().map(f64::to_string).collect();
        kv.set("costs", costs.join(","));
        kv.set("algo2.normal_cost", self.algo2_normal_cost);
        kv.set("threshold", self.threshold);
        kv.set("pool_size", self.pool_size);
        kv.set("repetitions", self.repetitions);
        kv.set("member_seed", self.member_seed);
        kv.set("learning_rate", self.learning_rate);
        kv.set("mlp.learning_rate", self.mlp_learning_rate);
        kv.set("max_epochs", self.max_epochs);
        kv.set("stop_patience", self.stop_patience);
        kv.set("min_rel_improvement", self.min_rel_improvement);
        kv.set("exclude_inflammation", self.exclude_inflammation);
        kv
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let run = RunConfig {
            pool_size: self.pool_size,
            repetitions: self.repetitions,
            base_seed: self.member_seed,
            train: TrainConfig {
                learning_rate: self.learning_rate,
                max_epochs: self.max_epochs,
                stop_patience: self.stop_patience,
                min_rel_improvement: self.min_rel_improvement,
                ..TrainConfig::default()
            },
            exclude_inflammation: self.exclude_inflammation,
        };
        run.validate()?;
        Ok(run)
    }

    fn synth_configs(&self) -> Result<(SynthConfig, SynthConfig)> {
        let train = SynthConfig::from_kv(SynthConfig::canonical_train(self.seed), &self.synth)?;
        let test = SynthConfig::from_kv(
            SynthConfig::canonical_test(self.seed.wrapping_add(1)),
            &self.synth,
        )?;
        Ok((train, test))
    }

    /// Train and test sets from the CSV files, or synthetic ones.
    pub fn datasets(&self) -> Result<(Dataset, Dataset)> {
        let grid = WavelengthGrid::default();
        if let (Some(a), Some(b)) = (&self.train_csv, &self.test_csv) {
            let train = spectra::load_dataset(a, &grid)?.with_split(SplitTag::Train);
            let test = spectra::load_dataset(b, &grid)?.with_split(SplitTag::Test);
            return Ok((train, test));
        }
        let (a, b) = self.synth_configs()?;
        Ok((
            spectra::synthesize_dataset(&a)?.with_split(SplitTag::Train),
            spectra::synthesize_dataset(&b)?.with_split(SplitTag::Test),
        ))
    }

    fn constituent(&self, scheme: Scheme) -> ConstituentSpec {
        let mut spec = match scheme {
            Scheme::Constituent2 => ConstituentSpec::algo2(self.features2, self.family),
            _ => ConstituentSpec::algo1(self.features1, self.family),
        };
        if let pipeline::Preset::Mlp { learning_rate, .. } = &mut spec.preset {
            *learning_rate = self.mlp_learning_rate;
        }
        spec
    }
}

fn load_config(args: &ExperimentArgs) -> Result<KeyValues> {
    let mut kv = match &args.config {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::new(),
    };
    let mut flags = KeyValues::new();
    if let Some(v) = args.seed {
        flags.set("seed", v);
    }
    if let Some(v) = &args.combiner {
        flags.set("combiner", v);
    }
    if let Some(v) = args.pool_size {
        flags.set("pool_size", v);
    }
    if let Some(v) = args.repetitions {
        flags.set("repetitions", v);
    }
    if let Some(v) = &args.family {
        flags.set("family", v);
    }
    if let Some(v) = args.cost {
        flags.set("cost", v);
    }
    if let Some(v) = &args.train {
        flags.set("train_csv", v.display());
    }
    if let Some(v) = &args.test {
        flags.set("test_csv", v.display());
    }
    for s in &args.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Cli(format!("--set expects KEY=VALUE, got `{s}`")))?;
        flags.set(k.trim(), v.trim());
    }
    kv.merge(&flags);
    Ok(kv)
}

fn out_dir(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn manifest(header: &str, cfg: &ExperimentConfig, notes: &[String]) -> String {
    let mut text = format!("# silscreen {header}\n");
    for n in notes {
        text.push_str(&format!("# {n}\n"));
    }
    text.push_str(&cfg.to_kv().render());
    text
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn cmd_generate(exp: &ExperimentArgs, dir: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_kv(&load_config(exp)?)?;
    let (a, b) = cfg.synth_configs()?;
    let train = spectra::synthesize_dataset(&a)?;
    let test = spectra::synthesize_dataset(&b)?;
    fs::create_dir_all(dir)?;
    spectra::save_dataset(&train, dir.join("train.csv"))?;
    spectra::save_dataset(&test, dir.join("test.csv"))?;
    let notes = vec![
        format!("train seed {}: {}", a.seed, format_tally(&train.class_tally())),
        format!("test seed {}: {}", b.seed, format_tally(&test.class_tally())),
    ];
    write(dir, "manifest.txt", &manifest("generate", &cfg, &notes))?;
    println!("wrote {} and {}", dir.join("train.csv").display(), dir.join("test.csv").display());
    Ok(())
}

fn cmd_preprocess(args: &PreprocessArgs, dir: &Path) -> Result<()> {
    let mode: Preprocessing = args.mode.parse().map_err(Error::Cli)?;
    let norm: NormalizationPolicy = args.normalization.parse().map_err(Error::Cli)?;
    let ms: MeanScalePolicy = args.mean_scaling.parse().map_err(Error::Cli)?;
    let ds = spectra::load_dataset(&args.input, &WavelengthGrid::default())?;
    let fm = preprocess::preprocess(&ds, mode, norm, ms)?;
    let path = match &args.output {
        Some(p) => p.clone(),
        None => {
            fs::create_dir_all(dir)?;
            dir.join("features.csv")
        }
    };
    preprocess::write_feature_matrix(&fm, fs::File::create(&path)?)?;
    println!("wrote {} ({} x {})", path.display(), fm.rows(), fm.cols());
    Ok(())
}

fn cmd_reduce(args: &ReduceArgs, dir: &Path) -> Result<()> {
    let mode: Preprocessing = args.mode.parse().map_err(Error::Cli)?;
    let neg = Histology::from_token(&args.negative)
        .ok_or_else(|| Error::Cli(format!("unknown histology `{}`", args.negative)))?;
    let ds = spectra::load_dataset(&args.input, &WavelengthGrid::default())?;
    let fm = preprocess::preprocess(&ds, mode, Default::default(), Default::default())?
        .filter_rows(|h| h == neg || h.is_sil());
    let n = PC_CANDIDATES.min(fm.rows().saturating_sub(1)).min(fm.cols());
    let model = dimred::fit_pca(&fm, n)?;
    let scores = dimred::project(&model, &fm, model.n_components())?;
    let selection = dimred::select_components(&scores, &fm.targets(), args.alpha)?;
    let loadings = dimred::component_loadings(&model, &fm, &selection)?;
    let criterion = match (args.top_k, args.threshold) {
        (_, Some(t)) => ReductionCriterion::Threshold(t),
        (k, None) => ReductionCriterion::TopK(k.unwrap_or(13)),
    };
    let pairs = dimred::reduce_wavelengths(&loadings, criterion)?;
    fs::create_dir_all(dir)?;
    dimred::write_pca_model(&model, fs::File::create(dir.join("pca_model.txt"))?)?;
    dimred::write_loadings(&loadings, fs::File::create(dir.join("loadings.csv"))?)?;
    let text: String = pairs.iter().map(|p| format!("{}\n", p.column_name())).collect();
    write(dir, "pairs.txt", &text)?;
    let comps: Vec<String> = selection.indices.iter().map(|i| format!("PC{}", i + 1)).collect();
    println!(
        "components {}; {} pairs written to {}",
        comps.join(" "),
        pairs.len(),
        dir.join("pairs.txt").display()
    );
    Ok(())
}

fn keep(cfg: &ExperimentConfig, r: &EvalReport) -> bool {
    match cfg.combiner {
        None => true,
        Some(c) => r.combiner == "single" || r.combiner == c.tag(),
    }
}

fn runs_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("combiner,cost,repetition,sensitivity,specificity\n");
    for r in reports {
        for (i, (se, sp)) in r.raw.iter().enumerate() {
            out.push_str(&format!("{},{},{},{:.1},{:.1}\n", r.combiner, r.cost, i + 1, se, sp));
        }
    }
    out
}

fn seed_notes(cfg: &ExperimentConfig, two_pools: bool) -> Vec<String> {
    let n = (cfg.pool_size * cfg.repetitions) as u64;
    let mut notes = vec![format!(
        "member seeds {}..={}",
        cfg.member_seed,
        cfg.member_seed.wrapping_add(n - 1)
    )];
    if two_pools {
        let b = cfg.member_seed.wrapping_add(pipeline::STEP2_SEED_OFFSET);
        notes.push(format!("step-2 member seeds {}..={}", b, b.wrapping_add(n - 1)));
    }
    if cfg.train_csv.is_none() {
        notes.push(format!(
            "synthetic data: train seed {}, test seed {}",
            cfg.seed,
            cfg.seed.wrapping_add(1)
        ));
    }
    notes
}

fn write_reports(
    dir: &Path,
    cfg: &ExperimentConfig,
    header: &str,
    notes: &[String],
    reports: &[EvalReport],
) -> Result<String> {
    let manifest = manifest(header, cfg, notes);
    fs::create_dir_all(dir)?;
    let table = eval::report_table(reports);
    write(dir, "report.csv", &eval::report_csv(reports))?;
    write(dir, "runs.csv", &runs_csv(reports))?;
    write(dir, "report.txt", &format!("{table}\n{manifest}"))?;
    write(dir, "manifest.txt", &manifest)?;
    Ok(table)
}

fn cmd_run(scheme: Scheme, exp: &ExperimentArgs, dir: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_kv(&load_config(exp)?)?;
    let run = cfg.run_config()?;
    let (train, test) = cfg.datasets()?;
    let cost = cfg.cost.unwrap_or_else(|| default_cost(scheme));
    let policy = CostPolicy::new(cost, 1.0, cfg.threshold)?;
    let algo2 = CostPolicy::new(
        if scheme == Scheme::Constituent2 { cost } else { default_cost(Scheme::Constituent2) },
        cfg.algo2_normal_cost,
        cfg.threshold,
    )?;
    let reports = match scheme {
        Scheme::Constituent1 => {
            pipeline::run_constituent(&cfg.constituent(scheme), &run, &train, &test, policy)?
        }
        Scheme::Constituent2 => {
            pipeline::run_constituent(&cfg.constituent(scheme), &run, &train, &test, algo2)?
        }
        Scheme::TwoStep => pipeline::run_two_step(
            &cfg.constituent(Scheme::Constituent1),
            &cfg.constituent(Scheme::Constituent2),
            &run,
            &train,
            &test,
            policy,
            algo2,
        )?,
        Scheme::OneStep => pipeline::run_one_step(&run, &train, &test, policy)?,
    };
    let reports: Vec<EvalReport> = reports.into_iter().filter(|r| keep(&cfg, r)).collect();
    let notes = seed_notes(&cfg, scheme == Scheme::TwoStep);
    let table = write_reports(dir, &cfg, &format!("run {scheme}"), &notes, &reports)?;
    print!("{table}");
    Ok(())
}

fn cmd_sweep(costs: &Option<String>, exp: &ExperimentArgs, dir: &Path) -> Result<()> {
    let mut kv = load_config(exp)?;
    if let Some(c) = costs {
        kv.set("costs", c);
    }
    let cfg = ExperimentConfig::from_kv(&kv)?;
    let run = cfg.run_config()?;
    let (train, test) = cfg.datasets()?;
    let reports: Vec<EvalReport> =
        pipeline::cost_sweep(&run, &train, &test, &cfg.costs, cfg.threshold)?
            .into_iter()
            .filter(|r| keep(&cfg, r))
            .collect();
    fs::create_dir_all(dir)?;
    for c in [Combiner::Average, Combiner::Median] {
        let rows: Vec<EvalReport> =
            reports.iter().filter(|r| r.combiner == c.tag()).cloned().collect();
        if !rows.is_empty() {
            write(dir, &format!("tradeoff_{c}.csv"), &eval::tradeoff_csv(&rows))?;
        }
    }
    let table = write_reports(dir, &cfg, "sweep", &seed_notes(&cfg, false), &reports)?;
    print!("{table}");
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<()> {
    let text = fs::read_to_string(dir.join("report.csv"))?;
    let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap_or_default();
    let name = manifest
        .lines()
        .next()
        .map(|l| l.trim_start_matches("# silscreen ").to_string())
        .unwrap_or_default();
    let pool: usize = KeyValues::parse_str(&manifest)?.parse("pool_size")?.unwrap_or(0);
    let mut reports = Vec::new();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Cli(format!("report.csv: {e}")))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Cli(format!("report.csv: bad field {i} in {rec:?}")))
        };
        let combiner = rec.get(0).unwrap_or_default().to_string();
        reports.push(EvalReport {
            name: name.clone(),
            pool_size: if combiner == "single" { 1 } else { pool },
            combiner,
            cost: num(1)?,
            seeds: Vec::new(),
            sensitivity: Variability {
                mean: num(2)?,
                std: num(4)?,
            },
            specificity: Variability {
                mean: num(3)?,
                std: num(5)?,
            },
            raw: Vec::new(),
        });
    }
    print!("{}", eval::report_table(&reports));
    Ok(())
}

/// Parses `args` and runs the command.
pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Report { dir } => cmd_report(dir),
        command => {
            let dir = out_dir(&cli.out);
            match command {
                Command::Generate(exp) => cmd_generate(exp, &dir),
                Command::Preprocess(a) => cmd_preprocess(a, &dir),
                Command::ReduceWavelengths(a) => cmd_reduce(a, &dir),
                Command::Run { scheme, exp } => cmd_run(*scheme, exp, &dir),
                Command::Sweep { costs, exp } => cmd_sweep(costs, exp, &dir),
                Command::Report { .. } => unreachable!(),
            }
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
