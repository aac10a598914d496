//! Pre-cancer detection from fluorescence spectra with neural network
//! ensembles.
//!
//! The crate covers the whole chain: spectra and a synthetic generator
//! ([`spectra`]), normalization and mean-scaling ([`preprocess`]), PCA and
//! wavelength reduction ([`dimred`]), logistic/MLP/RBF classifiers
//! ([`models`]), average and median pools ([`ensemble`]), the constituent,
//! two-step and one-step schemes ([`pipeline`]), metrics ([`eval`]) and a
//! config-driven command line ([`cli`]).
//!
//! ```
//! use silscreen::models::CostPolicy;
//! use silscreen::pipeline::{run_one_step, RunConfig};
//! use silscreen::spectra::canonical_datasets;
//!
//! let (train, test) = canonical_datasets(42).unwrap();
//! let run = RunConfig { pool_size: 3, repetitions: 1, ..RunConfig::default() };
//! let reports = run_one_step(&run, &train, &test, CostPolicy::sil_weighted(2.5).unwrap()).unwrap();
//! assert_eq!(reports.len(), 3); // single, ave, med
//! ```

pub mod cli;
pub mod dimred;
pub mod ensemble;
pub mod eval;
pub mod kv;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod spectra;

use thiserror::Error;

/// Any failure, prefixed with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("spectra: {0}")]
    Spectra(#[from] spectra::SpectraError),
    #[error("preprocess: {0}")]
    Preprocess(#[from] preprocess::PreprocessError),
    #[error("dimred: {0}")]
    Dimred(#[from] dimred::DimredError),
    #[error("models: {0}")]
    Models(#[from] models::ModelError),
    #[error("ensemble: {0}")]
    Ensemble(#[from] ensemble::EnsembleError),
    #[error("pipeline: {0}")]
    Pipeline(pipeline::PipelineError),
    #[error("eval: {0}")]
    Eval(#[from] eval::EvalError),
    #[error("config: {0}")]
    Config(#[from] kv::KvError),
    #[error("cli: {0}")]
    Cli(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<pipeline::PipelineError> for Error {
    fn from(e: pipeline::PipelineError) -> Self {
        use pipeline::PipelineError as P;
        match e {
            P::Preprocess(e) => e.into(),
            P::Dimred(e) => e.into(),
            P::Model(e) => e.into(),
            P::Ensemble(e) => e.into(),
            P::Eval(e) => e.into(),
            other => Error::Pipeline(other),
        }
    }
}

impl Error {
    /// 2 for numerical failures (training divergence), 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        let model = match self {
            Error::Models(e) => e,
            Error::Ensemble(ensemble::EnsembleError::Member { source, .. }) => source,
            _ => return 1,
        };
        if matches!(model, models::ModelError::Diverged { .. }) {
            2
        } else {
            1
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
