//! Fluorescence sample model, CSV ingestion and the synthetic generator that
//! stands in for clinical measurements.
//!
//! A sample carries intensities at every excitation-emission pair of a
//! [`WavelengthGrid`]. Three excitations are measured by default (337, 380
//! and 460 nm) with 59, 56 and 45 emission wavelengths on a 5 nm raster,
//! giving 160 pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kv::{KeyValues, KvError};

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("invalid wavelength grid: {0}")]
    InvalidGrid(String),
    #[error("missing column `{column}`")]
    MissingColumn { column: String },
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column `{column}`: intensity {value} must be finite and non-negative")]
    InvalidIntensity {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("row {row}: unknown histology label `{token}`")]
    UnknownHistology { row: usize, token: String },
    #[error("{location}: expected {expected} intensity values, found {found}")]
    LengthMismatch {
        location: String,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: empty patient id")]
    EmptyPatientId { row: usize },
    #[error("duplicate site `{site_id}` for patient `{patient_id}`")]
    DuplicateSite { patient_id: String, site_id: String },
    #[error("infeasible synthetic class ordering: {0}")]
    InfeasibleOrdering(String),
    #[error("invalid synthetic config: {0}")]
    InvalidSynthConfig(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error(transparent)]
    Config(#[from] KvError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, SpectraError>;

/// An (excitation, emission) coordinate in nanometres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WavelengthPair {
    pub excitation: u32,
    pub emission: u32,
}

impl WavelengthPair {
    pub const fn new(excitation: u32, emission: u32) -> Self {
        Self {
            excitation,
            emission,
        }
    }

    /// Column name used in dataset files, e.g. `I_337_410`.
    pub fn column_name(&self) -> String {
        format!("I_{}_{}", self.excitation, self.emission)
    }

    pub fn parse_column_name(name: &str) -> Option<Self> {
        let rest = name.strip_prefix("I_")?;
        let (ex, em) = rest.split_once('_')?;
        Some(Self::new(ex.parse().ok()?, em.parse().ok()?))
    }
}

impl fmt::Display for WavelengthPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.excitation, self.emission)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    excitations: Vec<u32>,
    emissions: Vec<Vec<u32>>,
}

impl WavelengthGrid {
    pub fn new(excitations: Vec<u32>, emissions: Vec<Vec<u32>>) -> Result<Self> {
        if excitations.is_empty() {
            return Err(SpectraError::InvalidGrid("no excitations".into()));
        }
        if excitations.len() != emissions.len() {
            return Err(SpectraError::InvalidGrid(format!(
                "{} excitations but {} emission lists",
                excitations.len(),
                emissions.len()
            )));
        }
        if excitations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpectraError::InvalidGrid(
                "excitations must be strictly increasing".into(),
            ));
        }
        for (ex, list) in excitations.iter().zip(&emissions) {
            if list.is_empty() {
                return Err(SpectraError::InvalidGrid(format!(
                    "excitation {ex} nm has no emission wavelengths"
                )));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SpectraError::InvalidGrid(format!(
                    "emission wavelengths at {ex} nm must be strictly increasing"
                )));
            }
        }
        Ok(Self {
            excitations,
            emissions,
        })
    }

    /// Emission raster of `count` wavelengths starting at `start` with 5 nm spacing.
    pub fn raster(start: u32, count: usize) -> Vec<u32> {
        (0..count as u32).map(|i| start + 5 * i).collect()
    }

    pub fn excitations(&self) -> &[u32] {
        &self.excitations
    }

    pub fn emissions(&self, block: usize) -> &[u32] {
        &self.emissions[block]
    }

    pub fn block_count(&self) -> usize {
        self.excitations.len()
    }

    pub fn pair_count(&self) -> usize {
        self.emissions.iter().map(Vec::len).sum()
    }

    /// Column ranges of each excitation block inside an intensity vector.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.emissions
            .iter()
            .map(|list| {
                let r = start..start + list.len();
                start = r.end;
                r
            })
            .collect()
    }

    pub fn pairs(&self) -> Vec<WavelengthPair> {
        self.excitations
            .iter()
            .zip(&self.emissions)
            .flat_map(|(&ex, list)| list.iter().map(move |&em| WavelengthPair::new(ex, em)))
            .collect()
    }

    pub fn index_of(&self, pair: WavelengthPair) -> Option<usize> {
        let block = self.excitations.iter().position(|&e| e == pair.excitation)?;
        let offset: usize = self.emissions[..block].iter().map(Vec::len).sum();
        self.emissions[block]
            .binary_search(&pair.emission)
            .ok()
            .map(|i| offset + i)
    }

    pub fn block_of_excitation(&self, excitation: u32) -> Option<usize> {
        self.excitations.iter().position(|&e| e == excitation)
    }
}

impl Default for WavelengthGrid {
    /// 337 nm: 395..=685 (59), 380 nm: 395..=670 (56), 460 nm: 480..=700 (45).
    fn default() -> Self {
        Self {
            excitations: vec![337, 380, 460],
            emissions: vec![
                Self::raster(395, 59),
                Self::raster(395, 56),
                Self::raster(480, 45),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Histology {
    NormalSquamous,
    NormalColumnar,
    Inflammation,
    LowGradeSil,
    HighGradeSil,
}

impl Histology {
    pub const ALL: [Histology; 5] = [
        Histology::NormalSquamous,
        Histology::NormalColumnar,
        Histology::Inflammation,
        Histology::LowGradeSil,
        Histology::HighGradeSil,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Histology::NormalSquamous => "NS",
            Histology::NormalColumnar => "NC",
            Histology::Inflammation => "INFL",
            Histology::LowGradeSil => "LGSIL",
            Histology::HighGradeSil => "HGSIL",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.token() == token)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_sil(self) -> bool {
        matches!(self, Histology::LowGradeSil | Histology::HighGradeSil)
    }

    pub fn label(self) -> Label {
        if self.is_sil() {
            Label::Sil
        } else {
            Label::NonSil
        }
    }

    /// Tissue group used when balancing classes: the two SIL grades merge.
    pub fn group(self) -> TissueGroup {
        match self {
            Histology::NormalSquamous => TissueGroup::NormalSquamous,
            Histology::NormalColumnar => TissueGroup::NormalColumnar,
            Histology::Inflammation => TissueGroup::Inflammation,
            Histology::LowGradeSil | Histology::HighGradeSil => TissueGroup::Sil,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TissueGroup {
    NormalSquamous,
    NormalColumnar,
    Inflammation,
    Sil,
}

impl fmt::Display for Histology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Binary screening target. SIL is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    NonSil,
    Sil,
}

impl Label {
    pub fn is_sil(self) -> bool {
        self == Label::Sil
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Sil => "SIL",
            Label::NonSil => "non-SIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub patient_id: String,
    pub site_id: String,
    pub histology: Histology,
    pub intensities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitTag {
    Train,
    Test,
    Unsplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    grid: WavelengthGrid,
    samples: Vec<SpectralSample>,
    split: SplitTag,
}

impl Dataset {
    pub fn new(grid: WavelengthGrid, samples: Vec<SpectralSample>, split: SplitTag) -> Result<Self> {
        let expected = grid.pair_count();
        let pairs = grid.pairs();
        let mut seen = BTreeSet::new();
        for (i, s) in samples.iter().enumerate() {
            let row = i + 1;
            if s.patient_id.is_empty() {
                return Err(SpectraError::EmptyPatientId { row });
            }
            if s.intensities.len() != expected {
                return Err(SpectraError::LengthMismatch {
                    location: format!("sample {row}"),
                    expected,
                    found: s.intensities.len(),
                });
            }
            if let Some(j) = s.intensities.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(SpectraError::InvalidIntensity {
                    row,
                    column: pairs[j].column_name(),
                    value: s.intensities[j],
                });
            }
            if !seen.insert((s.patient_id.as_str(), s.site_id.as_str())) {
                return Err(SpectraError::DuplicateSite {
                    patient_id: s.patient_id.clone(),
                    site_id: s.site_id.clone(),
                });
            }
        }
        Ok(Self {
            grid,
            samples,
            split,
        })
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[SpectralSample] {
        &self.samples
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn with_split(mut self, split: SplitTag) -> Self {
        self.split = split;
        self
    }

    /// Per-class sample counts, indexed by [`Histology::index`].
    pub fn class_tally(&self) -> [usize; 5] {
        let mut tally = [0; 5];
        for s in &self.samples {
            tally[s.histology.index()] += 1;
        }
        tally
    }

    pub fn patients(&self) -> BTreeSet<&str> {
        self.samples.iter().map(|s| s.patient_id.as_str()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.histology.label()).collect()
    }

    /// Keeps the samples whose histology passes `keep`, preserving order.
    pub fn filter(&self, keep: impl Fn(Histology) -> bool) -> Dataset {
        Dataset {
            grid: self.grid.clone(),
            samples: self
                .samples
                .iter()
                .filter(|s| keep(s.histology))
                .cloned()
                .collect(),
            split: self.split,
        }
    }
}

const ID_COLUMNS: [&str; 3] = ["patient_id", "site_id", "histology"];

pub fn load_dataset(path: impl AsRef<Path>, grid: &WavelengthGrid) -> Result<Dataset> {
    read_dataset(File::open(path)?, grid)
}

pub fn read_dataset<R: Read>(reader: R, grid: &WavelengthGrid) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();

    let mut id_index = [0usize; 3];
    for (slot, name) in id_index.iter_mut().zip(ID_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| SpectraError::MissingColumn {
                column: name.to_string(),
            })?;
    }

    let intensity_cols: Vec<(usize, &str)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("I_"))
        .collect();
    let expected = grid.pair_count();
    if intensity_cols.len() != expected {
        return Err(SpectraError::LengthMismatch {
            location: "header".into(),
            expected,
            found: intensity_cols.len(),
        });
    }
    // Map every grid pair to its column position in the file.
    let mut positions = Vec::with_capacity(expected);
    for pair in grid.pairs() {
        let name = pair.column_name();
        let pos = intensity_cols
            .iter()
            .find(|(_, h)| *h == name)
            .map(|(i, _)| *i)
            .ok_or(SpectraError::MissingColumn { column: name })?;
        positions.push(pos);
    }

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != headers.len() {
            return Err(SpectraError::LengthMismatch {
                location: format!("row {row}"),
                expected,
                found: record.len().saturating_sub(ID_COLUMNS.len()),
            });
        }
        let token = &record[id_index[2]];
        let histology =
            Histology::from_token(token).ok_or_else(|| SpectraError::UnknownHistology {
                row,
                token: token.to_string(),
            })?;
        let mut intensities = Vec::with_capacity(expected);
        for &pos in &positions {
            let raw = record[pos].trim();
            let value: f64 = raw.parse().map_err(|_| SpectraError::NonNumeric {
                row,
                column: headers[pos].to_string(),
                value: raw.to_string(),
            })?;
            if !value.is_finite() || value < 0.0 {
                return Err(SpectraError::InvalidIntensity {
                    row,
                    column: headers[pos].to_string(),
                    value,
                });
            }
            intensities.push(value);
        }
        let patient_id = record[id_index[0]].to_string();
        if patient_id.is_empty() {
            return Err(SpectraError::EmptyPatientId { row });
        }
        samples.push(SpectralSample {
            patient_id,
            site_id: record[id_index[1]].to_string(),
            histology,
            intensities,
        });
    }
    Dataset::new(grid.clone(), samples, SplitTag::Unsplit)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_dataset(ds, file)
}

pub fn write_dataset<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ID_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(ds.grid.pairs().iter().map(WavelengthPair::column_name));
    wtr.write_record(&header)?;
    for s in &ds.samples {
        let mut rec = vec![
            s.patient_id.clone(),
            s.site_id.clone(),
            s.histology.token().to_string(),
        ];
        // `{}` prints the shortest representation that parses back exactly.
        rec.extend(s.intensities.iter().map(|v| format!("{v}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// A Gaussian emission band: `amplitude * exp(-(λ - center)² / (2 width²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Band {
    pub const fn new(center: f64, width: f64, amplitude: f64) -> Self {
        Self {
            center,
            width,
            amplitude,
        }
    }

    fn at(&self, emission: f64, shift: f64) -> f64 {
        let d = emission - self.center - shift;
        self.amplitude * (-0.5 * d * d / (self.width * self.width)).exp()
    }
}

/// Per-excitation emission bands of one tissue class.
pub type ClassProfile = Vec<Vec<Band>>;

/// Parameters of the synthetic fluorescence generator.
///
/// Each spectrum is a sum of Gaussian bands with class-specific amplitudes,
/// scaled by a per-patient multiplier and per-site noise. Patient effects
/// (overall multiplier and per-band jitter) are shared by all sites of one
/// patient; site effects (multiplier, band jitter, band shift, per-wavelength
/// ripple) are drawn independently per sample. Both scales at zero give
/// identical spectra within a class.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub grid: WavelengthGrid,
    /// Sample counts indexed by [`Histology::index`].
    pub counts: [usize; 5],
    /// Band profiles indexed by [`Histology::index`]; one band list per excitation.
    pub profiles: [ClassProfile; 5],
    pub patients: usize,
    pub patient_scale: f64,
    pub site_scale: f64,
    pub seed: u64,
    pub patient_prefix: String,
}

/// Training column of the histology table.
pub const TRAIN_COUNTS: [usize; 5] = [94, 13, 15, 23, 35];
/// Test column of the histology table.
pub const TEST_COUNTS: [usize; 5] = [94, 14, 14, 24, 35];

/// Seed of the canonical synthetic dataset.
pub const CANONICAL_SEED: u64 = 42;

fn default_profiles() -> [ClassProfile; 5] {
    // Bands per excitation: 337 nm (collagen-like, NADH-like), 380 nm
    // (collagen-like, NADH-like, porphyrin-like), 460 nm (FAD-like, red tail).
    let profile = |a337: [f64; 2], a380: [f64; 3], a460: [f64; 2]| -> ClassProfile {
        vec![
            vec![Band::new(410.0, 28.0, a337[0]), Band::new(470.0, 40.0, a337[1])],
            vec![
                Band::new(450.0, 32.0, a380[0]),
                Band::new(520.0, 45.0, a380[1]),
                Band::new(635.0, 18.0, a380[2]),
            ],
            vec![Band::new(530.0, 38.0, a460[0]), Band::new(610.0, 42.0, a460[1])],
        ]
    };
    [
        profile([1.00, 0.60], [1.00, 0.70, 0.10], [1.00, 0.50]),
        profile([0.34, 0.20], [0.56, 0.42, 0.06], [0.42, 0.16]),
        profile([0.58, 0.50], [0.52, 0.50, 0.12], [0.62, 0.46]),
        profile([0.52, 0.50], [0.40, 0.42, 0.12], [0.60, 0.44]),
        profile([0.48, 0.52], [0.48, 0.50, 0.13], [0.56, 0.46]),
    ]
}

impl SynthConfig {
    pub fn new(counts: [usize; 5], seed: u64) -> Self {
        let total: usize = counts.iter().sum();
        Self {
            grid: WavelengthGrid::default(),
            counts,
            profiles: default_profiles(),
            // ~95 patients for 361 sites
            patients: ((total as f64) * 95.0 / 361.0).round().max(1.0) as usize,
            patient_scale: 0.2,
            site_scale: 0.2,
            seed,
            patient_prefix: "P".into(),
        }
    }

    pub fn canonical_train(seed: u64) -> Self {
        Self {
            patient_prefix: "TR".into(),
            ..Self::new(TRAIN_COUNTS, seed)
        }
    }

    pub fn canonical_test(seed: u64) -> Self {
        Self {
            patient_prefix: "TE".into(),
            ..Self::new(TEST_COUNTS, seed)
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.patient_scale = 0.0;
        self.site_scale = 0.0;
        self
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Noise-free spectrum of a class.
    pub fn class_spectrum(&self, histology: Histology) -> Vec<f64> {
        let profile = &self.profiles[histology.index()];
        let mut out = Vec::with_capacity(self.grid.pair_count());
        for (block, bands) in profile.iter().enumerate() {
            for &em in self.grid.emissions(block) {
                out.push(bands.iter().map(|b| b.at(em as f64, 0.0)).sum());
            }
        }
        out
    }

    /// Checks the class-intensity ordering the generator must honour: at 337
    /// and 460 nm excitation the integrated intensity of each SIL grade lies
    /// strictly between normal columnar and normal squamous; at 380 nm normal
    /// columnar is within 20% of high-grade SIL.
    pub fn check_ordering(&self) -> Result<()> {
        let ranges = self.grid.block_ranges();
        let integrate = |h: Histology, block: usize| -> f64 {
            self.class_spectrum(h)[ranges[block].clone()].iter().sum()
        };
        for ex in [337, 460] {
            let Some(b) = self.grid.block_of_excitation(ex) else {
                continue;
            };
            let ns = integrate(Histology::NormalSquamous, b);
            let nc = integrate(Histology::NormalColumnar, b);
            for sil in [Histology::LowGradeSil, Histology::HighGradeSil] {
                let v = integrate(sil, b);
                if !(ns > v && v > nc) {
                    return Err(SpectraError::InfeasibleOrdering(format!(
                        "at {ex} nm need NS ({ns:.3}) > {sil} ({v:.3}) > NC ({nc:.3})"
                    )));
                }
            }
        }
        if let Some(b) = self.grid.block_of_excitation(380) {
            let nc = integrate(Histology::NormalColumnar, b);
            let hg = integrate(Histology::HighGradeSil, b);
            if (nc - hg).abs() > 0.2 * hg {
                return Err(SpectraError::InfeasibleOrdering(format!(
                    "at 380 nm NC ({nc:.3}) must be close to HG SIL ({hg:.3})"
                )));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.profiles.iter().any(|p| p.len() != self.grid.block_count()) {
            return Err(SpectraError::InvalidSynthConfig(
                "every class profile needs one band list per excitation".into(),
            ));
        }
        let bad_band = self
            .profiles
            .iter()
            .flatten()
            .flatten()
            .any(|b| !(b.width > 0.0) || !(b.amplitude >= 0.0) || !b.center.is_finite());
        if bad_band {
            return Err(SpectraError::InvalidSynthConfig(
                "bands need positive width, non-negative amplitude".into(),
            ));
        }
        if !(self.patient_scale >= 0.0 && self.site_scale >= 0.0) {
            return Err(SpectraError::InvalidSynthConfig(
                "noise scales must be non-negative".into(),
            ));
        }
        if self.patients == 0 {
            return Err(SpectraError::InvalidSynthConfig("need at least one patient".into()));
        }
        self.check_ordering()
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("seed", self.seed);
        kv.set("patients", self.patients);
        kv.set("patient_scale", self.patient_scale);
        kv.set("site_scale", self.site_scale);
        kv.set("patient_prefix", &self.patient_prefix);
        for h in Histology::ALL {
            kv.set(format!("count.{h}"), self.counts[h.index()]);
            for (block, bands) in self.profiles[h.index()].iter().enumerate() {
                let ex = self.grid.excitations()[block];
                let text: Vec<String> = bands
                    .iter()
                    .map(|b| format!("{}:{}:{}", b.center, b.width, b.amplitude))
                    .collect();
                kv.set(format!("bands.{h}.{ex}"), text.join(" "));
            }
        }
        kv
    }

    /// Reads overrides from a flat key-value set on top of `base`.
    pub fn from_kv(base: SynthConfig, kv: &KeyValues) -> Result<Self> {
        let mut cfg = base;
        if let Some(v) = kv.parse("seed")? {
            cfg.seed = v;
        }
        if let Some(v) = kv.parse("patients")? {
            cfg.patients = v;
        }
        if let Some(v) = kv.parse("patient_scale")? {
            cfg.patient_scale = v;
        }
        if let Some(v) = kv.parse("site_scale")? {
            cfg.site_scale = v;
        }
        if let Some(v) = kv.get("patient_prefix") {
            cfg.patient_prefix = v.to_string();
        }
        for h in Histology::ALL {
            if let Some(v) = kv.parse(&format!("count.{h}"))? {
                cfg.counts[h.index()] = v;
            }
            for (block, &ex) in cfg.grid.excitations().to_vec().iter().enumerate() {
                let key = format!("bands.{h}.{ex}");
                if let Some(text) = kv.get(&key) {
                    let bands = text
                        .split_whitespace()
                        .map(|t| {
                            let parts: Vec<f64> =
                                t.split(':').filter_map(|p| p.parse().ok()).collect();
                            match parts[..] {
                                [c, w, a] => Ok(Band::new(c, w, a)),
                                _ => Err(SpectraError::InvalidSynthConfig(format!(
                                    "`{key}`: bands are center:width:amplitude"
                                ))),
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    cfg.profiles[h.index()][block] = bands;
                }
            }
        }
        Ok(cfg)
    }
}

fn lognormal(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (scale * z).exp()
}

/// Draws a dataset from `cfg`. Deterministic for a fixed seed.
pub fn synthesize_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let blocks = cfg.grid.block_count();
    let max_bands = cfg.profiles.iter().flatten().map(Vec::len).max().unwrap_or(0);

    let mut classes: Vec<Histology> = Histology::ALL
        .iter()
        .flat_map(|&h| std::iter::repeat_n(h, cfg.counts[h.index()]))
        .collect();
    classes.shuffle(&mut rng);
    let patients = cfg.patients.min(classes.len()).max(1);

    struct PatientEffect {
        gain: f64,
        jitter: Vec<Vec<f64>>,
    }
    let effects: Vec<PatientEffect> = (0..patients)
        .map(|_| PatientEffect {
            gain: lognormal(&mut rng, cfg.patient_scale),
            jitter: (0..blocks)
                .map(|_| {
                    (0..max_bands)
                        .map(|_| lognormal(&mut rng, cfg.patient_scale))
                        .collect()
                })
                .collect(),
        })
        .collect();

    let mut site_counter = vec![0usize; patients];
    let mut samples = Vec::with_capacity(classes.len());
    for (i, &histology) in classes.iter().enumerate() {
        let p = i % patients;
        site_counter[p] += 1;
        let effect = &effects[p];
        let site_gain = lognormal(&mut rng, cfg.site_scale);
        let mut intensities = Vec::with_capacity(cfg.grid.pair_count());
        for (block, bands) in cfg.profiles[histology.index()].iter().enumerate() {
            let jitter: Vec<f64> = (0..bands.len())
                .map(|_| lognormal(&mut rng, cfg.site_scale))
                .collect();
            let shift_z: f64 = StandardNormal.sample(&mut rng);
            let shift = 8.0 * cfg.site_scale * shift_z;
            for &em in cfg.grid.emissions(block) {
                let clean: f64 = bands
                    .iter()
                    .enumerate()
                    .map(|(b, band)| band.at(em as f64, shift) * effect.jitter[block][b] * jitter[b])
                    .sum();
                let ripple = lognormal(&mut rng, 0.25 * cfg.site_scale);
                intensities.push(effect.gain * site_gain * clean * ripple);
            }
        }
        samples.push(SpectralSample {
            patient_id: format!("{}{:03}", cfg.patient_prefix, p + 1),
            site_id: format!("S{}", site_counter[p]),
            histology,
            intensities,
        });
    }
    Dataset::new(cfg.grid.clone(), samples, SplitTag::Unsplit)
}

/// The canonical train/test pair: histology-table class counts, train drawn
/// with `seed` and test with `seed + 1`, disjoint patient namespaces.
pub fn canonical_datasets(seed: u64) -> Result<(Dataset, Dataset)> {
    canonical_datasets_with(seed, |c| c)
}

/// Like [`canonical_datasets`] but lets the caller adjust both configs.
pub fn canonical_datasets_with(
    seed: u64,
    adjust: impl Fn(SynthConfig) -> SynthConfig,
) -> Result<(Dataset, Dataset)> {
    let train = synthesize_dataset(&adjust(SynthConfig::canonical_train(seed)))?;
    let test = synthesize_dataset(&adjust(SynthConfig::canonical_test(seed.wrapping_add(1))))?;
    Ok((train.with_split(SplitTag::Train), test.with_split(SplitTag::Test)))
}

/// Splits an unsplit dataset into train and test parts.
///
/// The train side receives `round(fraction * units)` units, clamped to
/// `[1, units - 1]`, where a unit is a patient (`by_patient`) or a sample.
/// Row order is preserved within each part.
pub fn split_train_test(
    ds: &Dataset,
    fraction: f64,
    by_patient: bool,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if ds.split != SplitTag::Unsplit {
        return Err(SpectraError::InvalidSplit("dataset is already split".into()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(SpectraError::InvalidSplit(format!(
            "fraction {fraction} outside (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = |units: usize| ((fraction * units as f64).round() as usize).clamp(1, units - 1);

    let in_train: Vec<bool> = if by_patient {
        let mut patients: Vec<&str> = ds.patients().into_iter().collect();
        if patients.len() < 2 {
            return Err(SpectraError::InvalidSplit(
                "patient-wise split needs at least 2 patients".into(),
            ));
        }
        patients.shuffle(&mut rng);
        let n = take(patients.len());
        let chosen: BTreeSet<&str> = patients[..n].iter().copied().collect();
        ds.samples
            .iter()
            .map(|s| chosen.contains(s.patient_id.as_str()))
            .collect()
    } else {
        if ds.len() < 2 {
            return Err(SpectraError::InvalidSplit("need at least 2 samples".into()));
        }
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        idx.shuffle(&mut rng);
        let mut flags = vec![false; ds.len()];
        for &i in &idx[..take(ds.len())] {
            flags[i] = true;
        }
        flags
    };

    let part = |want: bool, tag: SplitTag| Dataset {
        grid: ds.grid.clone(),
        samples: ds
            .samples
            .iter()
            .zip(&in_train)
            .filter(|(_, &t)| t == want)
            .map(|(s, _)| s.clone())
            .collect(),
        split: tag,
    };
    Ok((part(true, SplitTag::Train), part(false, SplitTag::Test)))
}

/// Class tallies formatted as `NS=94 NC=13 ...`.
pub fn format_tally(tally: &[usize; 5]) -> String {
    Histology::ALL
        .iter()
        .map(|h| format!("{h}={}", tally[h.index()]))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Mean integrated intensity per class and excitation block.
pub fn class_block_means(ds: &Dataset) -> BTreeMap<Histology, Vec<f64>> {
    let ranges = ds.grid.block_ranges();
    let mut sums: BTreeMap<Histology, (Vec<f64>, usize)> = BTreeMap::new();
    for s in &ds.samples {
        let entry = sums
            .entry(s.histology)
            .or_insert_with(|| (vec![0.0; ranges.len()], 0));
        for (b, r) in ranges.iter().enumerate() {
            entry.0[b] += s.intensities[r.clone()].iter().sum::<f64>();
        }
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(h, (v, n))| (h, v.into_iter().map(|x| x / n as f64).collect()))
        .collect()
}
