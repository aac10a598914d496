//! Spectral pre-processing: normalization and normalization followed by
//! mean-scaling, producing row-per-sample [`FeatureMatrix`] tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectra::{Dataset, Histology, Label, WavelengthPair};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("sample {row} (patient {patient_id}, site {site_id}): excitation {excitation} nm block has no positive intensity")]
    ZeroBlock {
        row: usize,
        patient_id: String,
        site_id: String,
        excitation: u32,
    },
    #[error("mean-scaling needs a normalized matrix, got {0}")]
    NotNormalized(Preprocessing),
    #[error("unknown wavelength pair {0}")]
    UnknownPair(WavelengthPair),
    #[error("feature matrix shape: {0}")]
    Shape(String),
    #[error("feature matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, PreprocessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preprocessing {
    Raw,
    Normalized,
    NormalizedMeanScaled,
    /// Columns concatenated from differently pre-processed matrices.
    Mixed,
}

impl Preprocessing {
    pub fn tag(self) -> &'static str {
        match self {
            Preprocessing::Raw => "raw",
            Preprocessing::Normalized => "normalized",
            Preprocessing::NormalizedMeanScaled => "normalized_mean_scaled",
            Preprocessing::Mixed => "mixed",
        }
    }

    fn short(self) -> &'static str {
        match self {
            Preprocessing::Raw => "raw",
            Preprocessing::Normalized => "norm",
            Preprocessing::NormalizedMeanScaled => "nms",
            Preprocessing::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Preprocessing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Preprocessing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            Preprocessing::Raw,
            Preprocessing::Normalized,
            Preprocessing::NormalizedMeanScaled,
            Preprocessing::Mixed,
        ]
        .into_iter()
        .find(|p| p.tag() == s || p.short() == s)
        .ok_or_else(|| format!("unknown preprocessing `{s}`"))
    }
}

/// Provenance of a feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnLabel {
    Pair {
        pair: WavelengthPair,
        source: Preprocessing,
    },
    /// 1-based principal component index.
    Component(usize),
}

impl ColumnLabel {
    pub fn pair(&self) -> Option<WavelengthPair> {
        match self {
            ColumnLabel::Pair { pair, .. } => Some(*pair),
            ColumnLabel::Component(_) => None,
        }
    }

    pub fn source(&self) -> Option<Preprocessing> {
        match self {
            ColumnLabel::Pair { source, .. } => Some(*source),
            ColumnLabel::Component(_) => None,
        }
    }
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLabel::Pair { pair, source } => {
                write!(f, "{}:{}", source.short(), pair.column_name())
            }
            ColumnLabel::Component(k) => write!(f, "PC{k}"),
        }
    }
}

impl FromStr for ColumnLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(k) = s.strip_prefix("PC") {
            return k
                .parse()
                .map(ColumnLabel::Component)
                .map_err(|_| format!("bad component label `{s}`"));
        }
        let (src, name) = s.split_once(':').ok_or_else(|| format!("bad label `{s}`"))?;
        Ok(ColumnLabel::Pair {
            pair: WavelengthPair::parse_column_name(name).ok_or_else(|| format!("bad label `{s}`"))?,
            source: src.parse()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowKey {
    pub patient_id: String,
    pub site_id: String,
    pub histology: Histology,
}

/// Row-major feature table with column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    column_labels: Vec<ColumnLabel>,
    row_keys: Vec<RowKey>,
    preprocessing: Preprocessing,
}

impl FeatureMatrix {
    pub fn new(
        values: Vec<f64>,
        column_labels: Vec<ColumnLabel>,
        row_keys: Vec<RowKey>,
        preprocessing: Preprocessing,
    ) -> Result<Self> {
        let (rows, cols) = (row_keys.len(), column_labels.len());
        if values.len() != rows * cols {
            return Err(PreprocessError::Shape(format!(
                "{} values for {rows}x{cols}",
                values.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            values,
            column_labels,
            row_keys,
            preprocessing,
        })
    }

    /// Builds an unlabeled matrix from rows, mostly for tests and examples.
    /// Columns get component labels; every row gets its own patient and the
    /// given histology.
    pub fn from_rows(rows: &[Vec<f64>], histology: &[Histology]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) || histology.len() != rows.len() {
            return Err(PreprocessError::Shape("ragged rows or label count".into()));
        }
        let keys = histology
            .iter()
            .enumerate()
            .map(|(i, &h)| RowKey {
                patient_id: format!("r{i}"),
                site_id: "s".into(),
                histology: h,
            })
            .collect();
        Self::new(
            rows.concat(),
            (1..=cols).map(ColumnLabel::Component).collect(),
            keys,
            Preprocessing::Raw,
        )
    }

    /// Raw intensities of a dataset.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let pairs = ds.grid().pairs();
        Self {
            rows: ds.len(),
            cols: pairs.len(),
            values: ds
                .samples()
                .iter()
                .flat_map(|s| s.intensities.iter().copied())
                .collect(),
            column_labels: pairs
                .into_iter()
                .map(|pair| ColumnLabel::Pair {
                    pair,
                    source: Preprocessing::Raw,
                })
                .collect(),
            row_keys: ds
                .samples()
                .iter()
                .map(|s| RowKey {
                    patient_id: s.patient_id.clone(),
                    site_id: s.site_id.clone(),
                    histology: s.histology,
                })
                .collect(),
            preprocessing: Preprocessing::Raw,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on 0; zero-width rows are still rows
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column_labels(&self) -> &[ColumnLabel] {
        &self.column_labels
    }

    pub fn row_keys(&self) -> &[RowKey] {
        &self.row_keys
    }

    pub fn preprocessing(&self) -> Preprocessing {
        self.preprocessing
    }

    pub fn histologies(&self) -> Vec<Histology> {
        self.row_keys.iter().map(|k| k.histology).collect()
    }

    pub fn targets(&self) -> Vec<Label> {
        self.row_keys.iter().map(|k| k.histology.label()).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.len(),
            cols: self.cols,
            values: indices
                .iter()
                .flat_map(|&i| self.row(i).iter().copied())
                .collect(),
            column_labels: self.column_labels.clone(),
            row_keys: indices.iter().map(|&i| self.row_keys[i].clone()).collect(),
            preprocessing: self.preprocessing,
        }
    }

    pub fn filter_rows(&self, keep: impl Fn(Histology) -> bool) -> FeatureMatrix {
        let idx: Vec<usize> = (0..self.rows)
            .filter(|&i| keep(self.row_keys[i].histology))
            .collect();
        self.select_rows(&idx)
    }

    pub fn select_column_indices(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: self.rows,
            cols: indices.len(),
            values: (0..self.rows)
                .flat_map(|i| indices.iter().map(move |&j| self.get(i, j)))
                .collect(),
            column_labels: indices.iter().map(|&j| self.column_labels[j]).collect(),
            row_keys: self.row_keys.clone(),
            preprocessing: self.preprocessing,
        }
    }

    /// Places the columns of `other` to the right of `self`. Both matrices
    /// must describe the same rows.
    pub fn hconcat(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.row_keys != other.row_keys {
            return Err(PreprocessError::Shape(
                "concatenated matrices must share row keys".into(),
            ));
        }
        let cols = self.cols + other.cols;
        let mut values = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            values.extend_from_slice(self.row(i));
            values.extend_from_slice(other.row(i));
        }
        let preprocessing = if self.preprocessing == other.preprocessing {
            self.preprocessing
        } else {
            Preprocessing::Mixed
        };
        Ok(FeatureMatrix {
            rows: self.rows,
            cols,
            values,
            column_labels: self
                .column_labels
                .iter()
                .chain(&other.column_labels)
                .copied()
                .collect(),
            row_keys: self.row_keys.clone(),
            preprocessing,
        })
    }
}

/// How a spectrum is rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NormalizationPolicy {
    /// Divide each excitation block by its own peak.
    #[default]
    PerExcitationPeak,
    /// Divide the whole 160-pair vector by its overall peak.
    GlobalPeak,
    /// Divide each excitation block by its summed intensity.
    PerExcitationArea,
}

impl FromStr for NormalizationPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "per_excitation_peak" => Ok(Self::PerExcitationPeak),
            "global_peak" => Ok(Self::GlobalPeak),
            "per_excitation_area" => Ok(Self::PerExcitationArea),
            _ => Err(format!("unknown normalization `{s}`")),
        }
    }
}

impl fmt::Display for NormalizationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerExcitationPeak => "per_excitation_peak",
            Self::GlobalPeak => "global_peak",
            Self::PerExcitationArea => "per_excitation_area",
        })
    }
}

/// Reference spectrum subtracted during mean-scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MeanScalePolicy {
    /// Mean over the patient's own sites.
    #[default]
    PerPatient,
    /// Mean over every row of the matrix.
    GlobalMean,
}

impl FromStr for MeanScalePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "per_patient" => Ok(Self::PerPatient),
            "global_mean" => Ok(Self::GlobalMean),
            _ => Err(format!("unknown mean-scaling policy `{s}`")),
        }
    }
}

impl fmt::Display for MeanScalePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerPatient => "per_patient",
            Self::GlobalMean => "global_mean",
        })
    }
}

/// Per-excitation peak normalization.
pub fn normalize(ds: &Dataset) -> Result<FeatureMatrix> {
    normalize_with(ds, NormalizationPolicy::default())
}

pub fn normalize_with(ds: &Dataset, policy: NormalizationPolicy) -> Result<FeatureMatrix> {
    let mut fm = FeatureMatrix::from_dataset(ds);
    let ranges = match policy {
        NormalizationPolicy::GlobalPeak => vec![0..fm.cols],
        _ => ds.grid().block_ranges(),
    };
    let cols = fm.cols;
    for (i, row) in fm.values.chunks_mut(cols.max(1)).enumerate().take(fm.rows) {
        for (b, r) in ranges.iter().enumerate() {
            let block = &mut row[r.clone()];
            let scale = match policy {
                NormalizationPolicy::PerExcitationArea => block.iter().sum::<f64>(),
                _ => block.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            };
            if !(scale > 0.0) {
                let key = &fm.row_keys[i];
                return Err(PreprocessError::ZeroBlock {
                    row: i + 1,
                    patient_id: key.patient_id.clone(),
                    site_id: key.site_id.clone(),
                    excitation: ds.grid().excitations()[b.min(ds.grid().block_count() - 1)],
                });
            }
            for v in block.iter_mut() {
                *v /= scale;
            }
        }
    }
    for label in &mut fm.column_labels {
        if let ColumnLabel::Pair { source, .. } = label {
            *source = Preprocessing::Normalized;
        }
    }
    fm.preprocessing = Preprocessing::Normalized;
    Ok(fm)
}

/// Subtracts each patient's mean normalized spectrum from that patient's rows.
pub fn mean_scale(fm: &FeatureMatrix) -> Result<FeatureMatrix> {
    mean_scale_with(fm, MeanScalePolicy::default())
}

pub fn mean_scale_with(fm: &FeatureMatrix, policy: MeanScalePolicy) -> Result<FeatureMatrix> {
    if fm.preprocessing != Preprocessing::Normalized {
        return Err(PreprocessError::NotNormalized(fm.preprocessing));
    }
    let groups: BTreeMap<&str, Vec<usize>> = match policy {
        MeanScalePolicy::PerPatient => {
            let mut g: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, k) in fm.row_keys.iter().enumerate() {
                g.entry(k.patient_id.as_str()).or_default().push(i);
            }
            g
        }
        MeanScalePolicy::GlobalMean => BTreeMap::from([("", (0..fm.rows).collect())]),
    };
    let mut out = fm.clone();
    let cols = fm.cols;
    for rows in groups.values() {
        let mut mean = vec![0.0; cols];
        for &i in rows {
            for (m, v) in mean.iter_mut().zip(fm.row(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= rows.len() as f64;
        }
        for &i in rows {
            // a single-site patient maps to the zero vector
            let row = &mut out.values[i * cols..(i + 1) * cols];
            for (v, m) in row.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
    }
    for label in &mut out.column_labels {
        if let ColumnLabel::Pair { source, .. } = label {
            *source = Preprocessing::NormalizedMeanScaled;
        }
    }
    out.preprocessing = Preprocessing::NormalizedMeanScaled;
    Ok(out)
}

/// Column subset in the order of `pairs`. When a pair occurs under several
/// sources the first column wins.
pub fn select_columns(fm: &FeatureMatrix, pairs: &[WavelengthPair]) -> Result<FeatureMatrix> {
    let indices = pairs
        .iter()
        .map(|&p| {
            fm.column_labels
                .iter()
                .position(|l| l.pair() == Some(p))
                .ok_or(PreprocessError::UnknownPair(p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fm.select_column_indices(&indices))
}

/// Applies one of the pre-processing modes to a dataset.
pub fn preprocess(
    ds: &Dataset,
    mode: Preprocessing,
    normalization: NormalizationPolicy,
    mean_scaling: MeanScalePolicy,
) -> Result<FeatureMatrix> {
    match mode {
        Preprocessing::Raw => Ok(FeatureMatrix::from_dataset(ds)),
        Preprocessing::Normalized => normalize_with(ds, normalization),
        Preprocessing::NormalizedMeanScaled => {
            mean_scale_with(&normalize_with(ds, normalization)?, mean_scaling)
        }
        Preprocessing::Mixed => Err(PreprocessError::Shape(
            "`mixed` is not a pre-processing mode".into(),
        )),
    }
}

/// Writes `# preprocessing=<tag>` followed by a CSV table.
pub fn write_feature_matrix<W: Write>(fm: &FeatureMatrix, mut writer: W) -> Result<()> {
    writeln!(writer, "# preprocessing={}", fm.preprocessing)?;
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["patient_id".to_string(), "site_id".into(), "histology".into()];
    header.extend(fm.column_labels.iter().map(ToString::to_string));
    wtr.write_record(&header)?;
    for (i, key) in fm.row_keys.iter().enumerate() {
        let mut rec = vec![
            key.patient_id.clone(),
            key.site_id.clone(),
            key.histology.token().to_string(),
        ];
        rec.extend(fm.row(i).iter().map(|v| format!("{v}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_feature_matrix<R: Read>(reader: R) -> Result<FeatureMatrix> {
    let mut buf = BufReader::new(reader);
    let mut first = String::new();
    buf.read_line(&mut first)?;
    let preprocessing: Preprocessing = first
        .trim()
        .strip_prefix("# preprocessing=")
        .ok_or_else(|| PreprocessError::Format("missing provenance line".into()))?
        .parse()
        .map_err(PreprocessError::Format)?;
    let mut rdr = csv::Reader::from_reader(buf);
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 {
        return Err(PreprocessError::Format("missing id columns".into()));
    }
    let column_labels = headers
        .iter()
        .skip(3)
        .map(|h| h.parse().map_err(PreprocessError::Format))
        .collect::<Result<Vec<ColumnLabel>>>()?;
    let mut values = Vec::new();
    let mut row_keys = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let histology = Histology::from_token(&rec[2])
            .ok_or_else(|| PreprocessError::Format(format!("row {}: bad histology", i + 1)))?;
        row_keys.push(RowKey {
            patient_id: rec[0].to_string(),
            site_id: rec[1].to_string(),
            histology,
        });
        for field in rec.iter().skip(3) {
            values.push(field.parse().map_err(|_| {
                PreprocessError::Format(format!("row {}: `{field}` is not a number", i + 1))
            })?);
        }
    }
    FeatureMatrix::new(values, column_labels, row_keys, preprocessing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimred::ALGO1_PAIRS;
    use crate::spectra::{
        synthesize_dataset, SpectralSample, SplitTag, SynthConfig, WavelengthGrid,
    };

    fn one_block(rows: &[(&str, Vec<f64>)]) -> Dataset {
        let n = rows[0].1.len() as u32;
        let grid =
            WavelengthGrid::new(vec![337], vec![(0..n).map(|i| 400 + 5 * i).collect()]).unwrap();
        let samples = rows
            .iter()
            .enumerate()
            .map(|(i, (p, v))| SpectralSample {
                patient_id: p.to_string(),
                site_id: format!("s{i}"),
                histology: Histology::NormalSquamous,
                intensities: v.clone(),
            })
            .collect();
        Dataset::new(grid, samples, SplitTag::Unsplit).unwrap()
    }

    #[test]
    fn scales_block_by_peak() {
        let fm = normalize(&one_block(&[("p", vec![2.0, 4.0, 8.0])])).unwrap();
        assert_eq!(fm.row(0), &[0.25, 0.5, 1.0]);
        assert_eq!(fm.preprocessing(), Preprocessing::Normalized);
    }

    #[test]
    fn zero_block_is_an_error() {
        let ds = one_block(&[("p", vec![1.0, 1.0, 1.0]), ("q", vec![0.0, 0.0, 0.0])]);
        match normalize(&ds).unwrap_err() {
            PreprocessError::ZeroBlock {
                row, excitation, ..
            } => assert_eq!((row, excitation), (2, 337)),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn normalization_is_idempotent_per_block() {
        let ds = synthesize_dataset(&SynthConfig::canonical_train(1)).unwrap();
        let once = normalize(&ds).unwrap();
        for (b, r) in ds.grid().block_ranges().into_iter().enumerate() {
            for row in once.row_iter() {
                let max = row[r.clone()].iter().copied().fold(f64::MIN, f64::max);
                assert_eq!(max, 1.0, "block {b}");
            }
        }
        let samples = ds
            .samples()
            .iter()
            .enumerate()
            .map(|(i, s)| SpectralSample {
                intensities: once.row(i).to_vec(),
                ..s.clone()
            })
            .collect();
        let renorm = Dataset::new(ds.grid().clone(), samples, SplitTag::Unsplit).unwrap();
        assert_eq!(normalize(&renorm).unwrap().values(), once.values());
    }

    #[test]
    fn global_and_area_policies() {
        let grid = WavelengthGrid::new(vec![337, 380], vec![vec![400, 405], vec![420]]).unwrap();
        let ds = Dataset::new(
            grid,
            vec![SpectralSample {
                patient_id: "p".into(),
                site_id: "s".into(),
                histology: Histology::NormalSquamous,
                intensities: vec![1.0, 3.0, 6.0],
            }],
            SplitTag::Unsplit,
        )
        .unwrap();
        let g = normalize_with(&ds, NormalizationPolicy::GlobalPeak).unwrap();
        assert_eq!(g.row(0), &[1.0 / 6.0, 0.5, 1.0]);
        let a = normalize_with(&ds, NormalizationPolicy::PerExcitationArea).unwrap();
        assert_eq!(a.row(0), &[0.25, 0.75, 1.0]);
    }

    #[test]
    fn mean_scaling_cases() {
        let ds = one_block(&[
            ("a", vec![1.0, 2.0, 4.0]),
            ("a", vec![1.0, 2.0, 4.0]),
            ("b", vec![3.0, 1.0, 2.0]),
        ]);
        let ms = mean_scale(&normalize(&ds).unwrap()).unwrap();
        for i in 0..3 {
            assert!(ms.row(i).iter().all(|&v| v == 0.0), "row {i}: {:?}", ms.row(i));
        }
        assert_eq!(ms.preprocessing(), Preprocessing::NormalizedMeanScaled);
        assert!(matches!(
            mean_scale(&ms),
            Err(PreprocessError::NotNormalized(_))
        ));
    }

    #[test]
    fn per_patient_means_vanish() {
        let mut cfg = SynthConfig::new([6, 2, 1, 2, 3], 4);
        cfg.patients = 3;
        let ds = synthesize_dataset(&cfg).unwrap();
        let ms = mean_scale(&normalize(&ds).unwrap()).unwrap();
        let mut sums: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (i, k) in ms.row_keys().iter().enumerate() {
            let s = sums
                .entry(&k.patient_id)
                .or_insert_with(|| vec![0.0; ms.cols()]);
            for (a, v) in s.iter_mut().zip(ms.row(i)) {
                *a += v;
            }
        }
        assert_eq!(sums.len(), 3);
        for s in sums.values() {
            assert!(s.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn reduced_pair_selection() {
        let ds = synthesize_dataset(&SynthConfig::new([2, 1, 0, 1, 0], 2)).unwrap();
        let fm = normalize(&ds).unwrap();
        let sel = select_columns(&fm, &ALGO1_PAIRS).unwrap();
        assert_eq!(sel.cols(), 13);
        let pairs: Vec<WavelengthPair> =
            sel.column_labels().iter().filter_map(ColumnLabel::pair).collect();
        assert_eq!(pairs, ALGO1_PAIRS.to_vec());
        assert_eq!(sel.row_keys(), fm.row_keys());

        let all: Vec<WavelengthPair> = ds.grid().pairs();
        assert_eq!(select_columns(&fm, &all).unwrap(), fm);
        assert!(matches!(
            select_columns(&fm, &[WavelengthPair::new(500, 500)]),
            Err(PreprocessError::UnknownPair(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let ds = synthesize_dataset(&SynthConfig::new([2, 1, 1, 1, 1], 8)).unwrap();
        let fm = mean_scale(&normalize(&ds).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_feature_matrix(&fm, &mut buf).unwrap();
        assert!(buf.starts_with(b"# preprocessing=normalized_mean_scaled\n"));
        assert_eq!(read_feature_matrix(buf.as_slice()).unwrap(), fm);
    }
}
