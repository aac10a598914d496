//! Principal component analysis, t-test screening of components and
//! loading-based reduction to a small set of wavelength pairs.

use std::io::{BufRead, BufReader, Read, Write};

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::preprocess::{ColumnLabel, FeatureMatrix};
use crate::spectra::{Label, WavelengthPair};

#[derive(Debug, Error)]
pub enum DimredError {
    #[error("PCA needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("requested {requested} components but at most {max} are available")]
    TooManyComponents { requested: usize, max: usize },
    #[error("dimension mismatch: model has {expected} features, matrix has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class {0} needs at least 2 samples for the t-test")]
    SmallClass(Label),
    #[error("alpha {0} outside (0, 1)")]
    BadAlpha(f64),
    #[error("threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("top_k {requested} exceeds the {available} available features")]
    BadTopK { requested: usize, available: usize },
    #[error("component selection is empty")]
    EmptySelection,
    #[error("feature `{0}` is not a wavelength pair")]
    NotAPair(ColumnLabel),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, DimredError>;

macro_rules! pairs {
    ($(($ex:expr, $em:expr)),* $(,)?) => { [$(WavelengthPair::new($ex, $em)),*] };
}

/// Reduced-parameter set of constituent algorithm (1), normalized spectra.
pub const ALGO1_PAIRS: [WavelengthPair; 13] = pairs![
    (337, 410), (337, 430), (337, 510), (337, 580),
    (380, 410), (380, 430), (380, 510), (380, 580), (380, 640),
    (460, 580), (460, 600), (460, 620), (460, 640),
];

/// Reduced-parameter set of constituent algorithm (2), normalized and
/// mean-scaled spectra. Differs from [`ALGO1_PAIRS`] in two pairs.
pub const ALGO2_PAIRS: [WavelengthPair; 13] = pairs![
    (337, 410), (337, 430), (337, 510), (337, 580),
    (380, 410), (380, 430), (380, 510), (380, 580), (380, 600),
    (460, 580), (460, 600), (460, 620), (460, 660),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// Training column means.
    pub mean: Vec<f64>,
    /// Unit eigenvectors, descending eigenvalue order.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the retained components, descending, clamped at 0.
    pub eigenvalues: Vec<f64>,
    /// Trace of the training covariance.
    pub total_variance: f64,
    pub explained_variance_ratio: Vec<f64>,
    pub feature_labels: Vec<ColumnLabel>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Maps PC scores back to feature space.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (s, c) in scores.iter().zip(&self.components) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += s * v;
            }
        }
        out
    }
}

/// Eigendecomposition of the sample covariance (n − 1 denominator).
///
/// Each component is signed so that its largest-magnitude entry is positive.
/// When the covariance has fewer than `n_components` numerically non-zero
/// eigenvalues a warning is logged and only those are returned.
pub fn fit_pca(fm: &FeatureMatrix, n_components: usize) -> Result<PcaModel> {
    let (n, d) = (fm.rows(), fm.cols());
    if n < 2 {
        return Err(DimredError::TooFewRows(n));
    }
    let max = (n - 1).min(d);
    if n_components > max {
        return Err(DimredError::TooManyComponents {
            requested: n_components,
            max,
        });
    }
    let x = DMatrix::from_row_slice(n, d, fm.values());
    let mean: Vec<f64> = x.column_iter().map(|c| c.sum() / n as f64).collect();
    let mut centered = x;
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let largest = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let tol = largest.max(f64::MIN_POSITIVE) * d as f64 * 1e-12;
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > tol).count();
    let keep = if rank < n_components {
        warn!("covariance rank {rank} is below the requested {n_components} components");
        rank
    } else {
        n_components
    };

    let mut components = Vec::with_capacity(keep);
    let mut eigenvalues = Vec::with_capacity(keep);
    for &i in &order[..keep] {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, x)| {
                if x.abs() > best.1 {
                    (j, x.abs())
                } else {
                    best
                }
            })
            .0;
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
    }
    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|l| if total_variance > 0.0 { l / total_variance } else { 0.0 })
        .collect();
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        total_variance,
        explained_variance_ratio,
        feature_labels: fm.column_labels().to_vec(),
    })
}

/// Scores on the first `k` components, columns labelled PC1..PCk.
pub fn project(model: &PcaModel, fm: &FeatureMatrix, k: usize) -> Result<FeatureMatrix> {
    if fm.cols() != model.dim() {
        return Err(DimredError::DimensionMismatch {
            expected: model.dim(),
            found: fm.cols(),
        });
    }
    if k > model.n_components() {
        return Err(DimredError::TooManyComponents {
            requested: k,
            max: model.n_components(),
        });
    }
    let mut values = Vec::with_capacity(fm.rows() * k);
    for row in fm.row_iter() {
        for c in &model.components[..k] {
            values.push(
                row.iter()
                    .zip(&model.mean)
                    .zip(c)
                    .map(|((x, m), v)| (x - m) * v)
                    .sum(),
            );
        }
    }
    FeatureMatrix::new(
        values,
        (1..=k).map(ColumnLabel::Component).collect(),
        fm.row_keys().to_vec(),
        fm.preprocessing(),
    )
    .map_err(|e| DimredError::Format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSelection {
    /// Column indices (0-based) of the selected components, ascending.
    pub indices: Vec<usize>,
    /// One-sided p-value of every component.
    pub p_values: Vec<f64>,
    pub t_statistics: Vec<f64>,
    pub alpha: f64,
}

impl ComponentSelection {
    /// The `k` components with the smallest p-values regardless of alpha,
    /// returned in ascending column order.
    pub fn most_significant(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.p_values.len()).collect();
        idx.sort_by(|&a, &b| self.p_values[a].total_cmp(&self.p_values[b]).then(a.cmp(&b)));
        idx.truncate(k);
        idx.sort_unstable();
        idx
    }
}

/// Pooled-variance two-sample t statistic of `a` minus `b`, with its degrees
/// of freedom.
pub fn pooled_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let ss = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        (n, m, ss)
    };
    let (na, ma, ssa) = stats(a);
    let (nb, mb, ssb) = stats(b);
    let df = na + nb - 2.0;
    let sp = ((ssa + ssb) / df).sqrt();
    let diff = ma - mb;
    let t = if diff == 0.0 {
        0.0
    } else {
        diff / (sp * (1.0 / na + 1.0 / nb).sqrt())
    };
    (t, df)
}

/// Upper-tail probability `P(T > |t|)`: the one-sided p-value in the
/// direction of the observed difference.
pub fn one_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    dist.sf(t.abs())
}

/// Unpaired one-sided t-test of SIL against non-SIL scores for every column.
pub fn select_components(
    scores: &FeatureMatrix,
    labels: &[Label],
    alpha: f64,
) -> Result<ComponentSelection> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DimredError::BadAlpha(alpha));
    }
    let n_sil = labels.iter().filter(|l| l.is_sil()).count();
    if n_sil < 2 {
        return Err(DimredError::SmallClass(Label::Sil));
    }
    if labels.len() - n_sil < 2 {
        return Err(DimredError::SmallClass(Label::NonSil));
    }
    let mut p_values = Vec::with_capacity(scores.cols());
    let mut t_statistics = Vec::with_capacity(scores.cols());
    for j in 0..scores.cols() {
        let col = scores.column(j);
        let pick = |want: bool| -> Vec<f64> {
            col.iter().zip(labels).filter(|(_, l)| l.is_sil() == want).map(|(v, _)| *v).collect()
        };
        let (sil, non) = (pick(true), pick(false));
        let (t, df) = pooled_t(&sil, &non);
        t_statistics.push(t);
        p_values.push(one_sided_p(t, df));
    }
    let indices = (0..p_values.len()).filter(|&j| p_values[j] < alpha).collect();
    Ok(ComponentSelection {
        indices,
        p_values,
        t_statistics,
        alpha,
    })
}

/// Pearson correlation, `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa.sqrt() * sbb.sqrt()))
    }
}

/// Feature × component correlation table.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingMatrix {
    /// Row-major, `feature_labels.len()` rows by `components.len()` columns.
    pub values: Vec<f64>,
    pub feature_labels: Vec<ColumnLabel>,
    /// 0-based component indices of the columns.
    pub components: Vec<usize>,
}

impl LoadingMatrix {
    pub fn get(&self, feature: usize, component: usize) -> f64 {
        self.values[feature * self.components.len() + component]
    }

    pub fn feature_row(&self, feature: usize) -> &[f64] {
        let k = self.components.len();
        &self.values[feature * k..(feature + 1) * k]
    }
}

/// Correlation between each feature column and each selected PC's scores.
/// Zero-variance features get loading 0.
pub fn component_loadings(
    model: &PcaModel,
    fm: &FeatureMatrix,
    selection: &ComponentSelection,
) -> Result<LoadingMatrix> {
    let Some(&last) = selection.indices.iter().max() else {
        return Err(DimredError::EmptySelection);
    };
    let scores = project(model, fm, last + 1)?;
    let score_cols: Vec<Vec<f64>> = selection.indices.iter().map(|&j| scores.column(j)).collect();
    let mut values = Vec::with_capacity(fm.cols() * score_cols.len());
    for j in 0..fm.cols() {
        let feature = fm.column(j);
        for s in &score_cols {
            values.push(pearson(&feature, s).unwrap_or_else(|| {
                warn!("feature {} has zero variance; loading set to 0", fm.column_labels()[j]);
                0.0
            }));
        }
    }
    Ok(LoadingMatrix {
        values,
        feature_labels: fm.column_labels().to_vec(),
        components: selection.indices.clone(),
    })
}

/// How many pairs survive wavelength reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReductionCriterion {
    /// Keep pairs whose strongest |loading| is at least this value.
    Threshold(f64),
    /// Keep the `k` pairs with the strongest |loading|.
    TopK(usize),
}

/// Wavelength pairs correlating strongly with the selected components,
/// sorted by (excitation, emission). Ties in strength are broken by the same
/// ordering.
pub fn reduce_wavelengths(
    loadings: &LoadingMatrix,
    criterion: ReductionCriterion,
) -> Result<Vec<WavelengthPair>> {
    let mut strength = Vec::with_capacity(loadings.feature_labels.len());
    for (f, label) in loadings.feature_labels.iter().enumerate() {
        let pair = label.pair().ok_or(DimredError::NotAPair(*label))?;
        let s = loadings
            .feature_row(f)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        strength.push((pair, s));
    }
    let mut chosen: Vec<WavelengthPair> = match criterion {
        ReductionCriterion::Threshold(t) => {
            if !(0.0..=1.0).contains(&t) {
                return Err(DimredError::BadThreshold(t));
            }
            strength.iter().filter(|(_, s)| *s >= t).map(|(p, _)| *p).collect()
        }
        ReductionCriterion::TopK(k) => {
            if k > strength.len() {
                return Err(DimredError::BadTopK {
                    requested: k,
                    available: strength.len(),
                });
            }
            strength.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            strength.iter().take(k).map(|(p, _)| *p).collect()
        }
    };
    chosen.sort();
    chosen.dedup();
    Ok(chosen)
}

/// Text layout: a `# pca_model v1 total_variance=<v>` line, a header
/// `feature,mean,PC1..PCk`, an `eigenvalue` row, then one row per feature.
pub fn write_pca_model<W: Write>(model: &PcaModel, mut w: W) -> Result<()> {
    writeln!(w, "# pca_model v1 total_variance={}", model.total_variance)?;
    let k = model.n_components();
    let header: Vec<String> = ["feature".to_string(), "mean".into()]
        .into_iter()
        .chain((1..=k).map(|i| format!("PC{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    let eig: Vec<String> = model.eigenvalues.iter().map(|v| format!("{v}")).collect();
    writeln!(w, "eigenvalue,,{}", eig.join(","))?;
    for (j, label) in model.feature_labels.iter().enumerate() {
        let mut fields = vec![label.to_string(), format!("{}", model.mean[j])];
        fields.extend(model.components.iter().map(|c| format!("{}", c[j])));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn read_pca_model<R: Read>(r: R) -> Result<PcaModel> {
    let bad = |m: &str| DimredError::Format(m.to_string());
    let mut lines = BufReader::new(r).lines();
    let mut next = || -> Result<String> { lines.next().ok_or_else(|| bad("truncated"))?.map_err(Into::into) };
    let total_variance: f64 = next()?
        .strip_prefix("# pca_model v1 total_variance=")
        .ok_or_else(|| bad("missing pca_model header"))?
        .parse()
        .map_err(|_| bad("total_variance"))?;
    let header = next()?;
    let k = header.split(',').count().saturating_sub(2);
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
    let eig_line = next()?;
    let eigenvalues = eig_line
        .strip_prefix("eigenvalue,,")
        .ok_or_else(|| bad("missing eigenvalue row"))?
        .split(',')
        .filter(|s| !s.is_empty())
        .map(num)
        .collect::<Result<Vec<f64>>>()?;
    let mut mean = Vec::new();
    let mut components = vec![Vec::new(); k];
    let mut feature_labels = Vec::new();
    for line in lines {
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != k + 2 {
            return Err(bad("ragged feature row"));
        }
        feature_labels.push(fields[0].parse().map_err(|e: String| DimredError::Format(e))?);
        mean.push(num(fields[1])?);
        for (c, f) in components.iter_mut().zip(&fields[2..]) {
            c.push(num(f)?);
        }
    }
    if eigenvalues.len() != k {
        return Err(bad("eigenvalue count"));
    }
    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|l| if total_variance > 0.0 { l / total_variance } else { 0.0 })
        .collect();
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        total_variance,
        explained_variance_ratio,
        feature_labels,
    })
}

/// Header `feature,PC<i>...` (1-based component numbers), one row per feature.
pub fn write_loadings<W: Write>(l: &LoadingMatrix, mut w: W) -> Result<()> {
    writeln!(w, "# loadings v1")?;
    let header: Vec<String> = std::iter::once("feature".to_string())
        .chain(l.components.iter().map(|c| format!("PC{}", c + 1)))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (f, label) in l.feature_labels.iter().enumerate() {
        let row: Vec<String> = std::iter::once(label.to_string())
            .chain(l.feature_row(f).iter().map(|v| format!("{v}")))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_loadings<R: Read>(r: R) -> Result<LoadingMatrix> {
    let bad = |m: &str| DimredError::Format(m.to_string());
    let mut lines = BufReader::new(r).lines();
    if lines.next().transpose()?.as_deref() != Some("# loadings v1") {
        return Err(bad("missing loadings header"));
    }
    let header = lines.next().transpose()?.ok_or_else(|| bad("truncated"))?;
    let components = header
        .split(',')
        .skip(1)
        .map(|h| {
            h.strip_prefix("PC")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n > 0)
                .map(|n| n - 1)
                .ok_or_else(|| bad(h))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::new();
    let mut feature_labels = Vec::new();
    for line in lines {
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != components.len() + 1 {
            return Err(bad("ragged loadings row"));
        }
        feature_labels.push(fields[0].parse().map_err(|e: String| DimredError::Format(e))?);
        for f in &fields[1..] {
            values.push(f.parse().map_err(|_| bad(f))?);
        }
    }
    Ok(LoadingMatrix {
        values,
        feature_labels,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Preprocessing;
    use crate::spectra::Histology;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        FeatureMatrix::from_rows(&data, &vec![Histology::NormalSquamous; rows]).unwrap()
    }

    #[test]
    fn constant_column_has_zero_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.random(), 5.0, rng.random::<f64>() * 2.0])
            .collect();
        let fm = FeatureMatrix::from_rows(&rows, &[Histology::NormalSquamous; 30]).unwrap();
        let m = fit_pca(&fm, 2).unwrap();
        for c in &m.components {
            assert!(c[1].abs() < 1e-10);
        }
    }

    #[test]
    fn sign_convention_and_order() {
        let m = fit_pca(&random_matrix(40, 6, 1), 6).unwrap();
        assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        for c in &m.components {
            let big = c.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn rank_deficiency_truncates() {
        // three identical rows plus one other: rank 1
        let fm = FeatureMatrix::from_rows(
            &[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]],
            &[Histology::NormalSquamous; 4],
        )
        .unwrap();
        assert_eq!(fit_pca(&fm, 3).unwrap().n_components(), 1);
        assert!(matches!(
            fit_pca(&fm, 4),
            Err(DimredError::TooManyComponents { max: 3, .. })
        ));
    }

    #[test]
    fn project_boundaries() {
        let fm = random_matrix(20, 4, 2);
        let m = fit_pca(&fm, 3).unwrap();
        let zero = project(&m, &fm, 0).unwrap();
        assert_eq!((zero.rows(), zero.cols()), (20, 0));
        let s = project(&m, &fm, 3).unwrap();
        for j in 0..3 {
            assert!(s.column(j).iter().sum::<f64>().abs() / 20.0 < 1e-10);
        }
        assert_eq!(s.column_labels()[2], ColumnLabel::Component(3));
        assert!(matches!(
            project(&m, &random_matrix(5, 3, 0), 1),
            Err(DimredError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn separated_component_selected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let sil = i < 20;
            let base = if sil { 10.0 } else { 0.0 };
            let noise: f64 = rng.random_range(-1e-3..1e-3);
            // column 0 separates, column 1 does not
            rows.push(vec![base + noise, (i % 20) as f64 * 0.1]);
            labels.push(if sil { Label::Sil } else { Label::NonSil });
        }
        let hist = vec![Histology::NormalSquamous; 40];
        let fm = FeatureMatrix::from_rows(&rows, &hist).unwrap();
        let sel = select_components(&fm, &labels, 0.05).unwrap();
        assert!(sel.p_values[0] < 1e-6);
        assert_eq!(sel.indices, vec![0]);
        assert_eq!(sel.most_significant(1), vec![0]);
    }

    #[test]
    fn null_component_has_p_half() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 10) as f64]).collect();
        let labels: Vec<Label> = (0..20)
            .map(|i| if i < 10 { Label::Sil } else { Label::NonSil })
            .collect();
        let fm = FeatureMatrix::from_rows(&rows, &[Histology::NormalSquamous; 20]).unwrap();
        let sel = select_components(&fm, &labels, 0.05).unwrap();
        assert!((sel.p_values[0] - 0.5).abs() < 1e-12);
        assert!(sel.indices.is_empty());
    }

    #[test]
    fn t_test_validation() {
        let fm = random_matrix(4, 1, 0);
        let labels = [Label::Sil, Label::NonSil, Label::NonSil, Label::NonSil];
        assert!(matches!(
            select_components(&fm, &labels, 0.05),
            Err(DimredError::SmallClass(Label::Sil))
        ));
        assert!(matches!(
            select_components(&fm, &labels, 1.0),
            Err(DimredError::BadAlpha(_))
        ));
    }

    #[test]
    fn self_correlation() {
        let s = [1.0, 2.0, 4.0, 7.0, -3.0];
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        assert!((pearson(&s, &s).unwrap() - 1.0).abs() < 1e-10);
        assert!((pearson(&s, &neg).unwrap() + 1.0).abs() < 1e-10);
        assert_eq!(pearson(&s, &[2.0; 5]), None);
    }

    #[test]
    fn feature_equal_to_score_has_unit_loading() {
        // with the first column scaled up it dominates PC1, so the PC1
        // scores are an affine image of that column
        let mut fm_rows: Vec<Vec<f64>> = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..25 {
            fm_rows.push(vec![rng.random_range(-100.0..100.0), 0.0, 0.0]);
        }
        let fm = FeatureMatrix::from_rows(&fm_rows, &[Histology::NormalSquamous; 25]).unwrap();
        let m = fit_pca(&fm, 1).unwrap();
        let sel = ComponentSelection {
            indices: vec![0],
            p_values: vec![0.0],
            t_statistics: vec![0.0],
            alpha: 0.05,
        };
        let l = component_loadings(&m, &fm, &sel).unwrap();
        assert!((l.get(0, 0) - 1.0).abs() < 1e-10);
        assert_eq!(l.get(1, 0), 0.0);
    }

    fn pair_loadings(strengths: &[f64]) -> LoadingMatrix {
        LoadingMatrix {
            values: strengths.to_vec(),
            feature_labels: (0..strengths.len() as u32)
                .map(|i| ColumnLabel::Pair {
                    pair: WavelengthPair::new(337, 400 + 5 * i),
                    source: Preprocessing::Normalized,
                })
                .collect(),
            components: vec![0],
        }
    }

    #[test]
    fn reduction_criteria() {
        let l = pair_loadings(&[0.1, -0.9, 0.5, 0.9, 0.0]);
        let top = reduce_wavelengths(&l, ReductionCriterion::TopK(2)).unwrap();
        assert_eq!(top, vec![WavelengthPair::new(337, 405), WavelengthPair::new(337, 415)]);
        // tie at 0.9 broken by emission ascending
        let one = reduce_wavelengths(&l, ReductionCriterion::TopK(1)).unwrap();
        assert_eq!(one, vec![WavelengthPair::new(337, 405)]);
        assert_eq!(reduce_wavelengths(&l, ReductionCriterion::Threshold(0.0)).unwrap().len(), 5);
        assert_eq!(reduce_wavelengths(&l, ReductionCriterion::Threshold(0.5)).unwrap().len(), 3);
        assert!(reduce_wavelengths(&l, ReductionCriterion::Threshold(1.0 + 1e-9)).is_err());
        assert!(reduce_wavelengths(&l, ReductionCriterion::TopK(6)).is_err());
    }

    #[test]
    fn reduced_sets_differ_in_two_pairs() {
        let a: std::collections::BTreeSet<_> = ALGO1_PAIRS.iter().collect();
        let b: std::collections::BTreeSet<_> = ALGO2_PAIRS.iter().collect();
        assert_eq!(a.intersection(&b).count(), 11);
    }

    #[test]
    fn model_and_loadings_round_trip() {
        let fm = random_matrix(15, 4, 4);
        let m = fit_pca(&fm, 3).unwrap();
        let mut buf = Vec::new();
        write_pca_model(&m, &mut buf).unwrap();
        assert_eq!(read_pca_model(buf.as_slice()).unwrap(), m);

        let l = pair_loadings(&[0.25, -0.5, 1.0 / 3.0]);
        let mut buf = Vec::new();
        write_loadings(&l, &mut buf).unwrap();
        assert_eq!(read_loadings(buf.as_slice()).unwrap(), l);
    }
}
