//! Confusion counts, sensitivity/specificity, spread across repetitions and
//! report rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectra::Label;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predicted} predictions for {truth} labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("no {0} samples in the ground truth")]
    MissingClass(Label),
}

type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    pub false_positive: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_negative + self.true_negative + self.false_positive
    }
}

/// SIL is the positive class.
pub fn confusion(predicted: &[Label], truth: &[Label]) -> Result<ConfusionCounts> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut c = ConfusionCounts::default();
    for (p, t) in predicted.iter().zip(truth) {
        match (t, p) {
            (Label::Sil, Label::Sil) => c.true_positive += 1,
            (Label::Sil, Label::NonSil) => c.false_negative += 1,
            (Label::NonSil, Label::NonSil) => c.true_negative += 1,
            (Label::NonSil, Label::Sil) => c.false_positive += 1,
        }
    }
    Ok(c)
}

/// Sensitivity and specificity in percent.
pub fn sens_spec(c: &ConfusionCounts) -> Result<(f64, f64)> {
    let pos = c.true_positive + c.false_negative;
    let neg = c.true_negative + c.false_positive;
    if pos == 0 {
        return Err(EvalError::MissingClass(Label::Sil));
    }
    if neg == 0 {
        return Err(EvalError::MissingClass(Label::NonSil));
    }
    Ok((
        100.0 * c.true_positive as f64 / pos as f64,
        100.0 * c.true_negative as f64 / neg as f64,
    ))
}

pub fn evaluate(predicted: &[Label], truth: &[Label]) -> Result<(f64, f64)> {
    sens_spec(&confusion(predicted, truth)?)
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variability {
    pub mean: f64,
    pub std: f64,
}

pub fn variability(values: &[f64]) -> Result<Variability> {
    if values.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(Variability { mean, std })
}

/// Published screening performance used as context in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub method: &'static str,
    pub sensitivity: f64,
    pub sensitivity_std: Option<f64>,
    pub specificity: f64,
    pub specificity_std: Option<f64>,
    /// Always `literature`: these rows are quoted, not computed.
    pub source: &'static str,
}

pub fn reference_table() -> Vec<ReferenceRow> {
    vec![
        ReferenceRow {
            method: "Pap smear screening",
            sensitivity: 62.0,
            sensitivity_std: Some(23.0),
            specificity: 68.0,
            specificity_std: Some(21.0),
            source: "literature",
        },
        ReferenceRow {
            method: "Colposcopy in expert hands",
            sensitivity: 94.0,
            sensitivity_std: Some(6.0),
            specificity: 48.0,
            specificity_std: Some(23.0),
            source: "literature",
        },
        ReferenceRow {
            method: "2-step MSA",
            sensitivity: 84.0,
            sensitivity_std: None,
            specificity: 65.0,
            specificity_std: None,
            source: "literature",
        },
    ]
}

/// Sensitivity/specificity of one configuration over its repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    /// `single`, `ave` or `med`.
    pub combiner: String,
    pub cost: f64,
    pub pool_size: usize,
    pub seeds: Vec<u64>,
    pub sensitivity: Variability,
    pub specificity: Variability,
    /// `(sensitivity, specificity)` of each repetition.
    pub raw: Vec<(f64, f64)>,
}

impl EvalReport {
    pub fn from_runs(
        name: impl Into<String>,
        combiner: impl Into<String>,
        cost: f64,
        pool_size: usize,
        seeds: Vec<u64>,
        raw: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let sens: Vec<f64> = raw.iter().map(|r| r.0).collect();
        let spec: Vec<f64> = raw.iter().map(|r| r.1).collect();
        Ok(Self {
            name: name.into(),
            combiner: combiner.into(),
            cost,
            pool_size,
            seeds,
            sensitivity: variability(&sens)?,
            specificity: variability(&spec)?,
            raw,
        })
    }
}

pub const REPORT_CSV_HEADER: &str = "combiner,cost,sensitivity,specificity,sens_std,spec_std";

pub fn report_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        writeln!(
            out,
            "{},{},{:.1},{:.1},{:.1},{:.1}",
            r.combiner,
            r.cost,
            r.sensitivity.mean,
            r.specificity.mean,
            r.sensitivity.std,
            r.specificity.std
        )
        .unwrap();
    }
    out
}

fn pm(mean: f64, std: Option<f64>) -> String {
    match std {
        Some(s) => format!("{mean:.1} ± {s:.1}"),
        None => format!("{mean:.1}"),
    }
}

/// Aligned text table of the reports followed by the reference methods.
pub fn report_table(reports: &[EvalReport]) -> String {
    let mut rows: Vec<[String; 4]> = vec![[
        "method".into(),
        "cost".into(),
        "sensitivity (%)".into(),
        "specificity (%)".into(),
    ]];
    for r in reports {
        let label = if r.combiner == "single" {
            format!("{} (single)", r.name)
        } else {
            format!("{} ({}, N={})", r.name, r.combiner, r.pool_size)
        };
        rows.push([
            label,
            format!("{}", r.cost),
            pm(r.sensitivity.mean, Some(r.sensitivity.std)),
            pm(r.specificity.mean, Some(r.specificity.std)),
        ]);
    }
    for r in reference_table() {
        rows.push([
            format!("{} [{}]", r.method, r.source),
            "-".into(),
            pm(r.sensitivity, r.sensitivity_std),
            pm(r.specificity, r.specificity_std),
        ]);
    }
    let widths: Vec<usize> = (0..4)
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

/// `(threshold, sensitivity, specificity)` for each threshold, classifying
/// SIL iff `score >= threshold`.
pub fn threshold_sweep(
    scores: &[f64],
    truth: &[Label],
    thresholds: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    thresholds
        .iter()
        .map(|&t| {
            let pred: Vec<Label> = scores
                .iter()
                .map(|&s| if s >= t { Label::Sil } else { Label::NonSil })
                .collect();
            let (se, sp) = evaluate(&pred, truth)?;
            Ok((t, se, sp))
        })
        .collect()
}

/// `specificity,sensitivity` pairs, one per line, for a tradeoff plot.
pub fn tradeoff_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("specificity,sensitivity\n");
    for r in reports {
        writeln!(out, "{:.1},{:.1}", r.specificity.mean, r.sensitivity.mean).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn counts_and_rates() {
        let truth = [Sil, Sil, Sil, NonSil, NonSil];
        let pred = [Sil, NonSil, Sil, Sil, NonSil];
        let c = confusion(&pred, &truth).unwrap();
        assert_eq!((c.true_positive, c.false_negative, c.true_negative, c.false_positive), (2, 1, 1, 1));
        let (se, sp) = sens_spec(&c).unwrap();
        assert!((se - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(sp, 50.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(confusion(&[Sil], &[]), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(confusion(&[], &[]), Err(EvalError::Empty)));
        assert!(matches!(evaluate(&[Sil], &[NonSil]), Err(EvalError::MissingClass(Sil))));
        assert!(variability(&[]).is_err());
        assert_eq!(variability(&[3.0]).unwrap().std, 0.0);
    }

    #[test]
    fn sample_std() {
        let v = variability(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(v.mean, 5.0);
        assert!((v.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_rounds_to_one_decimal() {
        let r = EvalReport::from_runs("x", "med", 2.5, 20, vec![1], vec![(80.04, 70.06)]).unwrap();
        let csv = report_csv(&[r]);
        assert_eq!(csv.lines().nth(1).unwrap(), "med,2.5,80.0,70.1,0.0,0.0");
        assert!(report_table(&[]).contains("Colposcopy"));
    }
}
