//! Evaluation of SSIM predictions: residual statistics, linear fit,
//! class-binned classification reports and agreement with expert classes.

mod csvio;
mod report;

pub use csvio::{join_predictions, read_predictions, read_subjective, write_predictions};
pub use report::{emit_classification, emit_regression, format_table, residual_histogram_svg, scatter_svg};

use serde::{Deserialize, Serialize};

use crate::binning::ClassScheme;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub ssim_pred: f64,
    pub ssim_true: Option<f64>,
    pub subjective_class: Option<usize>,
}

impl PredictionRecord {
    pub fn new(id: impl Into<String>, ssim_pred: f64, ssim_true: f64) -> Self {
        PredictionRecord {
            id: id.into(),
            ssim_pred,
            ssim_true: Some(ssim_true),
            subjective_class: None,
        }
    }
}

fn truths(preds: &[PredictionRecord]) -> Result<Vec<f64>> {
    preds
        .iter()
        .map(|p| {
            p.ssim_true
                .ok_or_else(|| Error::invalid(format!("prediction '{}' has no ground truth", p.id)))
        })
        .collect()
}

/// `predicted - ground truth`, in input order.
pub fn residuals(preds: &[PredictionRecord]) -> Result<Vec<f64>> {
    Ok(truths(preds)?
        .into_iter()
        .zip(preds)
        .map(|(t, p)| p.ssim_pred - t)
        .collect())
}

/// Maximum-likelihood normal fit: mean and population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

pub fn residual_stats(res: &[f64]) -> Result<ResidualStats> {
    if res.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 residuals, got {}", res.len())));
    }
    // Welford's update keeps the one-pass result stable
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &r) in res.iter().enumerate() {
        let d = r - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (r - mean);
    }
    Ok(ResidualStats {
        mu: mean,
        sigma: (m2 / res.len() as f64).sqrt(),
        n: res.len(),
    })
}

/// Ordinary least squares of prediction on ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn linear_fit(preds: &[PredictionRecord]) -> Result<LinearFit> {
    let x = truths(preds)?;
    let y: Vec<f64> = preds.iter().map(|p| p.ssim_pred).collect();
    if x.len() < 2 {
        return Err(Error::invalid("linear fit needs at least 2 points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("ground truth has zero variance"));
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub n: usize,
    pub residuals: ResidualStats,
    pub fit: LinearFit,
    pub rmse: f64,
}

pub fn regression_report(preds: &[PredictionRecord]) -> Result<RegressionReport> {
    let res = residuals(preds)?;
    let stats = residual_stats(&res)?;
    Ok(RegressionReport {
        n: res.len(),
        residuals: stats,
        fit: linear_fit(preds)?,
        rmse: (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub scheme: String,
    /// Printable SSIM range of each class, class order.
    pub ranges: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: ClassMetrics,
    pub weighted_avg: ClassMetrics,
    pub accuracy: f64,
    /// `confusion[t][p]`: rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
    /// Confusion rows divided by their sums (all-zero rows stay zero).
    pub confusion_normalized: Vec<Vec<f64>>,
    /// Classes (1-based) whose precision or recall hit a zero division and
    /// were set to 0.
    pub zero_division: Vec<usize>,
}

impl ClassReport {
    pub fn total(&self) -> u64 {
        self.per_class.iter().map(|c| c.support).sum()
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Report from 1-based class labels over `k` classes.
pub fn report_from_labels(truth: &[usize], pred: &[usize], k: usize) -> Result<ClassReport> {
    if truth.is_empty() {
        return Err(Error::invalid("classification report of zero samples"));
    }
    if truth.len() != pred.len() {
        return Err(Error::Shape(format!(
            "{} truths, {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    if let Some(bad) = truth.iter().chain(pred).find(|&&c| c == 0 || c > k) {
        return Err(Error::invalid(format!("class {bad} outside 1..={k}")));
    }
    let mut confusion = vec![vec![0u64; k]; k];
    for (&t, &p) in truth.iter().zip(pred) {
        confusion[t - 1][p - 1] += 1;
    }
    let mut zero_division = Vec::new();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = confusion[c][c];
            let support: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            if precision.is_none() || recall.is_none() {
                zero_division.push(c + 1);
            }
            let (precision, recall) = (precision.unwrap_or(0.0), recall.unwrap_or(0.0));
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let total: u64 = per_class.iter().map(|c| c.support).sum();
    let average = |weight: &dyn Fn(&ClassMetrics) -> f64| -> ClassMetrics {
        let wsum: f64 = per_class.iter().map(weight).sum();
        let avg = |f: &dyn Fn(&ClassMetrics) -> f64| {
            if wsum == 0.0 {
                0.0
            } else {
                per_class.iter().map(|c| weight(c) * f(c)).sum::<f64>() / wsum
            }
        };
        ClassMetrics {
            precision: avg(&|c| c.precision),
            recall: avg(&|c| c.recall),
            f1: avg(&|c| c.f1),
            support: total,
        }
    };
    let macro_avg = average(&|_| 1.0);
    let weighted_avg = average(&|c| c.support as f64);
    let trace: u64 = (0..k).map(|c| confusion[c][c]).sum();
    let confusion_normalized = confusion
        .iter()
        .map(|row| {
            let s: u64 = row.iter().sum();
            row.iter()
                .map(|&v| if s > 0 { v as f64 / s as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(ClassReport {
        scheme: format!("{k}"),
        ranges: Vec::new(),
        per_class,
        macro_avg,
        weighted_avg,
        accuracy: trace as f64 / total as f64,
        confusion,
        confusion_normalized,
        zero_division,
    })
}

/// Clamps a prediction into `[0, 1]` so it can be binned.
fn clamp_pred(p: f64) -> Result<f64> {
    if !p.is_finite() {
        return Err(Error::invalid(format!("non-finite prediction {p}")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Bins predictions and ground truth under `scheme` and reports per-class
/// precision, recall and f1 with macro and support-weighted averages.
///
/// Predictions outside `[0, 1]` are clamped before binning.
pub fn classification_report(preds: &[PredictionRecord], scheme: ClassScheme) -> Result<ClassReport> {
    let t = truths(preds)?;
    let truth = t.iter().map(|&v| scheme.bin_of(v)).collect::<Result<Vec<_>>>()?;
    let pred = preds
        .iter()
        .map(|p| scheme.bin_of(clamp_pred(p.ssim_pred)?))
        .collect::<Result<Vec<_>>>()?;
    let mut report = report_from_labels(&truth, &pred, scheme.arity())?;
    if !report.zero_division.is_empty() {
        log::warn!(
            "zero division for classes {:?}; their precision/recall are reported as 0",
            report.zero_division
        );
    }
    report.scheme = scheme.to_string();
    report.ranges = scheme.class_ranges().iter().map(|r| r.to_string()).collect();
    Ok(report)
}

/// Percentage of rows whose prediction falls inside the clinical SSIM range
/// of the expert's class.
pub fn agreement_rate(preds: &[PredictionRecord]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::invalid("agreement over zero rows"));
    }
    let mut agree = 0usize;
    for p in preds {
        let class = p
            .subjective_class
            .ok_or_else(|| Error::invalid(format!("row '{}' has no subjective class", p.id)))?;
        if !(1..=3).contains(&class) {
            return Err(Error::invalid(format!("subjective class {class} outside 1..=3")));
        }
        if ClassScheme::Clinical.bin_of(clamp_pred(p.ssim_pred)?)? == class {
            agree += 1;
        }
    }
    Ok(100.0 * agree as f64 / preds.len() as f64)
}
