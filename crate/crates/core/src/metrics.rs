//! Selection accuracy and prediction error.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModelIndex};
use crate::error::{invalid_arg, Result};
use crate::laplace::ScoredModel;
use crate::likelihood::sigmoid;

/// Confusion counts of a selected support against the truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `TP/(TP+FP)`; undefined when nothing was selected.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `TP/(TP+FN)`; undefined when the truth is empty.
    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `TN/(TN+FP)`; undefined when every covariate is truly active.
    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn mcc(&self) -> f64 {
        mcc(self.tp, self.tn, self.fp, self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn confusion(selected: &ModelIndex, truth: &ModelIndex, p: usize) -> Confusion {
    let tp = selected.iter().filter(|&j| truth.contains(j)).count();
    let fp = selected.len() - tp;
    let fn_ = truth.len() - tp;
    Confusion { tp, fp, fn_, tn: p - tp - fp - fn_ }
}

/// Matthews correlation coefficient; 0 when any marginal count is zero.
pub fn mcc(tp: usize, tn: usize, fp: usize, fn_: usize) -> f64 {
    let (tp, tn, fp, fn_) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if den == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / den.sqrt()
    }
}

/// Logistic probabilities `exp(xᵀβ)/(1+exp(xᵀβ))` from a dense coefficient vector.
pub fn predict_dense(data: &Dataset, beta: &[f64], intercept: f64) -> Result<Vec<f64>> {
    if beta.len() != data.p() {
        return Err(invalid_arg(format!(
            "coefficient vector has length {}, data has p = {}",
            beta.len(),
            data.p()
        )));
    }
    Ok(data
        .x()
        .row_iter()
        .map(|row| {
            let eta: f64 = row.iter().zip(beta).filter(|(_, b)| **b != 0.0).map(|(x, b)| x * b).sum();
            sigmoid(eta + intercept)
        })
        .collect())
}

/// Predictions of a fitted model, zero off its support.
pub fn predict(data: &Dataset, fitted: &ScoredModel) -> Result<Vec<f64>> {
    data.check_model(&fitted.k)?;
    let mut dense = vec![0.0; data.p()];
    for (c, j) in fitted.k.iter().enumerate() {
        dense[j] = fitted.beta_hat[c];
    }
    predict_dense(data, &dense, fitted.intercept.unwrap_or(0.0))
}

/// Mean squared prediction error.
pub fn mspe(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(invalid_arg(format!(
            "{} outcomes but {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(invalid_arg("no outcomes to score"));
    }
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Support of a dense coefficient vector: entries with `|β_j| > threshold`.
pub fn support_of(beta: &[f64], threshold: f64) -> ModelIndex {
    ModelIndex::new(
        beta.iter()
            .enumerate()
            .filter(|(_, b)| b.abs() > threshold)
            .map(|(j, _)| j)
            .collect(),
    )
    .expect("enumeration indices are distinct")
}

/// Per-replicate selection and prediction summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    #[serde(flatten)]
    pub confusion: Confusion,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub mcc: f64,
    pub mspe: Option<f64>,
}

impl SelectionReport {
    pub fn new(selected: &ModelIndex, truth: &ModelIndex, p: usize, mspe: Option<f64>) -> Self {
        let c = confusion(selected, truth, p);
        Self {
            confusion: c,
            precision: c.precision(),
            sensitivity: c.sensitivity(),
            specificity: c.specificity(),
            mcc: c.mcc(),
            mspe,
        }
    }

    /// Report for a fitted model, with MSPE on `test`.
    pub fn for_fit(fitted: &ScoredModel, truth: &ModelIndex, test: &Dataset) -> Result<Self> {
        let y_hat = predict(test, fitted)?;
        let err = mspe(test.y().as_slice(), &y_hat)?;
        Ok(Self::new(&fitted.k, truth, test.p(), Some(err)))
    }

    /// Report for an externally estimated dense coefficient vector.
    pub fn for_dense(beta: &[f64], threshold: f64, truth: &ModelIndex, test: &Dataset) -> Result<Self> {
        let y_hat = predict_dense(test, beta, 0.0)?;
        let err = mspe(test.y().as_slice(), &y_hat)?;
        Ok(Self::new(&support_of(beta, threshold), truth, test.p(), Some(err)))
    }
}

/// Column-wise mean over replicates, skipping undefined entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWithCount {
    pub mean: Option<f64>,
    pub defined: usize,
}

impl MeanWithCount {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let defined: Vec<f64> = values.into_iter().flatten().collect();
        let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        Self { mean, defined: defined.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub replicates: usize,
    pub precision: MeanWithCount,
    pub sensitivity: MeanWithCount,
    pub specificity: MeanWithCount,
    pub mcc: MeanWithCount,
    pub mspe: MeanWithCount,
}

pub fn summarize(reports: &[SelectionReport]) -> ReportSummary {
    ReportSummary {
        replicates: reports.len(),
        precision: MeanWithCount::of(reports.iter().map(|r| r.precision)),
        sensitivity: MeanWithCount::of(reports.iter().map(|r| r.sensitivity)),
        specificity: MeanWithCount::of(reports.iter().map(|r| r.specificity)),
        mcc: MeanWithCount::of(reports.iter().map(|r| Some(r.mcc))),
        mspe: MeanWithCount::of(reports.iter().map(|r| r.mspe)),
    }
}

/// `(false positive rate, true positive rate)` of thresholded probabilities,
/// one pair per threshold (`ŷ ≥ t` predicts 1).
pub fn roc_points(y: &[f64], y_hat: &[f64], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if y.len() != y_hat.len() {
        return Err(invalid_arg("outcome and prediction lengths differ"));
    }
    let positives = y.iter().filter(|v| **v == 1.0).count() as f64;
    let negatives = y.len() as f64 - positives;
    Ok(thresholds
        .iter()
        .map(|t| {
            let (mut tp, mut fp) = (0.0, 0.0);
            for (yi, pi) in y.iter().zip(y_hat) {
                if *pi >= *t {
                    if *yi == 1.0 {
                        tp += 1.0;
                    } else {
                        fp += 1.0;
                    }
                }
            }
            let fpr = if negatives > 0.0 { fp / negatives } else { 0.0 };
            let tpr = if positives > 0.0 { tp / positives } else { 0.0 };
            (fpr, tpr)
        })
        .collect())
}
