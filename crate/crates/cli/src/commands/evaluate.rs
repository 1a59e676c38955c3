//! `evaluate`: selection and prediction metrics against a known truth.
//!
//! Two estimate sources share one code path:
//!
//! - a selection JSON from `fit` (coefficients on the standardized scale,
//!   test covariates mapped through the stored training transform);
//! - a dense coefficient CSV (`x1..xp`, one row) from any other method,
//!   applied to the test covariates as written, with support
//!   `{j : |β_j| > threshold}`.

use std::path::{Path, PathBuf};

use clap::Args;
use hyperpmom::metrics::{mspe, predict_dense, summarize, support_of, ReportSummary, SelectionReport};
use hyperpmom::{Dataset, ModelIndex};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::Selection;
use super::simulate::Truth;
use super::{read_json, write_json, Outcome};
use crate::config::layered;
use crate::error::{CliError, Result};
use crate::table;

layered! {
    #[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
    #[serde(rename_all = "kebab-case", deny_unknown_fields)]
    pub struct EvaluateArgs {
        /// Selection JSON written by `fit`
        #[arg(long, conflicts_with = "coefficients")]
        pub selection: Option<PathBuf>,
        /// Dense coefficient CSV (header x1..xp, one row)
        #[arg(long)]
        pub coefficients: Option<PathBuf>,
        /// truth.json written by `simulate`
        #[arg(long)]
        pub truth: Option<PathBuf>,
        /// Test CSV with columns y,x1..xp
        #[arg(long)]
        pub test: Option<PathBuf>,
        /// Directory of replicate folders (each with truth.json and test.csv)
        #[arg(long, conflicts_with_all = ["selection", "coefficients", "truth", "test"])]
        pub runs: Option<PathBuf>,
        /// Selection file name inside each replicate folder [default: selection.json]
        #[arg(long)]
        pub selection_name: Option<String>,
        /// Coefficient file name inside each replicate folder (switches to coefficient input)
        #[arg(long)]
        pub coefficients_name: Option<String>,
        /// Support threshold for coefficient input [default: 0]
        #[arg(long)]
        pub threshold: Option<f64>,
        /// Metrics JSON output; stdout when omitted
        #[arg(long)]
        pub out: Option<PathBuf>,
        /// Also write the metrics table as CSV
        #[arg(long)]
        pub csv: Option<PathBuf>,
    }
}

impl EvaluateArgs {
    pub fn defaults() -> Self {
        Self {
            selection_name: Some("selection.json".into()),
            threshold: Some(0.0),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Selection,
    Coefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateMetrics {
    pub replicate: String,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub mcc: f64,
    pub mspe: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// 1-based selected support.
    pub selected: Vec<usize>,
}

/// Contents of the metrics JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub p: usize,
    pub source: Source,
    pub replicates: Vec<ReplicateMetrics>,
    pub summary: ReportSummary,
}

/// Input files of one replicate.
#[derive(Debug, Clone)]
struct Job {
    label: String,
    estimate: PathBuf,
    truth: PathBuf,
    test: PathBuf,
}

fn check_p(what: &Path, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(CliError::InvalidInput(format!(
            "{} has p = {got} but the truth has p = {want}",
            what.display()
        )));
    }
    Ok(())
}

fn evaluate_job(job: &Job, source: Source, threshold: f64) -> Result<(SelectionReport, ModelIndex)> {
    // Everything is read and checked before any metric is computed.
    let truth: Truth = read_json(&job.truth)?;
    let support = truth.support_index()?;
    let (x, y): (DMatrix<f64>, Vec<f64>) = table::read_combined(&job.test)?;
    check_p(&job.test, x.ncols(), truth.p)?;
    let (selected, dense, intercept, test) = match source {
        Source::Selection => {
            let sel: Selection = read_json(&job.estimate)?;
            check_p(&job.estimate, sel.p, truth.p)?;
            let k = sel.model()?;
            let mut dense = vec![0.0; truth.p];
            for (c, j) in k.iter().enumerate() {
                dense[j] = sel.beta_hat[c];
            }
            let test = Dataset::with_transform(x, &y, sel.column_means.clone(), sel.column_sds.clone())?;
            (k, dense, sel.intercept.unwrap_or(0.0), test)
        }
        Source::Coefficients => {
            let beta = table::read_coefficients(&job.estimate)?;
            check_p(&job.estimate, beta.len(), truth.p)?;
            (support_of(&beta, threshold), beta, 0.0, Dataset::unscaled(x, &y)?)
        }
    };
    let y_hat = predict_dense(&test, &dense, intercept)?;
    let err = mspe(test.y().as_slice(), &y_hat)?;
    Ok((SelectionReport::new(&selected, &support, truth.p, Some(err)), selected))
}

fn jobs(args: &EvaluateArgs) -> Result<(Vec<Job>, Source)> {
    if let Some(runs) = &args.runs {
        let (name, source) = match &args.coefficients_name {
            Some(name) => (name.clone(), Source::Coefficients),
            None => (args.selection_name.clone().unwrap_or_else(|| "selection.json".into()), Source::Selection),
        };
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(runs)
            .map_err(|e| CliError::io(runs, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && p.join("truth.json").is_file())
            .collect();
        dirs.sort();
        if dirs.is_empty() {
            return Err(CliError::InvalidInput(format!(
                "{} contains no replicate folders with truth.json",
                runs.display()
            )));
        }
        let jobs = dirs
            .into_iter()
            .map(|d| Job {
                label: d.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                estimate: d.join(&name),
                truth: d.join("truth.json"),
                test: d.join("test.csv"),
            })
            .collect();
        return Ok((jobs, source));
    }
    let missing = |flag: &str| CliError::InvalidInput(format!("evaluate needs {flag} (or --runs)"));
    let truth = args.truth.clone().ok_or_else(|| missing("--truth"))?;
    let test = args.test.clone().ok_or_else(|| missing("--test"))?;
    let (estimate, source) = match (&args.selection, &args.coefficients) {
        (Some(s), None) => (s.clone(), Source::Selection),
        (None, Some(c)) => (c.clone(), Source::Coefficients),
        (Some(_), Some(_)) => {
            return Err(CliError::InvalidInput("give either --selection or --coefficients, not both".into()))
        }
        (None, None) => return Err(missing("--selection or --coefficients")),
    };
    Ok((vec![Job { label: "1".into(), estimate, truth, test }], source))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<MetricsReport> {
    let (jobs, source) = jobs(args)?;
    for job in &jobs {
        for path in [&job.estimate, &job.truth, &job.test] {
            if !path.is_file() {
                return Err(CliError::InvalidInput(format!("missing input file {}", path.display())));
            }
        }
    }
    let threshold = args.threshold.unwrap_or(0.0);
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(CliError::InvalidInput(format!("--threshold must be finite and non-negative, got {threshold}")));
    }
    let results: Vec<Result<(SelectionReport, ModelIndex)>> =
        jobs.par_iter().map(|job| evaluate_job(job, source, threshold)).collect();
    let results: Vec<(SelectionReport, ModelIndex)> = results.into_iter().collect::<Result<_>>()?;
    let p = results[0].0.confusion.total();
    if let Some((_, job)) = results.iter().zip(&jobs).find(|((r, _), _)| r.confusion.total() != p) {
        return Err(CliError::InvalidInput(format!("{} has a different p from the first replicate", job.truth.display())));
    }
    let reports: Vec<SelectionReport> = results.iter().map(|(r, _)| r.clone()).collect();
    let replicates = results
        .iter()
        .zip(&jobs)
        .map(|((r, k), job)| ReplicateMetrics {
            replicate: job.label.clone(),
            precision: r.precision,
            sensitivity: r.sensitivity,
            specificity: r.specificity,
            mcc: r.mcc,
            mspe: r.mspe,
            tp: r.confusion.tp,
            fp: r.confusion.fp,
            tn: r.confusion.tn,
            fn_: r.confusion.fn_,
            selected: k.one_based(),
        })
        .collect();
    Ok(MetricsReport { p, source, replicates, summary: summarize(&reports) })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

fn flag(v: Option<f64>) -> String {
    usize::from(v.is_some()).to_string()
}

/// Per-replicate rows followed by a `mean` row; `defined_*` columns count
/// the replicates each mean is taken over.
pub fn csv_rows(report: &MetricsReport) -> (Vec<String>, Vec<Vec<String>>) {
    let headers = [
        "replicate",
        "precision",
        "sensitivity",
        "specificity",
        "mcc",
        "mspe",
        "tp",
        "fp",
        "tn",
        "fn",
        "defined_precision",
        "defined_sensitivity",
        "defined_specificity",
        "defined_mcc",
        "defined_mspe",
    ]
    .map(String::from)
    .to_vec();
    let mut rows: Vec<Vec<String>> = report
        .replicates
        .iter()
        .map(|r| {
            vec![
                r.replicate.clone(),
                cell(r.precision),
                cell(r.sensitivity),
                cell(r.specificity),
                cell(Some(r.mcc)),
                cell(r.mspe),
                r.tp.to_string(),
                r.fp.to_string(),
                r.tn.to_string(),
                r.fn_.to_string(),
                flag(r.precision),
                flag(r.sensitivity),
                flag(r.specificity),
                "1".into(),
                flag(r.mspe),
            ]
        })
        .collect();
    let s = &report.summary;
    let cols = [s.precision, s.sensitivity, s.specificity, s.mcc, s.mspe];
    let mut mean = vec!["mean".to_owned()];
    mean.extend(cols.iter().map(|c| cell(c.mean)));
    mean.extend(std::iter::repeat_n(String::new(), 4));
    mean.extend(cols.iter().map(|c| c.defined.to_string()));
    rows.push(mean);
    (headers, rows)
}

pub fn run(args: &EvaluateArgs) -> Result<Outcome> {
    let report = evaluate(args)?;
    if let Some(path) = &args.csv {
        let (headers, rows) = csv_rows(&report);
        table::write_rows(path, &headers, &rows)?;
    }
    write_json(args.out.as_deref(), &report)?;
    Ok(Outcome::Done)
}
