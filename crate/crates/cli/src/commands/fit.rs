//! `fit`: posterior-mode model search on a CSV dataset.

use std::path::PathBuf;

use clap::Args;
use hyperpmom::optimize::BfgsOptions;
use hyperpmom::search::run_search_with;
use hyperpmom::{Algorithm, Dataset, HyperPmomConfig, InitialModel, ModelIndex, ModelScorer, SearchConfig};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{write_json, Outcome};
use crate::config::{layered, parse_index_list};
use crate::error::{CliError, Result};
use crate::table;

layered! {
    #[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
    #[serde(rename_all = "kebab-case", deny_unknown_fields)]
    pub struct FitArgs {
        /// Combined CSV with columns y,x1..xp
        #[arg(long, conflicts_with_all = ["design", "response"])]
        pub data: Option<PathBuf>,
        /// Design CSV with columns x1..xp (use with --response)
        #[arg(long, requires = "response")]
        pub design: Option<PathBuf>,
        /// Response CSV with the single column y
        #[arg(long, requires = "design")]
        pub response: Option<PathBuf>,
        /// Selection JSON output; stdout when omitted
        #[arg(long)]
        pub out: Option<PathBuf>,
        /// pMOM order [default: 1]
        #[arg(long)]
        pub r: Option<u32>,
        /// Inverse-Gamma shape [default: 1]
        #[arg(long)]
        pub lambda1: Option<f64>,
        /// Inverse-Gamma scale [default: 100·n^(-1/3)·p^(1.334)]
        #[arg(long)]
        pub lambda2: Option<f64>,
        /// Largest model size with prior mass [default: min(p, 4⌈√(n/ln p)⌉)]
        #[arg(long)]
        pub max_model_size: Option<usize>,
        /// Add an unpenalized intercept [default: false]
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        pub intercept: Option<bool>,
        /// sss or rsss [default: rsss]
        #[arg(long)]
        pub algorithm: Option<String>,
        /// Visited states N, including the start [default: 100]
        #[arg(long)]
        pub iterations: Option<usize>,
        /// Screened additions per step (rsss) [default: 10]
        #[arg(long)]
        pub k1: Option<usize>,
        /// Random additions per step (rsss) [default: 10]
        #[arg(long)]
        pub k2: Option<usize>,
        #[arg(long)]
        pub seed: Option<u64>,
        /// random-N, "empty", or a comma-separated 1-based index list [default: random-3]
        #[arg(long)]
        pub initial: Option<String>,
        /// BFGS iteration cap per model [default: 500]
        #[arg(long)]
        pub max_iter: Option<usize>,
        /// Include every visited state in the output [default: false]
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        pub full_trace: Option<bool>,
    }
}

impl FitArgs {
    /// Data-independent defaults; `lambda2` and `max-model-size` are filled
    /// in once the data dimensions are known.
    pub fn defaults() -> Self {
        Self {
            r: Some(1),
            lambda1: Some(1.0),
            intercept: Some(false),
            algorithm: Some("rsss".into()),
            iterations: Some(100),
            k1: Some(10),
            k2: Some(10),
            seed: Some(1),
            initial: Some("random-3".into()),
            max_iter: Some(500),
            full_trace: Some(false),
            ..Default::default()
        }
    }
}

/// Settings echoed into the selection file (paths excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSettings {
    pub r: u32,
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_model_size: usize,
    pub intercept: bool,
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub k1: usize,
    pub k2: usize,
    pub seed: u64,
    pub initial: String,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisitedOut {
    pub iteration: usize,
    /// 1-based.
    pub model: Vec<usize>,
    pub log_posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSummary {
    pub algorithm: Algorithm,
    pub states_visited: usize,
    pub models_scored: usize,
    pub models_scored_before_best: usize,
    pub cache_hits: usize,
    pub numerical_failures: usize,
    /// 1-based model of the last visited state.
    pub final_model: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visited: Option<Vec<VisitedOut>>,
}

/// Contents of the selection JSON written by `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    /// 1-based.
    pub selected_indices: Vec<usize>,
    /// Coefficients on the standardized scale, aligned with `selected_indices`.
    pub beta_hat: Vec<f64>,
    pub intercept: Option<f64>,
    pub log_marginal: f64,
    pub log_posterior: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_inf_norm: f64,
    pub n: usize,
    pub p: usize,
    /// Standardization applied to the training columns; evaluation maps
    /// test covariates through the same transform.
    pub column_means: Vec<f64>,
    pub column_sds: Vec<f64>,
    pub trace: TraceSummary,
    pub config: FitSettings,
}

impl Selection {
    pub fn model(&self) -> Result<ModelIndex> {
        if self.selected_indices.iter().any(|&j| j == 0 || j > self.p) {
            return Err(CliError::InvalidInput(format!(
                "selected indices {:?} are outside 1..={}",
                self.selected_indices, self.p
            )));
        }
        if self.beta_hat.len() != self.selected_indices.len() {
            return Err(CliError::InvalidInput(format!(
                "{} coefficients for {} selected indices",
                self.beta_hat.len(),
                self.selected_indices.len()
            )));
        }
        Ok(ModelIndex::new(self.selected_indices.iter().map(|j| j - 1).collect())?)
    }
}

/// Raw design and response from either input form.
pub fn load_data(args: &FitArgs) -> Result<(DMatrix<f64>, Vec<f64>)> {
    match (&args.data, &args.design, &args.response) {
        (Some(data), None, None) => table::read_combined(data),
        (None, Some(design), Some(response)) => {
            let x = table::read_design(design)?;
            let y = table::read_response(response)?;
            if x.nrows() != y.len() {
                return Err(CliError::InvalidInput(format!(
                    "{} has {} rows but {} has {}",
                    design.display(),
                    x.nrows(),
                    response.display(),
                    y.len()
                )));
            }
            Ok((x, y))
        }
        (None, None, None) => Err(CliError::InvalidInput(
            "fit needs --data, or --design together with --response".into(),
        )),
        _ => Err(CliError::InvalidInput(
            "use either --data or --design with --response, not a mix".into(),
        )),
    }
}

fn parse_initial(text: &str, p: usize) -> Result<InitialModel> {
    let t = text.trim();
    if let Some(size) = t.strip_prefix("random-") {
        let size = size
            .parse()
            .map_err(|_| CliError::InvalidInput(format!("--initial: bad random size in '{t}'")))?;
        return Ok(InitialModel::Random(size));
    }
    if t.eq_ignore_ascii_case("empty") {
        return Ok(InitialModel::Fixed(ModelIndex::empty()));
    }
    let k = ModelIndex::new(parse_index_list(t, "--initial")?)?;
    k.check_within(p)?;
    Ok(InitialModel::Fixed(k))
}

fn settings(args: &FitArgs, n: usize, p: usize) -> Result<FitSettings> {
    let defaults = HyperPmomConfig::defaults_for(n, p);
    Ok(FitSettings {
        r: args.r.unwrap_or(1),
        lambda1: args.lambda1.unwrap_or(1.0),
        lambda2: args.lambda2.unwrap_or(defaults.lambda2),
        max_model_size: args.max_model_size.unwrap_or(defaults.max_model_size),
        intercept: args.intercept.unwrap_or(false),
        algorithm: args.algorithm.as_deref().unwrap_or("rsss").parse()?,
        iterations: args.iterations.unwrap_or(100),
        k1: args.k1.unwrap_or(10),
        k2: args.k2.unwrap_or(10),
        seed: args.seed.unwrap_or(1),
        initial: args.initial.clone().unwrap_or_else(|| "random-3".into()),
        max_iter: args.max_iter.unwrap_or(500),
    })
}

/// Fills the data-dependent defaults into `args`.
pub fn with_data_defaults(mut args: FitArgs, n: usize, p: usize) -> FitArgs {
    let d = HyperPmomConfig::defaults_for(n, p);
    args.lambda2 = args.lambda2.or(Some(d.lambda2));
    args.max_model_size = args.max_model_size.or(Some(d.max_model_size));
    args
}

/// Runs the search on an already standardized dataset.
pub fn fit_dataset(data: &Dataset, settings: &FitSettings, full_trace: bool) -> Result<Selection> {
    let prior = HyperPmomConfig {
        r: settings.r,
        lambda1: settings.lambda1,
        lambda2: settings.lambda2,
        max_model_size: settings.max_model_size,
        intercept: settings.intercept,
        ..HyperPmomConfig::defaults_for(data.n(), data.p())
    };
    prior.validate(data.p())?;
    if settings.max_iter == 0 {
        return Err(CliError::InvalidInput("--max-iter must be at least 1".into()));
    }
    let search = SearchConfig {
        n_iterations: settings.iterations,
        k1: settings.k1,
        k2: settings.k2,
        seed: settings.seed,
        algorithm: settings.algorithm,
        initial_model: parse_initial(&settings.initial, data.p())?,
    };
    let bfgs = BfgsOptions { max_iter: settings.max_iter, ..Default::default() };
    let scorer = ModelScorer::logistic(data, &prior).with_bfgs(bfgs);
    let trace = run_search_with(&scorer, &search)?;

    let best = &trace.best;
    let numbers = [best.log_laplace_marginal, trace.best_log_posterior, best.grad_inf_norm];
    if numbers.iter().chain(&best.beta_hat).any(|v| !v.is_finite()) || best.intercept.is_some_and(|v| !v.is_finite()) {
        return Err(CliError::Numerical(format!("non-finite estimate for model {}", best.k)));
    }
    let visited = full_trace.then(|| {
        trace
            .visited
            .iter()
            .map(|v| VisitedOut { iteration: v.iteration, model: v.model.one_based(), log_posterior: v.log_posterior })
            .collect()
    });
    Ok(Selection {
        selected_indices: best.k.one_based(),
        beta_hat: best.beta_hat.clone(),
        intercept: best.intercept,
        log_marginal: best.log_laplace_marginal,
        log_posterior: trace.best_log_posterior,
        converged: best.converged,
        iterations: best.iterations,
        grad_inf_norm: best.grad_inf_norm,
        n: data.n(),
        p: data.p(),
        column_means: data.column_means().to_vec(),
        column_sds: data.column_sds().to_vec(),
        trace: TraceSummary {
            algorithm: trace.algorithm,
            states_visited: trace.visited.len(),
            models_scored: trace.cache_misses,
            models_scored_before_best: trace.models_scored_before_best,
            cache_hits: trace.cache_hits,
            numerical_failures: trace.numerical_failures,
            final_model: trace.visited.last().map(|v| v.model.one_based()).unwrap_or_default(),
            visited,
        },
        config: settings.clone(),
    })
}

/// Loads, standardizes and fits; the caller has already layered `args`.
pub fn fit(args: &FitArgs) -> Result<Selection> {
    let (x, y) = load_data(args)?;
    let (n, p) = x.shape();
    let data = Dataset::standardize(x, &y)?;
    let settings = settings(args, n, p)?;
    fit_dataset(&data, &settings, args.full_trace.unwrap_or(false))
}

pub fn run(args: &FitArgs) -> Result<Outcome> {
    let selection = fit(args)?;
    write_json(args.out.as_deref(), &selection)?;
    if !selection.converged {
        eprintln!(
            "warning: mode optimization for the selected model stopped after {} iterations without converging",
            selection.iterations
        );
        return Ok(Outcome::NotConverged);
    }
    Ok(Outcome::Done)
}

/// Dimensions of the input, for `--print-config`.
pub fn data_shape(args: &FitArgs) -> Result<(usize, usize)> {
    let (x, _) = load_data(args)?;
    Ok(x.shape())
}
