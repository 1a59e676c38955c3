//! `simulate`: seeded train/test replicates on disk.
//!
//! Layout under `--out`:
//!
//! ```text
//! rep_001/train.csv   y,x1..xp (training columns standardized)
//! rep_001/test.csv    y,x1..xp (test columns in training coordinates)
//! rep_001/truth.json
//! ```
//!
//! Replicate `r` (1-based) is drawn with seed `seed + r − 1`.

use std::path::{Path, PathBuf};

use clap::Args;
use hyperpmom::{generate, Covariance, ModelIndex, SimDesign, Signal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{write_json, Outcome};
use crate::config::{layered, parse_index_list};
use crate::error::{CliError, Result};
use crate::table::write_combined;

layered! {
    #[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
    #[serde(rename_all = "kebab-case", deny_unknown_fields)]
    pub struct SimulateArgs {
        /// Number of covariates [default: 100]
        #[arg(long)]
        pub p: Option<usize>,
        /// Training rows [default: 100]
        #[arg(long)]
        pub n: Option<usize>,
        /// Test rows [default: 50]
        #[arg(long)]
        pub n_test: Option<usize>,
        /// weak (β = 1) or moderate (β = 2) [default: moderate]
        #[arg(long)]
        pub signal: Option<String>,
        /// isotropic or ar [default: isotropic]
        #[arg(long)]
        pub covariance: Option<String>,
        /// AR(1) correlation, used with --covariance ar [default: 0.3]
        #[arg(long)]
        pub rho: Option<f64>,
        /// Comma-separated 1-based true support; empty for the null model [default: 1,2,3]
        #[arg(long)]
        pub support: Option<String>,
        /// Number of replicates [default: 1]
        #[arg(long)]
        pub replicates: Option<usize>,
        #[arg(long)]
        pub seed: Option<u64>,
        /// Output directory
        #[arg(long)]
        pub out: Option<PathBuf>,
    }
}

impl SimulateArgs {
    pub fn defaults() -> Self {
        Self {
            p: Some(100),
            n: Some(100),
            n_test: Some(50),
            signal: Some("moderate".into()),
            covariance: Some("isotropic".into()),
            rho: Some(0.3),
            support: Some("1,2,3".into()),
            replicates: Some(1),
            seed: Some(1),
            out: None,
        }
    }
}

/// Contents of `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub n: usize,
    pub n_test: usize,
    pub p: usize,
    pub signal: Signal,
    pub covariance: Covariance,
    pub seed: u64,
    /// 1-based.
    pub support: Vec<usize>,
    /// Dense `β₀`.
    pub coefficients: Vec<f64>,
}

impl Truth {
    pub fn support_index(&self) -> Result<ModelIndex> {
        if self.support.iter().any(|&j| j == 0 || j > self.p) {
            return Err(CliError::InvalidInput(format!(
                "truth support {:?} is outside 1..={}",
                self.support, self.p
            )));
        }
        Ok(ModelIndex::new(self.support.iter().map(|j| j - 1).collect())?)
    }
}

pub fn covariance_of(kind: &str, rho: f64) -> Result<Covariance> {
    match kind.to_ascii_lowercase().as_str() {
        "isotropic" | "identity" => Ok(Covariance::Isotropic),
        "ar" | "ar1" => Ok(Covariance::Ar { rho }),
        other => Err(CliError::InvalidInput(format!(
            "unknown covariance '{other}' (expected isotropic or ar)"
        ))),
    }
}

/// Resolved design of replicate 0; replicate `r` only changes the seed.
pub fn design_of(args: &SimulateArgs) -> Result<SimDesign> {
    let signal: Signal = args.signal.as_deref().unwrap_or("moderate").parse()?;
    let covariance = covariance_of(
        args.covariance.as_deref().unwrap_or("isotropic"),
        args.rho.unwrap_or(0.3),
    )?;
    let p = args.p.unwrap_or(100);
    let support = ModelIndex::new(parse_index_list(args.support.as_deref().unwrap_or(""), "--support")?)?;
    let design = SimDesign {
        n: args.n.unwrap_or(100),
        p,
        n_test: args.n_test.unwrap_or(50),
        signal,
        covariance,
        true_support: support,
        seed: args.seed.unwrap_or(1),
    };
    design.validate()?;
    Ok(design)
}

pub fn replicate_dir(out: &Path, r: usize, total: usize) -> PathBuf {
    let width = total.to_string().len().max(3);
    out.join(format!("rep_{:0width$}", r + 1))
}

fn write_replicate(design: &SimDesign, dir: &Path) -> Result<()> {
    let sim = generate(design)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_combined(&dir.join("train.csv"), sim.train.x(), sim.train.y().as_slice())?;
    write_combined(&dir.join("test.csv"), sim.test.x(), sim.test.y().as_slice())?;
    let truth = Truth {
        n: design.n,
        n_test: design.n_test,
        p: design.p,
        signal: design.signal,
        covariance: design.covariance,
        seed: design.seed,
        support: design.true_support.one_based(),
        coefficients: design.true_coefficients(),
    };
    write_json(Some(&dir.join("truth.json")), &truth)
}

pub fn run(args: &SimulateArgs) -> Result<Outcome> {
    let out = args
        .out
        .as_deref()
        .ok_or_else(|| CliError::InvalidInput("simulate needs an output directory (--out)".into()))?;
    let base = design_of(args)?;
    let replicates = args.replicates.unwrap_or(1);
    if replicates == 0 {
        return Err(CliError::InvalidInput("--replicates must be at least 1".into()));
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let results: Vec<Result<()>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let design = SimDesign { seed: base.seed.wrapping_add(r as u64), ..base.clone() };
            write_replicate(&design, &replicate_dir(out, r, replicates))
        })
        .collect();
    results.into_iter().collect::<Result<Vec<()>>>()?;
    Ok(Outcome::Done)
}
