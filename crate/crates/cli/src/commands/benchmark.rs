//! `benchmark`: search effort of SSS and RSSS over a grid of `p`.
//!
//! For each `p` and replicate `r` (1-based) a dataset is drawn with seed
//! `seed + r − 1` and both algorithms are run from the same seeded start.
//! Output CSV columns:
//!
//! ```text
//! p,algorithm,replicates,mean_models_scored_before_best,mean_models_scored,modes_matching_sss
//! ```

use std::path::PathBuf;

use clap::Args;
use hyperpmom::{generate, run_search, Algorithm, Covariance, HyperPmomConfig, ModelIndex, SearchConfig, SimDesign, Signal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Outcome;
use crate::config::{layered, parse_index_list};
use crate::error::{CliError, Result};
use crate::table;

layered! {
    #[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
    #[serde(rename_all = "kebab-case", deny_unknown_fields)]
    pub struct BenchmarkArgs {
        /// Comma-separated covariate counts [default: 100,200,300,400,500]
        #[arg(long)]
        pub p_grid: Option<String>,
        /// Training rows [default: 100]
        #[arg(long)]
        pub n: Option<usize>,
        /// weak (β = 1) or moderate (β = 2) [default: weak]
        #[arg(long)]
        pub signal: Option<String>,
        /// Comma-separated 1-based true support [default: 1,2,3]
        #[arg(long)]
        pub support: Option<String>,
        /// Replicates per grid point [default: 10]
        #[arg(long)]
        pub replicates: Option<usize>,
        /// Visited states per search [default: 100]
        #[arg(long)]
        pub iterations: Option<usize>,
        #[arg(long)]
        pub k1: Option<usize>,
        #[arg(long)]
        pub k2: Option<usize>,
        #[arg(long)]
        pub seed: Option<u64>,
        /// CSV output; stdout when omitted
        #[arg(long)]
        pub out: Option<PathBuf>,
    }
}

impl BenchmarkArgs {
    pub fn defaults() -> Self {
        Self {
            p_grid: Some("100,200,300,400,500".into()),
            n: Some(100),
            signal: Some("weak".into()),
            support: Some("1,2,3".into()),
            replicates: Some(10),
            iterations: Some(100),
            k1: Some(10),
            k2: Some(10),
            seed: Some(1),
            out: None,
        }
    }
}

/// Effort of one search.
#[derive(Debug, Clone, PartialEq)]
struct Effort {
    before_best: usize,
    scored: usize,
    best: ModelIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub p: usize,
    pub algorithm: Algorithm,
    pub replicates: usize,
    pub mean_models_scored_before_best: f64,
    pub mean_models_scored: f64,
    pub modes_matching_sss: usize,
}

fn parse_grid(text: &str) -> Result<Vec<usize>> {
    let grid: Vec<usize> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|p| *p >= 1)
                .ok_or_else(|| CliError::InvalidInput(format!("--p-grid: '{}' is not a positive integer", t.trim())))
        })
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        return Err(CliError::InvalidInput("--p-grid is empty".into()));
    }
    Ok(grid)
}

fn replicate(design: &SimDesign, search: &SearchConfig) -> Result<[Effort; 2]> {
    let sim = generate(design)?;
    let prior = HyperPmomConfig::defaults_for(sim.train.n(), sim.train.p());
    let run = |algorithm| -> Result<Effort> {
        let trace = run_search(&sim.train, &prior, &SearchConfig { algorithm, ..search.clone() })?;
        Ok(Effort { before_best: trace.models_scored_before_best, scored: trace.cache_misses, best: trace.best.k })
    };
    Ok([run(Algorithm::Sss)?, run(Algorithm::Rsss)?])
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<Vec<BenchmarkRow>> {
    let grid = parse_grid(args.p_grid.as_deref().unwrap_or("100"))?;
    let signal: Signal = args.signal.as_deref().unwrap_or("weak").parse()?;
    let support = ModelIndex::new(parse_index_list(args.support.as_deref().unwrap_or("1,2,3"), "--support")?)?;
    let replicates = args.replicates.unwrap_or(10);
    if replicates == 0 {
        return Err(CliError::InvalidInput("--replicates must be at least 1".into()));
    }
    let seed = args.seed.unwrap_or(1);
    let base_search = SearchConfig {
        n_iterations: args.iterations.unwrap_or(100),
        k1: args.k1.unwrap_or(10),
        k2: args.k2.unwrap_or(10),
        ..Default::default()
    };
    let mut designs = Vec::new();
    for &p in &grid {
        for r in 0..replicates {
            let design = SimDesign {
                n: args.n.unwrap_or(100),
                p,
                n_test: 1,
                signal,
                covariance: Covariance::Isotropic,
                true_support: support.clone(),
                seed: seed.wrapping_add(r as u64),
            };
            design.validate()?;
            designs.push(design);
        }
    }
    let efforts: Vec<Result<[Effort; 2]>> = designs
        .par_iter()
        .map(|d| replicate(d, &SearchConfig { seed: d.seed, ..base_search.clone() }))
        .collect();
    let efforts: Vec<[Effort; 2]> = efforts.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(2 * grid.len());
    for (g, &p) in grid.iter().enumerate() {
        let chunk = &efforts[g * replicates..(g + 1) * replicates];
        for (a, algorithm) in [Algorithm::Sss, Algorithm::Rsss].into_iter().enumerate() {
            let mean = |f: fn(&Effort) -> usize| chunk.iter().map(|e| f(&e[a]) as f64).sum::<f64>() / replicates as f64;
            rows.push(BenchmarkRow {
                p,
                algorithm,
                replicates,
                mean_models_scored_before_best: mean(|e| e.before_best),
                mean_models_scored: mean(|e| e.scored),
                modes_matching_sss: chunk.iter().filter(|e| e[a].best == e[0].best).count(),
            });
        }
    }
    Ok(rows)
}

pub const HEADERS: [&str; 6] = [
    "p",
    "algorithm",
    "replicates",
    "mean_models_scored_before_best",
    "mean_models_scored",
    "modes_matching_sss",
];

pub fn render(rows: &[BenchmarkRow]) -> String {
    let mut text = HEADERS.join(",");
    text.push('\n');
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.p, r.algorithm, r.replicates, r.mean_models_scored_before_best, r.mean_models_scored, r.modes_matching_sss
        ));
    }
    text
}

pub fn run(args: &BenchmarkArgs) -> Result<Outcome> {
    let rows = benchmark(args)?;
    super::write_text(args.out.as_deref(), &render(&rows))?;
    Ok(Outcome::Done)
}

/// Parses a benchmark CSV back with the shared table reader.
pub fn read_rows(path: &std::path::Path) -> Result<Vec<BenchmarkRow>> {
    let t = table::read_table(path)?;
    if t.headers != HEADERS {
        return Err(CliError::parse(path, format!("expected header {}", HEADERS.join(","))));
    }
    t.rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let bad = |col: &str| CliError::parse(path, format!("row {}, column {col}: cannot parse", i + 1));
            Ok(BenchmarkRow {
                p: row[0].parse().map_err(|_| bad("p"))?,
                algorithm: row[1].parse().map_err(|_| bad("algorithm"))?,
                replicates: row[2].parse().map_err(|_| bad("replicates"))?,
                mean_models_scored_before_best: row[3].parse().map_err(|_| bad("mean_models_scored_before_best"))?,
                mean_models_scored: row[4].parse().map_err(|_| bad("mean_models_scored"))?,
                modes_matching_sss: row[5].parse().map_err(|_| bad("modes_matching_sss"))?,
            })
        })
        .collect()
}
