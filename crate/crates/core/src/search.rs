//! Shotgun stochastic search over the model space.
//!
//! Each iteration scores every neighbour of the current model in three
//! classes (additions `Γ⁺`, deletions `Γ⁻`, swaps `Γ⁰`), draws one model per
//! class with probability proportional to its unnormalized posterior, and
//! then draws the next state among the three winners the same way. The
//! reduced variant restricts additions (and therefore swaps) to `K₁`
//! top-correlated covariates plus `K₂` random ones.

use std::collections::{HashMap, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModelIndex};
use crate::error::{invalid_arg, Error, Result};
use crate::laplace::{ModelScorer, ScoredModel};
use crate::prior::{log_model_prior, HyperPmomConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sss,
    Rsss,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sss" => Ok(Self::Sss),
            "rsss" => Ok(Self::Rsss),
            other => Err(invalid_arg(format!("unknown algorithm '{other}' (expected sss or rsss)"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sss => "sss",
            Self::Rsss => "rsss",
        })
    }
}

/// Starting model of a search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialModel {
    /// This many distinct covariates drawn uniformly (capped at `p` and `m_n`).
    Random(usize),
    Fixed(ModelIndex),
}

impl Default for InitialModel {
    fn default() -> Self {
        Self::Random(3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Number of visited states `N`, including the initial one.
    pub n_iterations: usize,
    /// Top-correlation additions kept by the reduced neighbourhood.
    pub k1: usize,
    /// Random additions kept by the reduced neighbourhood.
    pub k2: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub initial_model: InitialModel,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_iterations: 100,
            k1: 10,
            k2: 10,
            seed: 0,
            algorithm: Algorithm::Rsss,
            initial_model: InitialModel::Random(3),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iterations < 1 {
            return Err(invalid_arg("the search needs at least one iteration"));
        }
        if self.algorithm == Algorithm::Rsss && self.k1 + self.k2 == 0 {
            return Err(invalid_arg("reduced search needs k1 + k2 >= 1"));
        }
        Ok(())
    }
}

/// The three neighbour classes of a model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Neighborhood {
    pub plus: Vec<ModelIndex>,
    pub minus: Vec<ModelIndex>,
    pub zero: Vec<ModelIndex>,
}

impl Neighborhood {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.plus.len(), self.minus.len(), self.zero.len())
    }

    fn from_additions(k: &ModelIndex, additions: &[usize]) -> Self {
        let plus = additions.iter().map(|&j| k.with(j)).collect();
        let minus = k.iter().map(|j| k.without(j)).collect();
        let zero = k
            .iter()
            .flat_map(|j| additions.iter().map(move |&l| k.swap(j, l)))
            .collect();
        Self { plus, minus, zero }
    }
}

/// Full neighbourhood: all single additions, deletions and swaps.
pub fn neighborhood(k: &ModelIndex, p: usize) -> Neighborhood {
    let additions: Vec<usize> = (0..p).filter(|&j| !k.contains(j)).collect();
    Neighborhood::from_additions(k, &additions)
}

/// Covariates ranked by decreasing absolute correlation with the response.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationScreen {
    ranking: Vec<usize>,
}

impl CorrelationScreen {
    pub fn new(data: &Dataset) -> Self {
        let corr = data.abs_response_correlations();
        let mut ranking: Vec<usize> = (0..corr.len()).collect();
        // Stable sort keeps lower indices first among ties.
        ranking.sort_by(|&a, &b| corr[b].total_cmp(&corr[a]));
        Self { ranking }
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    /// The `k1` highest-ranked non-members of `k`, then `k2` further
    /// non-members drawn uniformly without replacement. Sorted ascending.
    pub fn candidates<R: Rng + ?Sized>(&self, k: &ModelIndex, k1: usize, k2: usize, rng: &mut R) -> Vec<usize> {
        let mut chosen: Vec<usize> = self.ranking.iter().copied().filter(|&j| !k.contains(j)).take(k1).collect();
        let taken: HashSet<usize> = chosen.iter().copied().collect();
        let mut pool: Vec<usize> = (0..self.ranking.len())
            .filter(|&j| !k.contains(j) && !taken.contains(&j))
            .collect();
        if pool.len() <= k2 {
            chosen.append(&mut pool);
        } else {
            chosen.extend(sample(rng, pool.len(), k2).into_iter().map(|i| pool[i]));
        }
        chosen.sort_unstable();
        chosen
    }
}

/// Reduced neighbourhood built from screened candidate additions.
pub fn reduced_neighborhood<R: Rng + ?Sized>(
    k: &ModelIndex,
    screen: &CorrelationScreen,
    k1: usize,
    k2: usize,
    rng: &mut R,
) -> Neighborhood {
    let additions = screen.candidates(k, k1, k2, rng);
    Neighborhood::from_additions(k, &additions)
}

/// Draws an index with probability proportional to `exp(log_weights)`.
///
/// Weights are exponentiated after subtracting their maximum. Entries equal
/// to `-inf` have probability zero; `None` when nothing has positive mass.
pub fn sample_log_weights<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Option<usize> {
    let max = log_weights.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let weights: Vec<f64> = log_weights
        .iter()
        .map(|v| if v.is_finite() { (v - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            acc += w;
            last = Some(i);
            if u < acc {
                return Some(i);
            }
        }
    }
    last
}

/// One visited state of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitedState {
    pub iteration: usize,
    pub model: ModelIndex,
    pub log_posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub algorithm: Algorithm,
    pub visited: Vec<VisitedState>,
    /// Highest-posterior model among everything scored.
    pub best: ScoredModel,
    pub best_log_posterior: f64,
    /// Distinct models scored up to and including the first scoring of `best`.
    pub models_scored_before_best: usize,
    pub cache_hits: usize,
    /// Distinct models scored.
    pub cache_misses: usize,
    /// Models whose Laplace evidence could not be computed; they get zero weight.
    pub numerical_failures: usize,
}

type CacheEntry = Option<(f64, ScoredModel)>;

struct SearchState<'s, 'a> {
    scorer: &'s ModelScorer<'a>,
    cache: HashMap<ModelIndex, CacheEntry>,
    best: Option<(f64, ScoredModel)>,
    models_scored_before_best: usize,
    hits: usize,
    misses: usize,
    failures: usize,
}

impl<'s, 'a> SearchState<'s, 'a> {
    /// Scores the given models (memoized) and returns their log posteriors,
    /// `-inf` for excluded or failed models. Uncached models are scored in
    /// parallel; bookkeeping follows the input order.
    fn score(&mut self, models: &[&ModelIndex]) -> Vec<f64> {
        let mut pending: Vec<&ModelIndex> = Vec::new();
        let mut seen = HashSet::new();
        for &m in models {
            if self.cache.contains_key(m) || !seen.insert(m) {
                continue;
            }
            pending.push(m);
        }
        let scorer = self.scorer;
        let results: Vec<CacheEntry> = pending
            .par_iter()
            .map(|m| scorer.log_posterior(m).ok().flatten())
            .collect();
        for (m, entry) in pending.iter().zip(results) {
            self.misses += 1;
            match &entry {
                Some((lp, sm)) => {
                    if self.best.as_ref().is_none_or(|(b, _)| *lp > *b) {
                        self.best = Some((*lp, sm.clone()));
                        self.models_scored_before_best = self.misses;
                    }
                }
                None => self.failures += 1,
            }
            self.cache.insert((*m).clone(), entry);
        }
        self.hits += models.len() - pending.len();
        models
            .iter()
            .map(|m| self.cache[*m].as_ref().map_or(f64::NEG_INFINITY, |(lp, _)| *lp))
            .collect()
    }
}

fn initial_model<R: Rng + ?Sized>(init: &InitialModel, p: usize, cap: usize, rng: &mut R) -> Result<ModelIndex> {
    match init {
        InitialModel::Random(size) => {
            let size = (*size).min(p).min(cap);
            ModelIndex::new(sample(rng, p, size).into_vec())
        }
        InitialModel::Fixed(k) => {
            k.check_within(p)?;
            if k.len() > cap {
                return Err(invalid_arg(format!("initial model {k} exceeds the size cap {cap}")));
            }
            Ok(k.clone())
        }
    }
}

/// Runs the configured search with the logistic likelihood.
pub fn run_search(data: &Dataset, prior: &HyperPmomConfig, cfg: &SearchConfig) -> Result<SearchTrace> {
    run_search_with(&ModelScorer::logistic(data, prior), cfg)
}

/// Runs the configured search with an arbitrary scorer.
pub fn run_search_with(scorer: &ModelScorer<'_>, cfg: &SearchConfig) -> Result<SearchTrace> {
    cfg.validate()?;
    let data = scorer.data();
    let prior = scorer.config();
    prior.validate(data.p())?;
    let p = data.p();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let screen = (cfg.algorithm == Algorithm::Rsss).then(|| CorrelationScreen::new(data));

    let mut state = SearchState {
        scorer,
        cache: HashMap::new(),
        best: None,
        models_scored_before_best: 0,
        hits: 0,
        misses: 0,
        failures: 0,
    };

    let mut current = initial_model(&cfg.initial_model, p, prior.max_model_size, &mut rng)?;
    let start_score = state.score(&[&current])[0];
    if !start_score.is_finite() {
        let reason = scorer.log_marginal(&current).err().map_or_else(String::new, |e| e.to_string());
        return Err(Error::NumericalFailure(format!("initial model {current} could not be scored: {reason}")));
    }
    let mut visited = vec![VisitedState { iteration: 0, model: current.clone(), log_posterior: start_score }];

    for iteration in 1..cfg.n_iterations {
        let nb = match &screen {
            Some(screen) => reduced_neighborhood(&current, screen, cfg.k1, cfg.k2, &mut rng),
            None => neighborhood(&current, p),
        };
        let classes: Vec<Vec<&ModelIndex>> = [&nb.plus, &nb.minus, &nb.zero]
            .into_iter()
            .map(|set| set.iter().filter(|m| log_model_prior(prior, m.len()).is_some()).collect())
            .collect();
        let all: Vec<&ModelIndex> = classes.iter().flatten().copied().collect();
        let scores = state.score(&all);

        let mut winners: Vec<(&ModelIndex, f64)> = Vec::with_capacity(3);
        let mut offset = 0;
        for class in &classes {
            let class_scores = &scores[offset..offset + class.len()];
            offset += class.len();
            if let Some(i) = sample_log_weights(class_scores, &mut rng) {
                winners.push((class[i], class_scores[i]));
            }
        }
        let winner_scores: Vec<f64> = winners.iter().map(|(_, s)| *s).collect();
        let Some(next) = sample_log_weights(&winner_scores, &mut rng) else {
            return Err(Error::Internal(format!("model {current} has no scorable neighbour")));
        };
        current = winners[next].0.clone();
        visited.push(VisitedState { iteration, model: current.clone(), log_posterior: winner_scores[next] });
    }

    let (best_log_posterior, best) = state.best.expect("initial model was scored");
    Ok(SearchTrace {
        algorithm: cfg.algorithm,
        visited,
        best,
        best_log_posterior,
        models_scored_before_best: state.models_scored_before_best,
        cache_hits: state.hits,
        cache_misses: state.misses,
        numerical_failures: state.failures,
    })
}
