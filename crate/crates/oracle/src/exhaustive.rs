//! Posterior mode by scoring every admissible model.

use std::cmp::Ordering;

use hyperpmom::laplace::ModelScorer;
use hyperpmom::{Dataset, HyperPmomConfig, ModelIndex, ScoredModel};
use rayon::prelude::*;

use crate::{OracleError, Result};

/// Largest `p` accepted for enumeration.
pub const MAX_ENUMERATION_P: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveMode {
    pub best: ScoredModel,
    pub log_posterior: f64,
    pub models_scored: usize,
    /// Models whose Laplace evidence could not be computed.
    pub failures: usize,
}

/// Preference order: higher posterior, then smaller model, then
/// lexicographically smaller index list.
fn better(a: &(f64, ModelIndex), b: &(f64, ModelIndex)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.1.len(), a.1.as_slice()) < (b.1.len(), b.1.as_slice()),
    }
}

/// Scores every `k` with `|k| ≤ min(max_size, m_n)` and returns the argmax.
pub fn exhaustive_mode(data: &Dataset, cfg: &HyperPmomConfig, max_size: usize) -> Result<ExhaustiveMode> {
    let p = data.p();
    if p > MAX_ENUMERATION_P {
        return Err(OracleError::Refused(format!(
            "enumeration over p = {p} covariates exceeds the budget of {MAX_ENUMERATION_P}"
        )));
    }
    let cap = max_size.min(cfg.max_model_size);
    let models: Vec<ModelIndex> = (0u32..1 << p)
        .filter(|mask| mask.count_ones() as usize <= cap)
        .map(|mask| {
            ModelIndex::new((0..p).filter(|j| mask >> j & 1 == 1).collect()).expect("bits are distinct")
        })
        .collect();
    let scorer = ModelScorer::logistic(data, cfg);
    let scored: Vec<Option<(f64, ScoredModel)>> =
        models.par_iter().map(|k| scorer.log_posterior(k).ok().flatten()).collect();

    let failures = scored.iter().filter(|s| s.is_none()).count();
    let mut best: Option<(f64, ScoredModel)> = None;
    for (lp, sm) in scored.iter().flatten() {
        let replace = match &best {
            None => true,
            Some((blp, bsm)) => better(&(*lp, sm.k.clone()), &(*blp, bsm.k.clone())),
        };
        if replace {
            best = Some((*lp, sm.clone()));
        }
    }
    let (log_posterior, best) =
        best.ok_or_else(|| OracleError::Refused("no model could be scored".into()))?;
    if scored.iter().flatten().any(|(lp, _)| *lp > log_posterior) {
        return Err(hyperpmom::Error::Internal("enumeration argmax is not maximal".into()).into());
    }
    Ok(ExhaustiveMode { best, log_posterior, models_scored: models.len(), failures })
}
