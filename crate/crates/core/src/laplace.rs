//! Posterior modes of `f(β_k)` and Laplace-approximate model evidence
//!
//! ```text
//! log m_k(y) ≈ (|k|/2) log 2π + f(β̂_k) − ½ log det(−V(β̂_k))
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ModelIndex};
use crate::error::{invalid_arg, Error, Result};
use crate::likelihood::{weighted_gram, Likelihood, Logistic};
use crate::objective::ModelObjective;
use crate::optimize::{maximize, BfgsOptions, Termination};
use crate::prior::{log_model_prior, HyperPmomConfig};

/// Coordinates of the ridge start smaller than this are pushed out to it.
pub const MIN_START_MAGNITUDE: f64 = 0.05;

/// Diagnostics of one mode search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDiagnostics {
    pub iterations: usize,
    pub termination: Termination,
    pub grad_inf_norm: f64,
    /// Starting point handed to BFGS.
    pub start: Vec<f64>,
}

impl ModeDiagnostics {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

/// A model with its posterior mode and Laplace evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredModel {
    pub k: ModelIndex,
    /// `β̂_k`, aligned with `k`.
    pub beta_hat: Vec<f64>,
    /// Fitted intercept when the prior configuration includes one.
    pub intercept: Option<f64>,
    pub log_f_at_mode: f64,
    pub log_laplace_marginal: f64,
    /// `log det(−V(β̂_k))`.
    pub log_det_neg_hessian: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_inf_norm: f64,
}

/// Ridge-penalized likelihood fit used as the BFGS starting point.
///
/// Maximizes `L(θ) − ‖θ‖²/(2n)` by damped Newton steps, then moves every
/// sign-constrained coordinate at least [`MIN_START_MAGNITUDE`] away from
/// zero, keeping its sign (zero goes positive).
pub fn ridge_start(obj: &ModelObjective<'_>) -> DVector<f64> {
    let x = obj.design();
    let y = obj.response();
    let lik = obj.likelihood();
    let d = obj.dim();
    let penalty = 1.0 / y.len() as f64;
    let target = |theta: &DVector<f64>| lik.log_lik_eta(y, &(x * theta)) - 0.5 * penalty * theta.norm_squared();

    let mut theta = DVector::zeros(d);
    let mut current = target(&theta);
    for _ in 0..100 {
        let eta = x * &theta;
        let grad = x.tr_mul(&lik.eta_gradient(y, &eta)) - &theta * penalty;
        if grad.amax() < 1e-10 * (1.0 + current.abs()) {
            break;
        }
        let mut info = weighted_gram(x, &lik.eta_curvature(y, &eta));
        for i in 0..d {
            info[(i, i)] += penalty;
        }
        let dir = match Cholesky::new(info) {
            Some(ch) => ch.solve(&grad),
            None => grad.clone(),
        };
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            let trial = &theta + &dir * step;
            let value = target(&trial);
            if value.is_finite() && value >= current {
                theta = trial;
                current = value;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    for (i, constrained) in obj.sign_constrained().into_iter().enumerate() {
        if constrained && theta[i].abs() < MIN_START_MAGNITUDE {
            theta[i] = if theta[i] < 0.0 { -MIN_START_MAGNITUDE } else { MIN_START_MAGNITUDE };
        }
    }
    theta
}

fn inverse_curvature(obj: &ModelObjective<'_>, theta: &DVector<f64>) -> Option<DMatrix<f64>> {
    let neg_v = -obj.hessian(theta).ok()?;
    Cholesky::new(neg_v).map(|ch| ch.inverse())
}

/// Maximizes `f` over the orthant of the starting point.
///
/// The start is `init` when given (all sign-constrained entries nonzero),
/// otherwise [`ridge_start`].
pub fn find_mode(
    obj: &ModelObjective<'_>,
    init: Option<&DVector<f64>>,
    opts: &BfgsOptions,
) -> Result<(DVector<f64>, ModeDiagnostics)> {
    if obj.dim() == 0 {
        return Err(invalid_arg("the empty model has no coefficients to optimize"));
    }
    let start = match init {
        Some(v) => {
            if v.len() != obj.dim() {
                return Err(invalid_arg(format!(
                    "initial point has {} entries, expected {}",
                    v.len(),
                    obj.dim()
                )));
            }
            let constrained = obj.sign_constrained();
            if v.iter().zip(&constrained).any(|(b, c)| *c && *b == 0.0) {
                return Err(invalid_arg("initial coefficients must be nonzero"));
            }
            v.clone()
        }
        None => ridge_start(obj),
    };
    let constrained = obj.sign_constrained();
    let outcome = maximize(
        |theta| obj.value_and_gradient(theta).ok(),
        start.clone(),
        &constrained,
        inverse_curvature(obj, &start),
        opts,
    );
    if outcome.termination == Termination::InvalidStart {
        return Err(Error::NumericalFailure(format!(
            "objective is not finite at the starting point for model {}",
            obj.model()
        )));
    }
    let (x, gradient) = if outcome.converged() {
        newton_polish(obj, outcome.x, outcome.value, outcome.gradient, &constrained)
    } else {
        (outcome.x, outcome.gradient)
    };
    let diag = ModeDiagnostics {
        iterations: outcome.iterations,
        termination: outcome.termination,
        grad_inf_norm: gradient.amax(),
        start: start.iter().copied().collect(),
    };
    Ok((x, diag))
}

/// A few full Newton steps from a converged BFGS point, accepted only when
/// they stay in the orthant, do not decrease `f` and shrink the gradient.
fn newton_polish(
    obj: &ModelObjective<'_>,
    mut x: DVector<f64>,
    mut value: f64,
    mut gradient: DVector<f64>,
    constrained: &[bool],
) -> (DVector<f64>, DVector<f64>) {
    for _ in 0..3 {
        let Some(ch) = obj.hessian(&x).ok().and_then(|v| Cholesky::new(-v)) else {
            break;
        };
        let trial = &x + ch.solve(&gradient);
        let same_orthant = trial
            .iter()
            .zip(x.iter())
            .zip(constrained)
            .all(|((t, c), k)| !*k || t * c > 0.0);
        if !same_orthant {
            break;
        }
        match obj.value_and_gradient(&trial) {
            Ok((v, g)) if v.is_finite() && v >= value - 1e-12 * (1.0 + value.abs()) && g.amax() < gradient.amax() => {
                x = trial;
                value = v;
                gradient = g;
            }
            _ => break,
        }
    }
    (x, gradient)
}

/// Scores models under one dataset, prior and likelihood.
#[derive(Debug, Clone)]
pub struct ModelScorer<'a> {
    data: &'a Dataset,
    cfg: &'a HyperPmomConfig,
    likelihood: Arc<dyn Likelihood>,
    bfgs: BfgsOptions,
}

impl<'a> ModelScorer<'a> {
    pub fn new(data: &'a Dataset, cfg: &'a HyperPmomConfig, likelihood: Arc<dyn Likelihood>) -> Self {
        Self { data, cfg, likelihood, bfgs: BfgsOptions::default() }
    }

    pub fn logistic(data: &'a Dataset, cfg: &'a HyperPmomConfig) -> Self {
        Self::new(data, cfg, Arc::new(Logistic))
    }

    pub fn with_bfgs(mut self, bfgs: BfgsOptions) -> Self {
        self.bfgs = bfgs;
        self
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn config(&self) -> &'a HyperPmomConfig {
        self.cfg
    }

    pub fn likelihood(&self) -> &Arc<dyn Likelihood> {
        &self.likelihood
    }

    pub fn objective(&self, k: &ModelIndex) -> Result<ModelObjective<'a>> {
        ModelObjective::new(self.data, self.cfg, self.likelihood.clone(), k)
    }

    /// Laplace log marginal likelihood of `k`.
    pub fn log_marginal(&self, k: &ModelIndex) -> Result<ScoredModel> {
        self.log_marginal_from(k, None)
    }

    /// As [`Self::log_marginal`], starting the optimizer at `init`.
    pub fn log_marginal_from(&self, k: &ModelIndex, init: Option<&DVector<f64>>) -> Result<ScoredModel> {
        let obj = self.objective(k)?;
        if obj.dim() == 0 {
            let value = self.likelihood.null_log_lik(self.data.y());
            return Ok(ScoredModel {
                k: k.clone(),
                beta_hat: Vec::new(),
                intercept: None,
                log_f_at_mode: value,
                log_laplace_marginal: value,
                log_det_neg_hessian: 0.0,
                converged: true,
                iterations: 0,
                grad_inf_norm: 0.0,
            });
        }
        let (theta, diag) = find_mode(&obj, init, &self.bfgs)?;
        laplace_at(&obj, &theta, &diag)
    }

    /// `log π(k) + log m_k(y)`, or `None` for models outside the size cap.
    pub fn log_posterior(&self, k: &ModelIndex) -> Result<Option<(f64, ScoredModel)>> {
        let Some(prior) = log_model_prior(self.cfg, k.len()) else {
            return Ok(None);
        };
        let sm = self.log_marginal(k)?;
        Ok(Some((prior + sm.log_laplace_marginal, sm)))
    }
}

/// Evaluates the Laplace formula at a given mode estimate.
pub fn laplace_at(obj: &ModelObjective<'_>, theta: &DVector<f64>, diag: &ModeDiagnostics) -> Result<ScoredModel> {
    let value = obj.value(theta)?;
    let neg_v = -obj.hessian(theta)?;
    let chol = Cholesky::new(neg_v).ok_or_else(|| {
        Error::NumericalFailure(format!(
            "−V is not positive definite at the mode of model {}",
            obj.model()
        ))
    })?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let d = obj.dim() as f64;
    let log_m = 0.5 * d * (2.0 * PI).ln() + value - 0.5 * log_det;
    if !log_m.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "non-finite Laplace evidence for model {}",
            obj.model()
        )));
    }
    let kk = obj.model().len();
    Ok(ScoredModel {
        k: obj.model().clone(),
        beta_hat: theta.rows(0, kk).iter().copied().collect(),
        intercept: (obj.dim() > kk).then(|| theta[kk]),
        log_f_at_mode: value,
        log_laplace_marginal: log_m,
        log_det_neg_hessian: log_det,
        converged: diag.converged(),
        iterations: diag.iterations,
        grad_inf_norm: diag.grad_inf_norm,
    })
}

/// Laplace log marginal of `k` under the logistic likelihood.
pub fn log_marginal(data: &Dataset, cfg: &HyperPmomConfig, k: &ModelIndex) -> Result<ScoredModel> {
    ModelScorer::logistic(data, cfg).log_marginal(k)
}

/// `log π(k₁ | y) − log π(k₂ | y)`; the evidence normaliser cancels.
pub fn log_posterior_ratio(a: &ScoredModel, b: &ScoredModel, cfg: &HyperPmomConfig) -> Result<f64> {
    let pa = log_model_prior(cfg, a.k.len())
        .ok_or_else(|| invalid_arg(format!("model {} exceeds the size cap", a.k)))?;
    let pb = log_model_prior(cfg, b.k.len())
        .ok_or_else(|| invalid_arg(format!("model {} exceeds the size cap", b.k)))?;
    Ok((pa + a.log_laplace_marginal) - (pb + b.log_laplace_marginal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::ScaleMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn data(n: usize, p: usize, beta: &[f64], seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta: f64 = beta.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum();
                f64::from(rng.random::<f64>() < crate::likelihood::sigmoid(eta))
            })
            .collect();
        Dataset::standardize(x, &y).unwrap()
    }

    fn cfg(p: usize) -> HyperPmomConfig {
        HyperPmomConfig { r: 1, lambda1: 1.0, lambda2: 100.0, max_model_size: p, scale: ScaleMatrix::Identity, intercept: false }
    }

    #[test]
    fn empty_model_evidence_is_null_likelihood() {
        let d = data(100, 3, &[1.0], 1);
        let sm = log_marginal(&d, &cfg(3), &ModelIndex::empty()).unwrap();
        assert_eq!(sm.log_laplace_marginal, -100.0 * LN_2);
        assert!(sm.converged);
    }

    #[test]
    fn find_mode_rejects_empty_model() {
        let d = data(20, 2, &[1.0], 2);
        let c = cfg(2);
        let obj = ModelObjective::logistic(&d, &c, &ModelIndex::empty()).unwrap();
        assert!(matches!(find_mode(&obj, None, &BfgsOptions::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn mode_is_local_maximum() {
        let d = data(80, 4, &[1.5, -1.0, 0.0, 0.8], 3);
        let c = cfg(4);
        let k = ModelIndex::new(vec![0, 1, 3]).unwrap();
        let obj = ModelObjective::logistic(&d, &c, &k).unwrap();
        let (beta, diag) = find_mode(&obj, None, &BfgsOptions::default()).unwrap();
        assert!(diag.converged());
        let f0 = obj.value(&beta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let mut delta = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            delta *= 1e-3 / delta.norm();
            assert!(obj.value(&(&beta + delta)).unwrap() <= f0);
        }
        let eig = obj.hessian(&beta).unwrap().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|v| *v < 0.0));
        assert!(beta.iter().all(|b| b.abs() > 1e-6));
    }

    #[test]
    fn ratio_identities() {
        let d = data(60, 3, &[2.0, 0.0, 0.0], 4);
        let c = cfg(3);
        let a = log_marginal(&d, &c, &ModelIndex::new(vec![0]).unwrap()).unwrap();
        let b = log_marginal(&d, &c, &ModelIndex::new(vec![0, 2]).unwrap()).unwrap();
        assert_eq!(log_posterior_ratio(&a, &a, &c).unwrap(), 0.0);
        assert_eq!(log_posterior_ratio(&a, &b, &c).unwrap(), -log_posterior_ratio(&b, &a, &c).unwrap());
    }

    #[test]
    fn deterministic_scoring() {
        let d = data(60, 3, &[1.0, 1.0, 0.0], 5);
        let c = cfg(3);
        let k = ModelIndex::new(vec![0, 1, 2]).unwrap();
        assert_eq!(log_marginal(&d, &c, &k).unwrap(), log_marginal(&d, &c, &k).unwrap());
    }

    #[test]
    fn column_sign_flip_symmetry() {
        let d = data(70, 2, &[1.2, -0.7], 6);
        let c = cfg(2);
        let k = ModelIndex::new(vec![0, 1]).unwrap();
        let base = log_marginal(&d, &c, &k).unwrap();
        let mut x = d.x().clone();
        x.column_mut(1).neg_mut();
        let flipped = Dataset::unscaled(x, d.y().as_slice()).unwrap();
        let other = log_marginal(&flipped, &c, &k).unwrap();
        assert!((base.log_laplace_marginal - other.log_laplace_marginal).abs() < 1e-8);
        assert!((base.beta_hat[1] + other.beta_hat[1]).abs() < 1e-6);
    }

    #[test]
    fn supplied_init_must_be_nonzero() {
        let d = data(30, 2, &[1.0, 0.0], 7);
        let c = cfg(2);
        let obj = ModelObjective::logistic(&d, &c, &ModelIndex::new(vec![0, 1]).unwrap()).unwrap();
        let bad = DVector::from_vec(vec![0.5, 0.0]);
        assert!(find_mode(&obj, Some(&bad), &BfgsOptions::default()).is_err());
    }

    #[test]
    fn intercept_model_scores() {
        let d = data(80, 2, &[1.5, 0.0], 8);
        let c = HyperPmomConfig { intercept: true, ..cfg(2) };
        let scorer = ModelScorer::logistic(&d, &c);
        let empty = scorer.log_marginal(&ModelIndex::empty()).unwrap();
        assert!(empty.intercept.is_some());
        let one = scorer.log_marginal(&ModelIndex::new(vec![0]).unwrap()).unwrap();
        assert!(one.converged && one.intercept.is_some());
        assert!(one.log_laplace_marginal > empty.log_laplace_marginal);
    }
}
