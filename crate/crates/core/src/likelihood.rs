//! Likelihood interface and the logistic model.
//!
//! Every likelihood handled here has the GLM form
//! `L(β) = Σᵢ ℓ(yᵢ, ηᵢ)` with linear predictor `η = X_k β`, so an
//! implementation only supplies the per-observation log-density of `η`
//! and its first two derivatives. Score and Hessian in `β` follow by the
//! chain rule and are provided by the trait.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, ModelIndex};
use crate::error::{invalid_arg, Result};

/// A likelihood that depends on coefficients only through `η = X_k β`.
pub trait Likelihood: Debug + Send + Sync {
    fn name(&self) -> &str;

    /// `Σᵢ ℓ(yᵢ, ηᵢ)`.
    fn log_lik_eta(&self, y: &DVector<f64>, eta: &DVector<f64>) -> f64;

    /// `∂ℓ/∂ηᵢ` per observation.
    fn eta_gradient(&self, y: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64>;

    /// `−∂²ℓ/∂ηᵢ²` per observation.
    fn eta_curvature(&self, y: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64>;

    /// Log-likelihood of the model with no covariates.
    fn null_log_lik(&self, y: &DVector<f64>) -> f64 {
        self.log_lik_eta(y, &DVector::zeros(y.len()))
    }

    fn log_lik(&self, data: &Dataset, k: &ModelIndex, beta: &DVector<f64>) -> Result<f64> {
        if k.is_empty() {
            check_coefficients(data, k, beta)?;
            return Ok(self.null_log_lik(data.y()));
        }
        let eta = linear_predictor(data, k, beta)?;
        Ok(self.log_lik_eta(data.y(), &eta))
    }

    fn score(&self, data: &Dataset, k: &ModelIndex, beta: &DVector<f64>) -> Result<DVector<f64>> {
        let eta = linear_predictor(data, k, beta)?;
        let xk = data.active_design(k, false);
        Ok(xk.tr_mul(&self.eta_gradient(data.y(), &eta)))
    }

    fn neg_hessian(
        &self,
        data: &Dataset,
        k: &ModelIndex,
        beta: &DVector<f64>,
    ) -> Result<DMatrix<f64>> {
        let eta = linear_predictor(data, k, beta)?;
        let xk = data.active_design(k, false);
        Ok(weighted_gram(&xk, &self.eta_curvature(data.y(), &eta)))
    }
}

/// `Xᵀ diag(w) X`, symmetrised.
pub fn weighted_gram(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = x.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= w[i];
    }
    let h = x.tr_mul(&scaled);
    (&h + h.transpose()) * 0.5
}

fn check_coefficients(data: &Dataset, k: &ModelIndex, beta: &DVector<f64>) -> Result<()> {
    data.check_model(k)?;
    if beta.len() != k.len() {
        return Err(invalid_arg(format!(
            "{} coefficients supplied for a model of size {}",
            beta.len(),
            k.len()
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(invalid_arg("coefficients must be finite"));
    }
    Ok(())
}

/// `X_k β` after validating dimensions.
pub fn linear_predictor(data: &Dataset, k: &ModelIndex, beta: &DVector<f64>) -> Result<DVector<f64>> {
    check_coefficients(data, k, beta)?;
    let mut eta = DVector::zeros(data.n());
    for (c, j) in k.iter().enumerate() {
        eta.axpy(beta[c], &data.x().column(j), 1.0);
    }
    Ok(eta)
}

/// `log(1 + eᶻ)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    (-z.abs()).exp().ln_1p() + z.max(0.0)
}

/// `eᶻ / (1 + eᶻ)` without overflow.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli response with logit link.
#[derive(Debug, Clone, Copy, Default)]
pub struct Logistic;

impl Likelihood for Logistic {
    fn name(&self) -> &str {
        "logistic"
    }

    fn log_lik_eta(&self, y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
        // Observations sitting exactly at η = 0 each contribute −log 2; they
        // are counted separately so the null model evaluates to exactly −n·log 2.
        let mut at_origin = 0usize;
        let mut total = 0.0;
        for (yi, &z) in y.iter().zip(eta.iter()) {
            if z == 0.0 {
                at_origin += 1;
            } else {
                total += yi * z - softplus(z);
            }
        }
        total - at_origin as f64 * LN_2
    }

    fn eta_gradient(&self, y: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        y.zip_map(eta, |yi, z| yi - sigmoid(z))
    }

    fn eta_curvature(&self, _y: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        eta.map(|z| {
            let mu = sigmoid(z);
            mu * (1.0 - mu)
        })
    }

    fn null_log_lik(&self, y: &DVector<f64>) -> f64 {
        -(y.len() as f64) * LN_2
    }
}

/// Logistic log-likelihood `Σᵢ [yᵢ xᵢₖᵀβ − log(1 + exp(xᵢₖᵀβ))]`.
pub fn log_likelihood(data: &Dataset, k: &ModelIndex, beta: &DVector<f64>) -> Result<f64> {
    Logistic.log_lik(data, k, beta)
}

/// Logistic score `X_kᵀ (y − μ)`.
pub fn score(data: &Dataset, k: &ModelIndex, beta: &DVector<f64>) -> Result<DVector<f64>> {
    Logistic.score(data, k, beta)
}

/// Logistic observed information `X_kᵀ diag(μ(1−μ)) X_k`.
pub fn neg_hessian(data: &Dataset, k: &ModelIndex, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
    Logistic.neg_hessian(data, k, beta)
}

/// Name-keyed collection of likelihood implementations.
#[derive(Debug, Clone)]
pub struct LikelihoodRegistry {
    entries: BTreeMap<String, Arc<dyn Likelihood>>,
}

impl Default for LikelihoodRegistry {
    fn default() -> Self {
        let mut reg = Self { entries: BTreeMap::new() };
        reg.register(Arc::new(Logistic));
        reg
    }
}

impl LikelihoodRegistry {
    /// A registry holding only the built-in logistic likelihood.
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or replaces) an implementation under its own name.
    pub fn register(&mut self, lik: Arc<dyn Likelihood>) {
        self.entries.insert(lik.name().to_owned(), lik);
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn resolve(&self, name: &str) -> Result<Arc<dyn Likelihood>> {
        self.entries.get(name).cloned().ok_or_else(|| {
            invalid_arg(format!(
                "unknown likelihood '{name}'; registered: {}",
                self.names().join(", ")
            ))
        })
    }
}

/// Resolves a built-in likelihood by name.
pub fn resolve(name: &str) -> Result<Arc<dyn Likelihood>> {
    LikelihoodRegistry::default().resolve(name)
}
