//! Hyper-pMOM prior on active coefficients and the uniform size-capped prior
//! over models.
//!
//! Conditionally on a scale `τ`, the product-moment density is
//!
//! ```text
//! π(β_k | τ, k) = d_k (2π)^{-|k|/2} τ^{-r|k| - |k|/2} exp(-‖β_k‖²/(2τ)) Π β_{k_i}^{2r}
//! ```
//!
//! and `τ ~ InverseGamma(λ₁, λ₂)`. Integrating `τ` out gives, with
//! `c = r|k| + |k|/2 + λ₁`,
//!
//! ```text
//! π(β_k | k) = λ₂^{λ₁}/Γ(λ₁) · Γ(c) / (λ₂ + ‖β_k‖²/2)^c · d_k (2π)^{-|k|/2} Π β_{k_i}^{2r}
//! ```
//!
//! Only the identity scale matrix is supported; `d_k = ((2r-1)!!)^{-|k|}`
//! holds in that case.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid_arg, Error, Result};

/// Scale matrix of the pMOM kernel. Only `U = I` is implemented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMatrix {
    #[default]
    Identity,
}

/// Prior hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperPmomConfig {
    /// pMOM order `r ≥ 1`.
    pub r: u32,
    /// Inverse-Gamma shape.
    pub lambda1: f64,
    /// Inverse-Gamma scale.
    pub lambda2: f64,
    /// Largest model size with nonzero prior mass (`m_n`).
    pub max_model_size: usize,
    #[serde(default)]
    pub scale: ScaleMatrix,
    /// Adds an always-present intercept with a flat prior.
    #[serde(default)]
    pub intercept: bool,
}

impl HyperPmomConfig {
    /// `r = 1`, `λ₁ = 1`, `λ₂ = default_lambda2(n, p)`, `m_n = default_max_model_size(n, p)`.
    pub fn defaults_for(n: usize, p: usize) -> Self {
        Self {
            r: 1,
            lambda1: 1.0,
            lambda2: default_lambda2(n, p),
            max_model_size: default_max_model_size(n, p),
            scale: ScaleMatrix::Identity,
            intercept: false,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.r < 1 {
            return Err(invalid_arg("pMOM order r must be at least 1"));
        }
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return Err(invalid_arg(format!("lambda1 must be positive, got {}", self.lambda1)));
        }
        if !(self.lambda2 > 0.0 && self.lambda2.is_finite()) {
            return Err(invalid_arg(format!("lambda2 must be positive, got {}", self.lambda2)));
        }
        if self.max_model_size < 1 || self.max_model_size > p {
            return Err(invalid_arg(format!(
                "max model size must lie in [1, {p}], got {}",
                self.max_model_size
            )));
        }
        Ok(())
    }

    /// The exponent `c = r|k| + |k|/2 + λ₁` of the τ-marginal.
    pub fn marginal_exponent(&self, k_size: usize) -> f64 {
        let k = k_size as f64;
        self.r as f64 * k + 0.5 * k + self.lambda1
    }
}

/// `λ₂ = 100 · n^{-1/3} · p^{2.001 · 2/3}`.
pub fn default_lambda2(n: usize, p: usize) -> f64 {
    100.0 * (n as f64).powf(-1.0 / 3.0) * (p as f64).powf(2.001 * 2.0 / 3.0)
}

/// `min(p, 4·⌈√(n / log p)⌉)`, and `p` itself when `p = 1`.
pub fn default_max_model_size(n: usize, p: usize) -> usize {
    let ratio = n as f64 / (p as f64).ln();
    let cap = 4.0 * ratio.sqrt().ceil();
    if cap.is_finite() && cap < p as f64 {
        (cap as usize).max(1)
    } else {
        p
    }
}

/// `log d_k = −|k| · log((2r−1)!!)`.
pub fn log_norm_const(r: u32, k_size: usize) -> f64 {
    let log_double_factorial: f64 = (1..=r).map(|j| ((2 * j - 1) as f64).ln()).sum();
    -(k_size as f64) * log_double_factorial
}

/// Uniform prior over models of size at most `m_n`, up to an additive
/// constant. `None` marks a model with zero prior mass.
pub fn log_model_prior(cfg: &HyperPmomConfig, k_size: usize) -> Option<f64> {
    (k_size <= cfg.max_model_size).then_some(0.0)
}

fn check_nonzero(beta: &DVector<f64>) -> Result<()> {
    if let Some(i) = beta.iter().position(|b| *b == 0.0) {
        return Err(Error::Domain(format!(
            "coefficient {i} is exactly zero where the nonlocal prior density vanishes"
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(invalid_arg("coefficients must be finite"));
    }
    Ok(())
}

/// `log π(β_k | k)` with τ integrated out. The empty model has log-density 0.
pub fn log_prior_density(cfg: &HyperPmomConfig, beta: &DVector<f64>) -> Result<f64> {
    if beta.is_empty() {
        return Ok(0.0);
    }
    check_nonzero(beta)?;
    let k = beta.len();
    let c = cfg.marginal_exponent(k);
    let a = cfg.lambda2 + 0.5 * beta.norm_squared();
    let log_abs_sum: f64 = beta.iter().map(|b| b.abs().ln()).sum();
    Ok(cfg.lambda1 * cfg.lambda2.ln() - ln_gamma(cfg.lambda1)
        + log_norm_const(cfg.r, k)
        - 0.5 * k as f64 * (2.0 * PI).ln()
        + ln_gamma(c)
        - c * a.ln()
        + 2.0 * cfg.r as f64 * log_abs_sum)
}

/// Gradient of [`log_prior_density`].
pub fn log_prior_gradient(cfg: &HyperPmomConfig, beta: &DVector<f64>) -> Result<DVector<f64>> {
    if beta.is_empty() {
        return Ok(DVector::zeros(0));
    }
    check_nonzero(beta)?;
    let c = cfg.marginal_exponent(beta.len());
    let a = cfg.lambda2 + 0.5 * beta.norm_squared();
    let two_r = 2.0 * cfg.r as f64;
    Ok(beta.map(|b| -c * b / a + two_r / b))
}

/// Hessian of [`log_prior_density`]:
/// `−diag(2r/β²) − c [I/A − ββᵀ/A²]` with `A = λ₂ + ‖β‖²/2`.
pub fn log_prior_hessian(cfg: &HyperPmomConfig, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
    let k = beta.len();
    if k == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    check_nonzero(beta)?;
    let c = cfg.marginal_exponent(k);
    let a = cfg.lambda2 + 0.5 * beta.norm_squared();
    let two_r = 2.0 * cfg.r as f64;
    let mut h = beta * beta.transpose() * (c / (a * a));
    for i in 0..k {
        h[(i, i)] -= c / a + two_r / (beta[i] * beta[i]);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn cfg() -> HyperPmomConfig {
        HyperPmomConfig { r: 1, lambda1: 1.0, lambda2: 3.0, max_model_size: 10, scale: ScaleMatrix::Identity, intercept: false }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn lambda2_schedule() {
        assert_eq!(default_lambda2(1, 1), 100.0);
        // 50-digit reference values.
        let cases = [
            (100, 100, 10030.748310822916866743244848055301),
            (100, 300, 43432.325868542498326305826437891111),
            (200, 100, 7961.4102103142690775295802539233128),
        ];
        for (n, p, want) in cases {
            let got = default_lambda2(n, p);
            assert!(((got - want) / want).abs() < 1e-10, "{n} {p}: {got} vs {want}");
        }
    }

    #[test]
    fn normalization_constant() {
        assert_eq!(log_norm_const(1, 3), 0.0);
        assert!((log_norm_const(2, 2) + 2.0 * 3f64.ln()).abs() < 1e-15);
        assert!((log_norm_const(2, 2) + 2.19722).abs() < 1e-5);
        assert_eq!(log_norm_const(1, 0), 0.0);
        // 5!! = 15
        assert!((log_norm_const(3, 1) + 15f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn model_prior_cap() {
        assert_eq!(log_model_prior(&cfg(), 3), Some(0.0));
        assert_eq!(log_model_prior(&cfg(), 10), Some(0.0));
        assert_eq!(log_model_prior(&cfg(), 11), None);
    }

    #[test]
    fn zero_coefficient_is_domain_error() {
        let err = log_prior_density(&cfg(), &dvector![1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(log_prior_gradient(&cfg(), &dvector![0.0]).is_err());
        assert!(log_prior_hessian(&cfg(), &dvector![0.0]).is_err());
    }

    #[test]
    fn default_model_size_cap() {
        assert_eq!(default_max_model_size(100, 100), 20);
        assert_eq!(default_max_model_size(100, 8), 8);
        assert_eq!(default_max_model_size(100, 1), 1);
        assert_eq!(default_max_model_size(10, 2), 2);
    }

    #[test]
    fn validation() {
        assert!(cfg().validate(10).is_ok());
        assert!(cfg().validate(5).is_err());
        let mut c = cfg();
        c.lambda2 = 0.0;
        assert!(c.validate(10).is_err());
        c = cfg();
        c.r = 0;
        assert!(c.validate(10).is_err());
    }
}
