//! Model evidence by brute-force integration.
//!
//! The integrand `exp f(β_k)` vanishes on every coordinate hyperplane, so each
//! orthant is integrated separately on a box around that orthant's own mode
//! and the pieces are summed.

use std::f64::consts::PI;

use hyperpmom::laplace::{find_mode, ridge_start, MIN_START_MAGNITUDE};
use hyperpmom::optimize::BfgsOptions;
use hyperpmom::{Dataset, HyperPmomConfig, ModelIndex, ModelObjective};
use nalgebra::{Cholesky, DVector};
use statrs::function::gamma::ln_gamma;

use crate::quadrature::{integrate, integrate_2d, Tolerance};
use crate::{OracleError, Result};

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Relative accuracy requested from the adaptive rule.
    pub rel_tol: f64,
    /// Initial box half-width, in marginal standard deviations at the mode.
    pub half_width_sds: f64,
    /// The integrand on the box boundary must fall below this fraction of
    /// its peak; otherwise the box is widened.
    pub boundary_ratio: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-9, half_width_sds: 10.0, boundary_ratio: 1e-12, max_intervals: 4000 }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(OracleError::Refused("tolerance must lie in (0, 1)".into()));
        }
        if !(self.half_width_sds > 0.0 && self.boundary_ratio > 0.0 && self.boundary_ratio < 1.0) {
            return Err(OracleError::Refused("box width and boundary ratio must be positive".into()));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance { rel: self.rel_tol, abs: 0.0, max_intervals: self.max_intervals }
    }
}

/// Largest half-width multiplier tried before giving up.
const MAX_WIDTH_SDS: f64 = 400.0;

/// Mode of `f` inside one orthant, with marginal standard deviations from the
/// local curvature.
struct OrthantMode {
    mode: DVector<f64>,
    peak: f64,
    sds: Vec<f64>,
}

fn orthant_mode(obj: &ModelObjective<'_>, signs: &[f64]) -> Result<OrthantMode> {
    let ridge = ridge_start(obj);
    let init = DVector::from_iterator(
        signs.len(),
        signs.iter().zip(ridge.iter()).map(|(s, r)| s * r.abs().max(MIN_START_MAGNITUDE)),
    );
    let (mode, _) = find_mode(obj, Some(&init), &BfgsOptions { max_iter: 2000, ..Default::default() })?;
    let peak = obj.value(&mode)?;
    let neg_v = -obj.hessian(&mode)?;
    let sds = match Cholesky::new(neg_v.clone()) {
        Some(ch) => ch.inverse().diagonal().iter().map(|v| v.sqrt()).collect(),
        None => neg_v.diagonal().iter().map(|v| 1.0 / v.abs().max(1e-12).sqrt()).collect(),
    };
    Ok(OrthantMode { mode, peak, sds })
}

/// Interval on one axis of an orthant: `[β̂ − w·s, β̂ + w·s]` clipped at zero.
fn axis_interval(center: f64, sd: f64, width: f64, sign: f64) -> (f64, f64) {
    let (lo, hi) = (center - width * sd, center + width * sd);
    if sign > 0.0 {
        (lo.max(0.0), hi)
    } else {
        (lo, hi.min(0.0))
    }
}

/// `f` at `beta`, or `-inf` where the prior vanishes.
fn log_integrand(obj: &ModelObjective<'_>, beta: &[f64]) -> f64 {
    if beta.contains(&0.0) {
        return f64::NEG_INFINITY;
    }
    obj.value(&DVector::from_column_slice(beta)).unwrap_or(f64::NEG_INFINITY)
}

fn orthant_signs(dim: usize) -> Vec<Vec<f64>> {
    (0..1usize << dim)
        .map(|mask| (0..dim).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect()
}

/// Box for one orthant, widened until the boundary is negligible.
fn orthant_box(
    obj: &ModelObjective<'_>,
    om: &OrthantMode,
    signs: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    let threshold = om.peak + spec.boundary_ratio.ln();
    let mut width = spec.half_width_sds;
    loop {
        let bounds: Vec<(f64, f64)> = (0..signs.len())
            .map(|i| axis_interval(om.mode[i], om.sds[i], width, signs[i]))
            .collect();
        if boundary_max(obj, &bounds) < threshold {
            return Ok(bounds);
        }
        width *= 1.5;
        if width > MAX_WIDTH_SDS {
            return Err(OracleError::NotConverged(format!(
                "integrand of model {} does not decay within {MAX_WIDTH_SDS} standard deviations",
                obj.model()
            )));
        }
    }
}

/// Largest `f` on the non-zero faces of a box (sampled on a grid of each face).
fn boundary_max(obj: &ModelObjective<'_>, bounds: &[(f64, f64)]) -> f64 {
    const GRID: usize = 41;
    let mut best = f64::NEG_INFINITY;
    match bounds {
        [(a, b)] => {
            for edge in [*a, *b] {
                best = best.max(log_integrand(obj, &[edge]));
            }
        }
        [(a0, b0), (a1, b1)] => {
            for t in 0..GRID {
                let s = t as f64 / (GRID - 1) as f64;
                let x = a0 + s * (b0 - a0);
                let y = a1 + s * (b1 - a1);
                for pt in [[*a0, y], [*b0, y], [x, *a1], [x, *b1]] {
                    best = best.max(log_integrand(obj, &pt));
                }
            }
        }
        _ => unreachable!("dimension checked by callers"),
    }
    best
}

/// `log ∫ exp f(β_k) dβ_k` by adaptive quadrature over all orthants.
///
/// Supports `|k| ≤ 2` and `n ≤ 200`; the empty model returns the null
/// log-likelihood exactly. Models with an intercept are refused.
pub fn quadrature_marginal(
    data: &Dataset,
    cfg: &HyperPmomConfig,
    k: &ModelIndex,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    if k.len() > 2 || data.n() > 200 {
        return Err(OracleError::Refused(format!(
            "quadrature is limited to |k| ≤ 2 and n ≤ 200 (got |k| = {}, n = {})",
            k.len(),
            data.n()
        )));
    }
    if cfg.intercept {
        return Err(OracleError::Refused("intercept models are not integrated".into()));
    }
    let obj = ModelObjective::logistic(data, cfg, k)?;
    if k.is_empty() {
        return Ok(obj.value(&DVector::zeros(0))?);
    }
    let dim = k.len();
    let mut pieces = Vec::new();
    for signs in orthant_signs(dim) {
        let om = orthant_mode(&obj, &signs)?;
        let bounds = orthant_box(&obj, &om, &signs, spec)?;
        pieces.push((om.peak, bounds));
    }
    let shift = pieces.iter().map(|(p, _)| *p).fold(f64::NEG_INFINITY, f64::max);
    let tol = spec.tolerance();
    let mut total = 0.0;
    for (_, bounds) in &pieces {
        let est = match bounds.as_slice() {
            [b] => integrate(|x| (log_integrand(&obj, &[x]) - shift).exp(), b.0, b.1, tol)?,
            [b0, b1] => integrate_2d(|x, y| (log_integrand(&obj, &[x, y]) - shift).exp(), *b0, *b1, tol)?,
            _ => unreachable!(),
        };
        total += est.value;
    }
    Ok(total.ln() + shift)
}

/// `log ∫∫ exp{L(β)} π(β | τ) π(τ) dτ dβ` for a single covariate, integrating
/// the pMOM scale against its Inverse-Gamma prior numerically instead of using
/// the closed-form τ-marginal.
///
/// The inner integral runs over `u = log τ`.
pub fn hierarchical_marginal(
    data: &Dataset,
    cfg: &HyperPmomConfig,
    k: &ModelIndex,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    if k.len() != 1 || cfg.intercept {
        return Err(OracleError::Refused("hierarchical quadrature needs |k| = 1 and no intercept".into()));
    }
    let x = data.active_design(k, false);
    let col = x.column(0).into_owned();
    let y = data.y().clone();
    let r = f64::from(cfg.r);
    let (l1, l2) = (cfg.lambda1, cfg.lambda2);

    let log_lik = |b: f64| -> f64 {
        col.iter()
            .zip(y.iter())
            .map(|(xi, yi)| {
                let eta = xi * b;
                // log(1 + e^η) written out independently of the library helper.
                let log1pexp = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
                yi * eta - log1pexp
            })
            .sum()
    };
    // (2r−1)!! by direct product.
    let double_factorial: f64 = (1..=cfg.r).map(|i| f64::from(2 * i - 1)).product();
    // log of π(β|τ)·π(τ)·τ as a function of u = log τ, without the β-only terms.
    let a = r + 0.5 + l1;
    let log_prior_const = -double_factorial.ln() - 0.5 * (2.0 * PI).ln() + l1 * l2.ln() - ln_gamma(l1);
    let inner_log = |b: f64| -> Result<f64> {
        let big_b = 0.5 * b * b + l2;
        let log_h = |u: f64| -a * u - big_b * (-u).exp();
        // The u-integrand peaks at e^{u*} = B/a with curvature a.
        let u_star = (big_b / a).ln();
        let h_star = log_h(u_star);
        let sd = 1.0 / a.sqrt();
        let threshold = spec.boundary_ratio.ln();
        let mut width = spec.half_width_sds;
        let (lo, hi) = loop {
            let (lo, hi) = (u_star - width * sd, u_star + width * sd);
            if log_h(lo) - h_star < threshold && log_h(hi) - h_star < threshold {
                break (lo, hi);
            }
            width *= 1.5;
            if width > 10.0 * MAX_WIDTH_SDS {
                return Err(OracleError::NotConverged("τ integrand does not decay".into()));
            }
        };
        let est = integrate(|u| (log_h(u) - h_star).exp(), lo, hi, spec.tolerance())?;
        Ok(est.value.ln() + h_star + log_prior_const + 2.0 * r * b.abs().ln() + log_lik(b))
    };

    // Outer β boxes: per orthant, centred on the maximizer of the
    // hierarchical integrand found by golden section.
    let mut pieces = Vec::new();
    for sign in [1.0, -1.0] {
        let outer = |t: f64| inner_log(sign * t).unwrap_or(f64::NEG_INFINITY);
        let hi = bracket_upper(&outer)?;
        let t_star = crate::finite_diff::golden_section_max(outer, 1e-8, hi, 1e-10);
        let peak = outer(t_star);
        // Curvature by central differences for the box width.
        let h = 1e-3 * t_star.max(1e-3);
        let curv = (outer(t_star + h) - 2.0 * peak + outer(t_star - h)) / (h * h);
        let sd = if curv < 0.0 { 1.0 / (-curv).sqrt() } else { t_star };
        let threshold = peak + spec.boundary_ratio.ln();
        let mut width = spec.half_width_sds;
        let (lo, hi) = loop {
            let (lo, hi) = ((t_star - width * sd).max(0.0), t_star + width * sd);
            let lo_ok = lo == 0.0 || outer(lo) < threshold;
            if lo_ok && outer(hi) < threshold {
                break (lo, hi);
            }
            width *= 1.5;
            if width > MAX_WIDTH_SDS {
                return Err(OracleError::NotConverged("β integrand does not decay".into()));
            }
        };
        pieces.push((sign, peak, lo, hi));
    }
    let shift = pieces.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let failure = std::cell::RefCell::new(None);
    let mut total = 0.0;
    for (sign, _, lo, hi) in pieces {
        let est = integrate(
            |t| match inner_log(sign * t) {
                Ok(v) => (v - shift).exp(),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            spec.tolerance(),
        );
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        total += est?.value;
    }
    Ok(total.ln() + shift)
}

/// Doubles an upper end until `g` is decreasing past its maximum.
fn bracket_upper(g: &impl Fn(f64) -> f64) -> Result<f64> {
    let mut hi = 1.0;
    for _ in 0..60 {
        if g(2.0 * hi) < g(hi) {
            return Ok(4.0 * hi);
        }
        hi *= 2.0;
    }
    Err(OracleError::NotConverged("could not bracket the β mode".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn fixture() -> Dataset {
        // Deterministic small design with a clear signal in the first column.
        let n = 40;
        let x = DMatrix::from_fn(n, 2, |i, j| ((i * 7 + j * 13) % 11) as f64 / 5.0 - 1.0);
        let y: Vec<f64> = (0..n).map(|i| f64::from(x[(i, 0)] + 0.3 * ((i % 3) as f64 - 1.0) > 0.0)).collect();
        Dataset::standardize(x, &y).unwrap()
    }

    #[test]
    fn empty_model_is_exact() {
        let d = fixture();
        let cfg = HyperPmomConfig::defaults_for(d.n(), d.p());
        let v = quadrature_marginal(&d, &cfg, &ModelIndex::empty(), &QuadratureSpec::default()).unwrap();
        assert_eq!(v, -(d.n() as f64) * std::f64::consts::LN_2);
    }

    #[test]
    fn refuses_large_models() {
        let d = fixture();
        let cfg = HyperPmomConfig::defaults_for(d.n(), d.p());
        let k = ModelIndex::new(vec![0, 1]).unwrap();
        let mut big = cfg.clone();
        big.max_model_size = 2;
        assert!(quadrature_marginal(&d, &big, &k, &QuadratureSpec::default()).is_ok());
        assert!(hierarchical_marginal(&d, &big, &k, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn closed_form_matches_hierarchical() {
        let d = fixture();
        let cfg = HyperPmomConfig::defaults_for(d.n(), d.p());
        let k = ModelIndex::new(vec![0]).unwrap();
        let spec = QuadratureSpec::default();
        let a = quadrature_marginal(&d, &cfg, &k, &spec).unwrap();
        let b = hierarchical_marginal(&d, &cfg, &k, &spec).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn tighter_tolerance_agrees() {
        let d = fixture();
        let cfg = HyperPmomConfig::defaults_for(d.n(), d.p());
        let k = ModelIndex::new(vec![0, 1]).unwrap();
        let loose = quadrature_marginal(&d, &cfg, &k, &QuadratureSpec { rel_tol: 1e-6, ..Default::default() }).unwrap();
        let tight = quadrature_marginal(&d, &cfg, &k, &QuadratureSpec { rel_tol: 1e-10, ..Default::default() }).unwrap();
        assert!((loose - tight).abs() < 1e-5);
    }
}
