//! Datasets and model index sets.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_input, Result};

/// A design matrix with a binary response.
///
/// Rows are observations, columns are covariates. The column transform that
/// was applied to the raw design is kept alongside so that held-out data can be
/// mapped into the same coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    column_means: Vec<f64>,
    column_sds: Vec<f64>,
}

impl Dataset {
    /// Centres and scales every column of `raw` to zero mean and unit sample
    /// standard deviation (denominator `n - 1`).
    ///
    /// Constant columns have no unit-variance rescaling and are rejected, as
    /// are designs with fewer than two rows.
    pub fn standardize(raw: DMatrix<f64>, y: &[f64]) -> Result<Self> {
        check_shape(&raw, y)?;
        let n = raw.nrows();
        if n < 2 {
            return Err(invalid_input("standardization needs at least two rows"));
        }
        let mut means = Vec::with_capacity(raw.ncols());
        let mut sds = Vec::with_capacity(raw.ncols());
        for (j, col) in raw.column_iter().enumerate() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            if !(sd > 0.0) || !sd.is_finite() {
                return Err(invalid_input(format!(
                    "column x{} is constant and cannot be standardized",
                    j + 1
                )));
            }
            means.push(mean);
            sds.push(sd);
        }
        Self::with_transform(raw, y, means, sds)
    }

    /// Applies a given per-column transform `(x - mean) / sd`, typically one
    /// obtained from a training set.
    pub fn with_transform(
        mut raw: DMatrix<f64>,
        y: &[f64],
        column_means: Vec<f64>,
        column_sds: Vec<f64>,
    ) -> Result<Self> {
        check_shape(&raw, y)?;
        if column_means.len() != raw.ncols() || column_sds.len() != raw.ncols() {
            return Err(invalid_arg(format!(
                "transform has {} means and {} sds for {} columns",
                column_means.len(),
                column_sds.len(),
                raw.ncols()
            )));
        }
        if column_sds.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(invalid_arg("column scales must be positive and finite"));
        }
        for (j, mut col) in raw.column_iter_mut().enumerate() {
            let (m, s) = (column_means[j], column_sds[j]);
            col.apply(|v| *v = (*v - m) / s);
        }
        Ok(Self {
            x: raw,
            y: DVector::from_column_slice(y),
            column_means,
            column_sds,
        })
    }

    /// Wraps an already prepared design without rescaling it.
    pub fn unscaled(x: DMatrix<f64>, y: &[f64]) -> Result<Self> {
        let p = x.ncols();
        Self::with_transform(x, y, vec![0.0; p], vec![1.0; p])
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_sds(&self) -> &[f64] {
        &self.column_sds
    }

    /// The `n × |k|` submatrix of active columns, optionally followed by a
    /// column of ones.
    pub fn active_design(&self, k: &ModelIndex, intercept: bool) -> DMatrix<f64> {
        let width = k.len() + usize::from(intercept);
        let mut out = DMatrix::zeros(self.n(), width);
        for (c, j) in k.iter().enumerate() {
            out.set_column(c, &self.x.column(j));
        }
        if intercept {
            out.column_mut(width - 1).fill(1.0);
        }
        out
    }

    /// Rejects index sets that reference columns outside the design.
    pub fn check_model(&self, k: &ModelIndex) -> Result<()> {
        k.check_within(self.p())
    }

    /// Absolute sample correlation of each column with the response.
    ///
    /// Columns or responses with zero variance get correlation 0.
    pub fn abs_response_correlations(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let ybar = self.y.mean();
        let yc: Vec<f64> = self.y.iter().map(|v| v - ybar).collect();
        let syy: f64 = yc.iter().map(|v| v * v).sum();
        self.x
            .column_iter()
            .map(|col| {
                let xbar = col.sum() / n;
                let mut sxy = 0.0;
                let mut sxx = 0.0;
                for (xv, yv) in col.iter().zip(&yc) {
                    let d = xv - xbar;
                    sxy += d * yv;
                    sxx += d * d;
                }
                let denom = (sxx * syy).sqrt();
                if denom > 0.0 {
                    (sxy / denom).abs()
                } else {
                    0.0
                }
            })
            .collect()
    }
}

fn check_shape(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(invalid_input("design must have at least one row and one column"));
    }
    if x.nrows() != y.len() {
        return Err(invalid_input(format!(
            "design has {} rows but response has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    if let Some(i) = y.iter().position(|v| *v != 0.0 && *v != 1.0) {
        return Err(invalid_input(format!(
            "response entry {} is {}, expected 0 or 1",
            i + 1,
            y[i]
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid_input("design contains non-finite values"));
    }
    Ok(())
}

/// An ordered set of active covariate indices (zero-based).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ModelIndex(Vec<usize>);

impl ModelIndex {
    /// The empty model.
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Builds an index set from arbitrary order; duplicates are rejected.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid_arg(format!("duplicate index in model {indices:?}")));
        }
        Ok(Self(indices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    /// `k ∪ {j}`; `j` must not already be present.
    pub fn with(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        match v.binary_search(&j) {
            Ok(_) => {}
            Err(pos) => v.insert(pos, j),
        }
        Self(v)
    }

    /// `k ∖ {j}`.
    pub fn without(&self, j: usize) -> Self {
        Self(self.0.iter().copied().filter(|&i| i != j).collect())
    }

    /// `k ∖ {j} ∪ {l}`.
    pub fn swap(&self, j: usize, l: usize) -> Self {
        self.without(j).with(l)
    }

    pub fn check_within(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= p => Err(invalid_arg(format!(
                "model index {last} out of range for p = {p}"
            ))),
            _ => Ok(()),
        }
    }

    /// One-based indices, as reported to users.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

impl TryFrom<Vec<usize>> for ModelIndex {
    type Error = crate::Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ModelIndex> for Vec<usize> {
    fn from(k: ModelIndex) -> Self {
        k.0
    }
}

impl fmt::Display for ModelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}
