use std::ops::{Range, RangeInclusive};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_regression_rows, RegressionDataset};

/// Candidate orders for the least-squares baseline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderGrid {
    pub n_a: RangeInclusive<usize>,
    pub n_b: RangeInclusive<usize>,
}

impl Default for OrderGrid {
    fn default() -> Self {
        Self {
            n_a: 1..=5,
            n_b: 1..=5,
        }
    }
}

impl OrderGrid {
    fn candidates(&self, has_input: bool) -> Vec<(usize, usize)> {
        let n_b: Vec<usize> = if has_input {
            self.n_b.clone().collect()
        } else {
            vec![0]
        };
        self.n_a
            .clone()
            .flat_map(|a| n_b.iter().map(move |&b| (a, b)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub n_a: usize,
    pub n_b: usize,
    /// Squared one-step prediction error on the second half.
    pub sse: f64,
    pub ridge: bool,
}

/// Least-squares ARX fit with cross-validated orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub n_a: usize,
    pub n_b: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Set when the normal equations were singular and a `1e-8·I` ridge was
    /// added.
    pub ridge: bool,
    pub candidates: Vec<CandidateScore>,
}

impl BaselineFit {
    pub fn coefficients(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    /// One-step-ahead predictions for the time indices in `times`, reading
    /// lags from the full series.
    pub fn predict(&self, y: &[f64], u: Option<&[f64]>, times: Range<usize>) -> Result<Vec<f64>> {
        let rows = build_regression_rows(y, u, self.n_a, self.n_b, times)?;
        let coef = self.coefficients();
        Ok(rows
            .rows()
            .map(|(row, _)| crate::math::dot(row, &coef))
            .collect())
    }
}

/// Solves the normal equations, falling back to a tiny ridge when they are
/// singular. Returns the coefficients and whether the ridge was used.
pub fn least_squares(data: &RegressionDataset) -> Result<(Vec<f64>, bool)> {
    let x = DMatrix::from_row_slice(data.n_rows(), data.width(), &data.phi);
    let y = DVector::from_column_slice(&data.y_target);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    if let Some(chol) = xtx.clone().cholesky() {
        let beta = chol.solve(&xty);
        if beta.iter().all(|v| v.is_finite()) {
            return Ok((beta.iter().copied().collect(), false));
        }
    }
    let n = xtx.nrows();
    let ridged = xtx + DMatrix::identity(n, n) * 1e-8;
    let chol = ridged.cholesky().ok_or_else(|| {
        Error::InvalidInput("least squares: normal equations are not positive definite".into())
    })?;
    Ok((chol.solve(&xty).iter().copied().collect(), true))
}

/// Fits every candidate order by least squares on the first half of the
/// estimation series and keeps the one with the smallest squared one-step
/// error on the second half. All candidates share the same first row, so
/// their errors are comparable.
pub fn ls_arx_baseline(y: &[f64], u: Option<&[f64]>, grid: &OrderGrid) -> Result<BaselineFit> {
    let candidates = grid.candidates(u.is_some());
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("empty order grid".into()));
    }
    let p = candidates.iter().map(|(a, b)| *a.max(b)).max().unwrap_or(0);
    let width = candidates.iter().map(|(a, b)| a + b).max().unwrap_or(0);
    let half = y.len() / 2;
    if half <= p + width {
        return Err(Error::SeriesTooShort {
            len: y.len(),
            required: 2 * (p + width + 1),
        });
    }

    let mut best: Option<(f64, usize, Vec<f64>, bool)> = None;
    let mut scores = Vec::with_capacity(candidates.len());
    for (i, &(n_a, n_b)) in candidates.iter().enumerate() {
        let train = build_regression_rows(y, u, n_a, n_b, p..half)?;
        let (coef, ridge) = least_squares(&train)?;
        let test = build_regression_rows(y, u, n_a, n_b, half..y.len())?;
        let sse: f64 = test.residuals(&coef).iter().map(|r| r * r).sum();
        scores.push(CandidateScore {
            n_a,
            n_b,
            sse,
            ridge,
        });
        if best.as_ref().is_none_or(|b| sse < b.0) {
            best = Some((sse, i, coef, ridge));
        }
    }
    let (_, i, coef, ridge) = best.expect("at least one candidate");
    let (n_a, n_b) = candidates[i];
    Ok(BaselineFit {
        n_a,
        n_b,
        a: coef[..n_a].to_vec(),
        b: coef[n_a..].to_vec(),
        ridge,
        candidates: scores,
    })
}
