use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Lagged design matrix of an ARX model.
///
/// Row `i` corresponds to time index `first_t + i` and holds
/// `[-y[t-1], ..., -y[t-n_a], u[t-1], ..., u[t-n_b]]`, so that the noiseless
/// prediction is `row · [a; b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub n_a: usize,
    pub n_b: usize,
    /// Time index of the first row.
    pub first_t: usize,
    /// Row-major design matrix, `n_rows * width` entries.
    pub phi: Vec<f64>,
    pub y_target: Vec<f64>,
    /// Range of the whole output series the rows were built from.
    pub y_min: f64,
    pub y_max: f64,
}

impl RegressionDataset {
    pub fn width(&self) -> usize {
        self.n_a + self.n_b
    }

    pub fn n_rows(&self) -> usize {
        self.y_target.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.phi[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.phi
            .chunks_exact(self.width())
            .zip(self.y_target.iter().copied())
    }

    /// Residuals `y_t - phi_t · coef`.
    pub fn residuals(&self, coef: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|(row, y)| y - crate::math::dot(row, coef))
            .collect()
    }

    /// Rows `range` of this dataset as a new dataset.
    pub fn slice(&self, range: Range<usize>) -> Self {
        let w = self.width();
        Self {
            n_a: self.n_a,
            n_b: self.n_b,
            first_t: self.first_t + range.start,
            phi: self.phi[range.start * w..range.end * w].to_vec(),
            y_target: self.y_target[range].to_vec(),
            y_min: self.y_min,
            y_max: self.y_max,
        }
    }

    /// Stacks the rows of `other` below these rows.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.width() != other.width() {
            return Err(Error::DimensionMismatch {
                expected: self.width(),
                actual: other.width(),
            });
        }
        let mut out = self.clone();
        out.phi.extend_from_slice(&other.phi);
        out.y_target.extend_from_slice(&other.y_target);
        out.y_min = self.y_min.min(other.y_min);
        out.y_max = self.y_max.max(other.y_max);
        Ok(out)
    }
}

fn check_series(y: &[f64], u: Option<&[f64]>, n_b: usize) -> Result<()> {
    if let Some(u) = u {
        if u.len() != y.len() {
            return Err(Error::LengthMismatch {
                y: y.len(),
                u: u.len(),
            });
        }
    } else if n_b > 0 {
        return Err(Error::MissingInput { n_b });
    }
    Ok(())
}

/// Builds the design matrix for every usable time step `t = p..T`, where
/// `p = max(n_a, n_b)`. The first `p` observations only enter as regressors.
pub fn build_regression(
    y: &[f64],
    u: Option<&[f64]>,
    config: &ModelConfig,
) -> Result<RegressionDataset> {
    let p = config.max_lag();
    if y.len() <= p {
        return Err(Error::SeriesTooShort {
            len: y.len(),
            required: p,
        });
    }
    build_regression_rows(y, u, config.n_a, config.n_b, p..y.len())
}

/// Builds rows for the time indices in `times`, reading lags from the full
/// series. Used for validation data whose regressors reach back across the
/// estimation/validation boundary.
pub fn build_regression_rows(
    y: &[f64],
    u: Option<&[f64]>,
    n_a: usize,
    n_b: usize,
    times: Range<usize>,
) -> Result<RegressionDataset> {
    check_series(y, u, n_b)?;
    let p = n_a.max(n_b);
    if times.start < p || times.end > y.len() || times.is_empty() {
        return Err(Error::SeriesTooShort {
            len: y.len(),
            required: p.max(times.end),
        });
    }
    let width = n_a + n_b;
    let mut phi = Vec::with_capacity(times.len() * width);
    for t in times.clone() {
        phi.extend((1..=n_a).map(|k| -y[t - k]));
        if let Some(u) = u {
            phi.extend((1..=n_b).map(|k| u[t - k]));
        }
    }
    let (y_min, y_max) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    Ok(RegressionDataset {
        n_a,
        n_b,
        first_t: times.start,
        phi,
        y_target: y[times].to_vec(),
        y_min,
        y_max,
    })
}
