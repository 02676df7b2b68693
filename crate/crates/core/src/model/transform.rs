//! Bijection between the constrained parameters and `R^n`.
//!
//! Layout of the unconstrained vector:
//!
//! ```text
//! [ a (n_a) | b (n_b) | stick (n_e - 1) | mu (n_e) | ln sigma (n_e) | ln sigma_f | ln sigma_mu | ln e0 ]
//! ```
//!
//! Weights use logistic stick-breaking with per-coordinate offsets
//! `-ln(n_e - 1 - j)`, so the zero vector maps to uniform weights.

use crate::error::{Error, Result};
use crate::math::{logit, softplus};
use crate::model::{ModelConfig, ParameterVector, UnconstrainedVector};

/// Offsets of each block inside the unconstrained vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_a: usize,
    pub n_b: usize,
    pub n_e: usize,
    pub stick: usize,
    pub mu: usize,
    pub log_sigma: usize,
    pub log_sigma_f: usize,
    pub log_sigma_mu: usize,
    pub log_e0: usize,
    pub dim: usize,
}

impl Layout {
    pub fn new(config: &ModelConfig) -> Self {
        let n_coef = config.n_coef();
        let n_e = config.n_e;
        let stick = n_coef;
        let mu = stick + n_e - 1;
        let log_sigma = mu + n_e;
        let log_sigma_f = log_sigma + n_e;
        Self {
            n_a: config.n_a,
            n_b: config.n_b,
            n_e,
            stick,
            mu,
            log_sigma,
            log_sigma_f,
            log_sigma_mu: log_sigma_f + 1,
            log_e0: log_sigma_f + 2,
            dim: log_sigma_f + 3,
        }
    }

    pub fn n_coef(&self) -> usize {
        self.n_a + self.n_b
    }

    pub fn stick_offset(&self, j: usize) -> f64 {
        -((self.n_e - 1 - j) as f64).ln()
    }

    pub fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: z.len(),
            });
        }
        Ok(())
    }
}

/// The constrained parameters decoded from `z`, with log-weights kept in log
/// space so far-out stick coordinates never produce `ln 0`.
#[derive(Debug, Clone)]
pub(crate) struct Unpacked<'a> {
    pub coef: &'a [f64],
    pub stick: Vec<f64>,
    pub log_w: Vec<f64>,
    pub mu: &'a [f64],
    pub log_sigma: &'a [f64],
    pub sigma: Vec<f64>,
    pub sigma_f: f64,
    pub sigma_mu: f64,
    pub e0: f64,
    pub log_jacobian: f64,
}

pub(crate) fn unpack<'a>(layout: &Layout, z: &'a [f64]) -> Unpacked<'a> {
    let n_e = layout.n_e;
    let mut stick = Vec::with_capacity(n_e - 1);
    let mut log_w = Vec::with_capacity(n_e);
    let mut log_rem = 0.0;
    let mut log_jacobian = 0.0;
    for j in 0..n_e - 1 {
        let x = z[layout.stick + j] + layout.stick_offset(j);
        let log_z = -softplus(-x);
        let log_1mz = -softplus(x);
        stick.push(crate::math::logistic(x));
        log_w.push(log_rem + log_z);
        log_jacobian += log_z + log_1mz + log_rem;
        log_rem += log_1mz;
    }
    log_w.push(log_rem);

    let log_sigma = &z[layout.log_sigma..layout.log_sigma + n_e];
    let sigma: Vec<f64> = log_sigma.iter().map(|v| v.exp()).collect();
    let log_sigma_f = z[layout.log_sigma_f];
    let log_sigma_mu = z[layout.log_sigma_mu];
    let log_e0 = z[layout.log_e0];
    log_jacobian += log_sigma.iter().sum::<f64>() + log_sigma_f + log_sigma_mu + log_e0;

    Unpacked {
        coef: &z[..layout.n_coef()],
        stick,
        log_w,
        mu: &z[layout.mu..layout.mu + n_e],
        log_sigma,
        sigma,
        sigma_f: log_sigma_f.exp(),
        sigma_mu: log_sigma_mu.exp(),
        e0: log_e0.exp(),
        log_jacobian,
    }
}

impl Unpacked<'_> {
    pub fn to_parameters(&self, layout: &Layout) -> ParameterVector {
        let w: Vec<f64> = self.log_w.iter().map(|v| v.exp()).collect();
        ParameterVector {
            a: self.coef[..layout.n_a].to_vec(),
            b: self.coef[layout.n_a..].to_vec(),
            w,
            mu: self.mu.to_vec(),
            sigma: self.sigma.clone(),
            sigma_f: self.sigma_f,
            sigma_mu: self.sigma_mu,
            e0: self.e0,
        }
    }
}

/// Maps `z` to the constrained parameters and returns the log absolute
/// Jacobian determinant of the map.
pub fn transform(z: &UnconstrainedVector, config: &ModelConfig) -> Result<(ParameterVector, f64)> {
    let layout = Layout::new(config);
    layout.check_dim(z.as_slice())?;
    let u = unpack(&layout, z.as_slice());
    Ok((u.to_parameters(&layout), u.log_jacobian))
}

/// Exact inverse of [`transform`]. Rejects parameters on the boundary of
/// their support (a zero or unit weight, a zero scale).
pub fn inverse_transform(
    theta: &ParameterVector,
    config: &ModelConfig,
) -> Result<UnconstrainedVector> {
    theta.validate(config)?;
    let layout = Layout::new(config);
    let n_e = config.n_e;

    if let Some(w) = theta.w.iter().find(|w| **w <= 0.0 || **w >= 1.0) {
        if n_e > 1 || *w <= 0.0 {
            return Err(Error::BoundaryValue(format!("mixture weight {w}")));
        }
    }
    for (name, v) in [
        ("sigma_f", theta.sigma_f),
        ("sigma_mu", theta.sigma_mu),
        ("e0", theta.e0),
    ]
    .into_iter()
    .chain(theta.sigma.iter().map(|s| ("sigma_k", *s)))
    {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::BoundaryValue(format!("{name} = {v}")));
        }
    }

    let mut z = vec![0.0; layout.dim];
    z[..config.n_a].copy_from_slice(&theta.a);
    z[config.n_a..layout.n_coef()].copy_from_slice(&theta.b);

    // remaining stick lengths as tail sums
    let mut tail = vec![0.0; n_e + 1];
    for k in (0..n_e).rev() {
        tail[k] = tail[k + 1] + theta.w[k];
    }
    for j in 0..n_e - 1 {
        let frac = theta.w[j] / tail[j];
        if !(frac > 0.0 && frac < 1.0) {
            return Err(Error::BoundaryValue(format!(
                "mixture weight {}",
                theta.w[j]
            )));
        }
        z[layout.stick + j] = logit(frac) - layout.stick_offset(j);
    }
    z[layout.mu..layout.mu + n_e].copy_from_slice(&theta.mu);
    for (k, s) in theta.sigma.iter().enumerate() {
        z[layout.log_sigma + k] = s.ln();
    }
    z[layout.log_sigma_f] = theta.sigma_f.ln();
    z[layout.log_sigma_mu] = theta.sigma_mu.ln();
    z[layout.log_e0] = theta.e0.ln();
    Ok(UnconstrainedVector(z))
}
