//! The Bayesian ARX model: parameter space, transforms and log-densities.
//!
//! Output noise is a finite Gaussian mixture. Priors:
//!
//! ```text
//! a_k, b_k ~ N(0, sigma_f²)        sigma_f  ~ C+(0, 1)
//! mu_k     ~ N(0, sigma_mu²)       sigma_mu ~ C+(0, 1)
//! sigma_k  ~ C+(0, sigma_prior_scale)
//! w        ~ Dirichlet(e0, ..., e0)
//! e0       ~ Gamma(alpha_w, n_e * alpha_w)    (shape, rate)
//! ```
//!
//! The sampler works on an unconstrained vector `z`; see [`transform`] for the
//! layout.

pub(crate) mod density;
mod posterior;
mod regression;
pub(crate) mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use density::{
    dirichlet_symmetric_log_pdf, gamma_log_pdf, gmm_log_density, half_cauchy_log_pdf,
    log_likelihood, log_prior,
};
pub use posterior::{initialize, log_posterior_unconstrained, Posterior};
pub use regression::{build_regression, build_regression_rows, RegressionDataset};
pub use transform::{inverse_transform, transform, Layout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Maximum autoregressive order.
    pub n_a: usize,
    /// Maximum input order.
    pub n_b: usize,
    /// Maximum number of mixture components.
    pub n_e: usize,
    /// Shape of the Gamma hyperprior on the Dirichlet concentration.
    pub alpha_w: f64,
    /// Half-Cauchy scale of the component standard deviations.
    pub sigma_prior_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_a: 5,
            n_b: 5,
            n_e: 5,
            alpha_w: 10.0,
            sigma_prior_scale: 5.0,
        }
    }
}

impl ModelConfig {
    pub fn new(n_a: usize, n_b: usize, n_e: usize) -> Result<Self> {
        let config = Self {
            n_a,
            n_b,
            n_e,
            ..Self::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a + self.n_b == 0 {
            return Err(Error::InvalidConfig("n_a + n_b must be at least 1".into()));
        }
        if self.n_e == 0 {
            return Err(Error::InvalidConfig("n_e must be at least 1".into()));
        }
        if !(self.alpha_w > 0.0 && self.alpha_w.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha_w must be positive, got {}",
                self.alpha_w
            )));
        }
        if !(self.sigma_prior_scale > 0.0 && self.sigma_prior_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma_prior_scale must be positive, got {}",
                self.sigma_prior_scale
            )));
        }
        Ok(())
    }

    /// Number of regression coefficients, `n_a + n_b`.
    pub fn n_coef(&self) -> usize {
        self.n_a + self.n_b
    }

    /// Largest lag, i.e. the number of leading observations conditioned on.
    pub fn max_lag(&self) -> usize {
        self.n_a.max(self.n_b)
    }

    /// Dimension of the unconstrained parameter vector.
    pub fn dim(&self) -> usize {
        self.n_coef() + (self.n_e - 1) + 2 * self.n_e + 3
    }
}

/// The full parameter vector in its natural (constrained) space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_f: f64,
    pub sigma_mu: f64,
    pub e0: f64,
}

impl ParameterVector {
    /// Concatenated `[a; b]`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.a.len() + self.b.len());
        c.extend_from_slice(&self.a);
        c.extend_from_slice(&self.b);
        c
    }

    pub fn n_components(&self) -> usize {
        self.w.len()
    }

    /// Checks every invariant, including the dimensions implied by `config`.
    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        let dims = [
            (config.n_a, self.a.len()),
            (config.n_b, self.b.len()),
            (config.n_e, self.w.len()),
            (config.n_e, self.mu.len()),
            (config.n_e, self.sigma.len()),
        ];
        for (expected, actual) in dims {
            if expected != actual {
                return Err(Error::DimensionMismatch { expected, actual });
            }
        }
        let sum: f64 = self.w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {sum}, not 1"
            )));
        }
        if let Some(w) = self.w.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidParameter(format!(
                "weight {w} outside [0, 1]"
            )));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "component standard deviation {s} is not positive"
            )));
        }
        for (name, v) in [
            ("sigma_f", self.sigma_f),
            ("sigma_mu", self.sigma_mu),
            ("e0", self.e0),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} is not positive"
                )));
            }
        }
        Ok(())
    }

    /// Reorders the mixture components: component `k` of the result is
    /// component `perm[k]` of `self`.
    pub fn permute_components(&self, perm: &[usize]) -> Self {
        let pick = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            w: pick(&self.w),
            mu: pick(&self.mu),
            sigma: pick(&self.sigma),
            ..self.clone()
        }
    }
}

/// A point in the unconstrained space the sampler moves in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconstrainedVector(pub Vec<f64>);

impl UnconstrainedVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for UnconstrainedVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
