use rand::Rng;

use crate::error::{Error, Result};
use crate::model::density::{log_likelihood_parts, log_prior_parts, PriorArgs};
use crate::model::transform::{unpack, Layout};
use crate::model::{ModelConfig, RegressionDataset, UnconstrainedVector};

/// The log-posterior in unconstrained space, bound to one dataset.
#[derive(Debug, Clone)]
pub struct Posterior {
    config: ModelConfig,
    layout: Layout,
    data: RegressionDataset,
}

impl Posterior {
    pub fn new(config: ModelConfig, data: RegressionDataset) -> Result<Self> {
        config.validate()?;
        if data.n_a != config.n_a || data.n_b != config.n_b {
            return Err(Error::DimensionMismatch {
                expected: config.n_coef(),
                actual: data.width(),
            });
        }
        if data.n_rows() == 0 {
            return Err(Error::InvalidInput("dataset has no rows".into()));
        }
        Ok(Self {
            layout: Layout::new(&config),
            config,
            data,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn data(&self) -> &RegressionDataset {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    /// Log-prior + log-likelihood + log-Jacobian at `z`.
    ///
    /// Panics if `z` has the wrong length; use [`log_posterior_unconstrained`]
    /// for a checked call.
    pub fn log_density(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.layout.dim, "unconstrained dimension");
        let u = unpack(&self.layout, z);
        let prior = log_prior_parts(
            &PriorArgs {
                coef: u.coef,
                log_w: &u.log_w,
                mu: u.mu,
                sigma: &u.sigma,
                sigma_f: u.sigma_f,
                sigma_mu: u.sigma_mu,
                e0: u.e0,
            },
            &self.config,
        );
        let lik = log_likelihood_parts(u.coef, &u.log_w, u.mu, &u.sigma, u.log_sigma, &self.data);
        prior + lik + u.log_jacobian
    }
}

pub fn log_posterior_unconstrained(
    z: &UnconstrainedVector,
    data: &RegressionDataset,
    config: &ModelConfig,
) -> Result<f64> {
    let layout = Layout::new(config);
    layout.check_dim(z.as_slice())?;
    let post = Posterior::new(config.clone(), data.clone())?;
    Ok(post.log_density(z.as_slice()))
}

/// Starting point for a chain: coefficients uniform on (-1, 1), component
/// means on an equally spaced grid over the output range, uniform weights,
/// every scale and the concentration at 1.
pub fn initialize<R: Rng + ?Sized>(
    config: &ModelConfig,
    data: &RegressionDataset,
    rng: &mut R,
) -> UnconstrainedVector {
    let layout = Layout::new(config);
    let mut z = vec![0.0; layout.dim];
    for c in z[..layout.n_coef()].iter_mut() {
        *c = rng.random_range(-1.0..1.0);
    }
    let n_e = config.n_e;
    for k in 0..n_e {
        z[layout.mu + k] = if n_e == 1 {
            0.5 * (data.y_min + data.y_max)
        } else {
            data.y_min + (data.y_max - data.y_min) * k as f64 / (n_e - 1) as f64
        };
    }
    // stick coordinates, log-scales and log e0 stay at zero
    UnconstrainedVector(z)
}
