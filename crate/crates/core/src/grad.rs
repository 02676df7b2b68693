//! Analytic gradient of the unconstrained log-posterior.
//!
//! Mixture terms use responsibilities (a softmax over per-component log
//! terms, normalised by the same log-sum-exp that gives the value). The
//! stick-breaking chain rule goes through the log-weights:
//!
//! ```text
//! ∂ ln w_k / ∂v_j = 1 - s_j   (k = j)
//!                 = -s_j      (k > j)
//! ```
//!
//! where `s_j` is the j-th stick fraction.

use crate::error::Result;
use crate::math::{digamma, HALF_LN_2PI};
use crate::model::density::{gmm_responsibilities, log_prior_parts, PriorArgs};
use crate::model::transform::{unpack, Layout, Unpacked};
use crate::model::{ModelConfig, Posterior, RegressionDataset, UnconstrainedVector};

#[derive(Debug, Clone, PartialEq)]
pub struct GradientResult {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Adds the gradient of the log-Jacobian to `grad`.
pub(crate) fn add_log_jacobian_grad(layout: &Layout, u: &Unpacked<'_>, grad: &mut [f64]) {
    let n_e = layout.n_e;
    for j in 0..n_e - 1 {
        let s = u.stick[j];
        let later = (n_e - 2 - j) as f64;
        grad[layout.stick + j] += 1.0 - 2.0 * s - later * s;
    }
    for k in 0..n_e {
        grad[layout.log_sigma + k] += 1.0;
    }
    grad[layout.log_sigma_f] += 1.0;
    grad[layout.log_sigma_mu] += 1.0;
    grad[layout.log_e0] += 1.0;
}

impl Posterior {
    /// Log-density at `z`, writing its gradient into `grad`.
    pub fn log_density_and_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let layout = self.layout();
        let config = self.config();
        let data = self.data();
        assert_eq!(z.len(), layout.dim, "unconstrained dimension");
        assert_eq!(grad.len(), layout.dim, "gradient dimension");
        grad.fill(0.0);

        let u = unpack(layout, z);
        let n_e = layout.n_e;
        let n_coef = layout.n_coef();

        // d/d ln w_k, chained through the sticks at the end
        let mut g_logw = vec![0.0; n_e];

        let log_const: Vec<f64> = (0..n_e)
            .map(|k| u.log_w[k] - HALF_LN_2PI - u.log_sigma[k])
            .collect();
        let inv_sigma: Vec<f64> = u.sigma.iter().map(|s| 1.0 / s).collect();
        let mut resp = vec![0.0f64; n_e];
        let mut lik = 0.0;
        {
            let (g_coef, rest) = grad.split_at_mut(n_coef);
            let (g_mu, rest) = rest[layout.mu - n_coef..].split_at_mut(n_e);
            let g_ls = &mut rest[..n_e];
            for (row, y) in data.rows() {
                let e = y - crate::math::dot(row, u.coef);
                lik += gmm_responsibilities(e, &log_const, u.mu, &inv_sigma, &mut resp);
                let mut d_e = 0.0;
                for k in 0..n_e {
                    let r = (e - u.mu[k]) * inv_sigma[k];
                    let rs = resp[k] * r * inv_sigma[k];
                    d_e -= rs;
                    g_mu[k] += rs;
                    g_ls[k] += resp[k] * (r * r - 1.0);
                    g_logw[k] += resp[k];
                }
                for (g, x) in g_coef.iter_mut().zip(row) {
                    *g -= d_e * x;
                }
            }
        }

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
            config,
        );

        // coefficients ~ N(0, sigma_f²), sigma_f ~ C+(0, 1)
        let inv_vf = 1.0 / (u.sigma_f * u.sigma_f);
        let mut ss = 0.0;
        for (j, c) in u.coef.iter().enumerate() {
            grad[j] -= c * inv_vf;
            ss += c * c;
        }
        let sf2 = u.sigma_f * u.sigma_f;
        grad[layout.log_sigma_f] += -(n_coef as f64) + ss * inv_vf - 2.0 * sf2 / (1.0 + sf2);

        // means ~ N(0, sigma_mu²), sigma_mu ~ C+(0, 1)
        let inv_vm = 1.0 / (u.sigma_mu * u.sigma_mu);
        let mut ss = 0.0;
        for (k, m) in u.mu.iter().enumerate() {
            grad[layout.mu + k] -= m * inv_vm;
            ss += m * m;
        }
        let sm2 = u.sigma_mu * u.sigma_mu;
        grad[layout.log_sigma_mu] += -(n_e as f64) + ss * inv_vm - 2.0 * sm2 / (1.0 + sm2);

        // sigma_k ~ C+(0, scale)
        for k in 0..n_e {
            let r = u.sigma[k] / config.sigma_prior_scale;
            grad[layout.log_sigma + k] -= 2.0 * r * r / (1.0 + r * r);
        }

        // Dirichlet(e0) on w and Gamma(alpha, n_e alpha) on e0
        let kf = n_e as f64;
        let sum_logw: f64 = u.log_w.iter().sum();
        for g in g_logw.iter_mut() {
            *g += u.e0 - 1.0;
        }
        let d_e0 = kf * digamma(kf * u.e0) - kf * digamma(u.e0) + sum_logw;
        grad[layout.log_e0] += u.e0 * d_e0 + (config.alpha_w - 1.0) - kf * config.alpha_w * u.e0;

        // stick-breaking chain rule
        let mut tail = 0.0;
        for j in (0..n_e - 1).rev() {
            tail += g_logw[j + 1];
            let s = u.stick[j];
            grad[layout.stick + j] += g_logw[j] * (1.0 - s) - s * tail;
        }

        add_log_jacobian_grad(layout, &u, grad);
        prior + lik + u.log_jacobian
    }

    pub fn gradient(&self, z: &[f64]) -> GradientResult {
        let mut grad = vec![0.0; self.dim()];
        let value = self.log_density_and_grad(z, &mut grad);
        GradientResult { value, grad }
    }
}

pub fn grad_log_posterior(
    z: &UnconstrainedVector,
    data: &RegressionDataset,
    config: &ModelConfig,
) -> Result<GradientResult> {
    Layout::new(config).check_dim(z.as_slice())?;
    let post = Posterior::new(config.clone(), data.clone())?;
    Ok(post.gradient(z.as_slice()))
}

/// Coordinate-wise central differences of an arbitrary function.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, z: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "step must be positive");
    let mut x = z.to_vec();
    (0..z.len())
        .map(|i| {
            x[i] = z[i] + h;
            let up = f(&x);
            x[i] = z[i] - h;
            let down = f(&x);
            x[i] = z[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Finite-difference gradient of the unconstrained log-posterior.
pub fn finite_difference_gradient(
    z: &UnconstrainedVector,
    data: &RegressionDataset,
    config: &ModelConfig,
    h: f64,
) -> Result<Vec<f64>> {
    Layout::new(config).check_dim(z.as_slice())?;
    if !(h > 0.0) {
        return Err(crate::Error::InvalidInput(format!(
            "step {h} must be positive"
        )));
    }
    let post = Posterior::new(config.clone(), data.clone())?;
    Ok(central_difference(|x| post.log_density(x), z.as_slice(), h))
}
