//! Reference targets with known moments, for sampler checks and benchmarks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math::{log_sum_exp, normal_log_pdf};
use crate::sampler::LogDensity;

/// Independent Gaussians.
#[derive(Debug, Clone)]
pub struct DiagonalGaussian {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            sd: vec![1.0; dim],
        }
    }
}

impl LogDensity for DiagonalGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density_and_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = 0.0;
        for i in 0..z.len() {
            let r = (z[i] - self.mean[i]) / self.sd[i];
            lp -= 0.5 * r * r;
            grad[i] = -r / self.sd[i];
        }
        lp
    }
}

/// Multivariate Gaussian with a dense covariance.
#[derive(Debug, Clone)]
pub struct CorrelatedGaussian {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl CorrelatedGaussian {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let precision = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("covariance is not positive definite".into()))?
            .inverse();
        Ok(Self {
            mean: DVector::from_vec(mean),
            covariance,
            precision,
        })
    }

    /// Zero-mean, unit-variance bivariate Gaussian with correlation `rho`.
    pub fn bivariate(rho: f64) -> Result<Self> {
        Self::new(
            vec![0.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]),
        )
    }
}

impl LogDensity for CorrelatedGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density_and_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let d = DVector::from_column_slice(z) - &self.mean;
        let pd = &self.precision * &d;
        for (g, v) in grad.iter_mut().zip(pd.iter()) {
            *g = -v;
        }
        -0.5 * d.dot(&pd)
    }
}

/// One-dimensional Gaussian mixture.
#[derive(Debug, Clone)]
pub struct GaussianMixture1d {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl GaussianMixture1d {
    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((w, mu), s)| w * (s * s + mu * mu))
            .sum::<f64>()
            - m * m
    }
}

impl LogDensity for GaussianMixture1d {
    fn dim(&self) -> usize {
        1
    }

    fn log_density_and_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((w, m), s)| w.ln() + normal_log_pdf(z[0], *m, *s))
            .collect();
        let lse = log_sum_exp(&terms);
        grad[0] = terms
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((t, m), s)| (t - lse).exp() * -(z[0] - m) / (s * s))
            .sum();
        lse
    }
}
