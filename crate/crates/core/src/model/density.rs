use crate::error::{Error, Result};
use crate::math::{ln_gamma, log_sum_exp, HALF_LN_2PI, LN_2_OVER_PI};
use crate::model::{ModelConfig, ParameterVector, RegressionDataset};

/// Half-Cauchy log-density `ln(2 / (π γ (1 + (x/γ)²)))` on `x ≥ 0`.
pub fn half_cauchy_log_pdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = x / scale;
    LN_2_OVER_PI - scale.ln() - (r * r).ln_1p()
}

/// Symmetric Dirichlet log-density evaluated at log-weights.
pub fn dirichlet_symmetric_log_pdf(log_w: &[f64], concentration: f64) -> f64 {
    let k = log_w.len() as f64;
    ln_gamma(k * concentration) - k * ln_gamma(concentration)
        + (concentration - 1.0) * log_w.iter().sum::<f64>()
}

/// Gamma log-density in the shape–rate parameterisation.
pub fn gamma_log_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

fn normal_terms_log_pdf(xs: &[f64], scale: f64) -> f64 {
    let n = xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| x * x).sum();
    -n * (HALF_LN_2PI + scale.ln()) - 0.5 * ss / (scale * scale)
}

/// Mixture log-density written against log-weights and log-scales.
/// `buf` must hold at least `mu.len()` entries.
#[inline]
pub(crate) fn gmm_log_density_parts(
    e: f64,
    log_w: &[f64],
    mu: &[f64],
    sigma: &[f64],
    log_sigma: &[f64],
    buf: &mut [f64],
) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for k in 0..mu.len() {
        let r = (e - mu[k]) / sigma[k];
        let v = log_w[k] - HALF_LN_2PI - log_sigma[k] - 0.5 * r * r;
        buf[k] = v;
        max = max.max(v);
    }
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = buf[..mu.len()].iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// Mixture log-density from per-component constants
/// `ln w_k − ½ln 2π − ln σ_k` and inverse scales. Writes the posterior
/// responsibilities of the components into `resp`.
#[inline]
pub(crate) fn gmm_responsibilities(
    e: f64,
    log_const: &[f64],
    mu: &[f64],
    inv_sigma: &[f64],
    resp: &mut [f64],
) -> f64 {
    let n = mu.len();
    let mut max = f64::NEG_INFINITY;
    for k in 0..n {
        let r = (e - mu[k]) * inv_sigma[k];
        let v = log_const[k] - 0.5 * r * r;
        resp[k] = v;
        max = max.max(v);
    }
    if max == f64::NEG_INFINITY {
        resp[..n].fill(0.0);
        return max;
    }
    let mut s = 0.0;
    for v in &mut resp[..n] {
        *v = (*v - max).exp();
        s += *v;
    }
    let inv = 1.0 / s;
    for v in &mut resp[..n] {
        *v *= inv;
    }
    max + s.ln()
}

/// `ln Σ_k w_k N(e; mu_k, sigma_k²)` via log-sum-exp.
pub fn gmm_log_density(e: f64, w: &[f64], mu: &[f64], sigma: &[f64]) -> Result<f64> {
    if w.len() != mu.len() || w.len() != sigma.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            actual: mu.len().min(sigma.len()),
        });
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "component standard deviation {s} is not positive"
        )));
    }
    let terms: Vec<f64> = w
        .iter()
        .zip(mu)
        .zip(sigma)
        .map(|((w, m), s)| {
            let r = (e - m) / s;
            w.ln() - HALF_LN_2PI - s.ln() - 0.5 * r * r
        })
        .collect();
    Ok(log_sum_exp(&terms))
}

pub(crate) fn log_likelihood_parts(
    coef: &[f64],
    log_w: &[f64],
    mu: &[f64],
    sigma: &[f64],
    log_sigma: &[f64],
    data: &RegressionDataset,
) -> f64 {
    let mut buf = vec![0.0; mu.len()];
    data.rows()
        .map(|(row, y)| {
            let e = y - crate::math::dot(row, coef);
            gmm_log_density_parts(e, log_w, mu, sigma, log_sigma, &mut buf)
        })
        .sum()
}

/// Conditional log-likelihood: the sum over design rows of the mixture
/// log-density of the residual `y_t - phi_t · [a; b]`.
pub fn log_likelihood(theta: &ParameterVector, data: &RegressionDataset) -> Result<f64> {
    if theta.a.len() != data.n_a || theta.b.len() != data.n_b {
        return Err(Error::DimensionMismatch {
            expected: data.width(),
            actual: theta.a.len() + theta.b.len(),
        });
    }
    if let Some(s) = theta.sigma.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "component standard deviation {s} is not positive"
        )));
    }
    let log_w: Vec<f64> = theta.w.iter().map(|w| w.ln()).collect();
    let log_sigma: Vec<f64> = theta.sigma.iter().map(|s| s.ln()).collect();
    Ok(log_likelihood_parts(
        &theta.coefficients(),
        &log_w,
        &theta.mu,
        &theta.sigma,
        &log_sigma,
        data,
    ))
}

pub(crate) struct PriorArgs<'a> {
    pub coef: &'a [f64],
    pub log_w: &'a [f64],
    pub mu: &'a [f64],
    pub sigma: &'a [f64],
    pub sigma_f: f64,
    pub sigma_mu: f64,
    pub e0: f64,
}

pub(crate) fn log_prior_parts(p: &PriorArgs<'_>, config: &ModelConfig) -> f64 {
    let n_e = config.n_e as f64;
    normal_terms_log_pdf(p.coef, p.sigma_f)
        + half_cauchy_log_pdf(p.sigma_f, 1.0)
        + normal_terms_log_pdf(p.mu, p.sigma_mu)
        + half_cauchy_log_pdf(p.sigma_mu, 1.0)
        + p.sigma
            .iter()
            .map(|&s| half_cauchy_log_pdf(s, config.sigma_prior_scale))
            .sum::<f64>()
        + dirichlet_symmetric_log_pdf(p.log_w, p.e0)
        + gamma_log_pdf(p.e0, config.alpha_w, n_e * config.alpha_w)
}

/// Joint log-prior density of all parameters (normalised).
pub fn log_prior(theta: &ParameterVector, config: &ModelConfig) -> Result<f64> {
    theta.validate(config)?;
    let log_w: Vec<f64> = theta.w.iter().map(|w| w.ln()).collect();
    Ok(log_prior_parts(
        &PriorArgs {
            coef: &theta.coefficients(),
            log_w: &log_w,
            mu: &theta.mu,
            sigma: &theta.sigma,
            sigma_f: theta.sigma_f,
            sigma_mu: theta.sigma_mu,
            e0: theta.e0,
        },
        config,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_regression;
    use std::f64::consts::PI;

    // Independent scalar pdf, written out longhand.
    fn gauss_pdf(x: f64, m: f64, s: f64) -> f64 {
        (-(x - m) * (x - m) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt())
    }

    #[test]
    fn standard_normal_at_mode() {
        let v = gmm_log_density(0.0, &[1.0], &[0.0], &[1.0]).unwrap();
        assert!((v - (-0.918_938_533_204_672_7)).abs() < 1e-12);
        assert!((v - (1.0 / (2.0 * PI).sqrt()).ln()).abs() < 1e-14);
    }

    #[test]
    fn bimodal_mixture_matches_direct_sum() {
        let v = gmm_log_density(0.0, &[0.4, 0.6], &[7.0, 0.0], &[1.0, 1.0]).unwrap();
        let direct = (0.4 * gauss_pdf(0.0, 7.0, 1.0) + 0.6 * gauss_pdf(0.0, 0.0, 1.0)).ln();
        assert!((v - direct).abs() < 1e-13, "{v} vs {direct}");
    }

    #[test]
    fn far_residual_is_finite() {
        let v = gmm_log_density(1000.0, &[0.5, 0.5], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(v.is_finite());
        let expected = -HALF_LN_2PI - 0.5 * 1000.0 * 1000.0;
        assert!((v - expected).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_scale_rejected() {
        assert!(gmm_log_density(0.0, &[1.0], &[0.0], &[0.0]).is_err());
        assert!(gmm_log_density(0.0, &[0.5, 0.5], &[0.0, 1.0], &[1.0, -2.0]).is_err());
    }

    #[test]
    fn single_row_likelihood() {
        let config = ModelConfig::new(1, 0, 1).unwrap();
        // residual at t=1: y1 - (-y0 * a) = 0.5 - (-1 * -0.5) = 0
        let data = build_regression(&[1.0, 0.5], None, &config).unwrap();
        let theta = ParameterVector {
            a: vec![-0.5],
            b: vec![],
            w: vec![1.0],
            mu: vec![0.0],
            sigma: vec![1.0],
            sigma_f: 1.0,
            sigma_mu: 1.0,
            e0: 1.0,
        };
        let ll = log_likelihood(&theta, &data).unwrap();
        assert!((ll + 0.918_938_533_204_672_7).abs() < 1e-12);

        let mut wrong = theta;
        wrong.a.push(0.0);
        assert!(matches!(
            log_likelihood(&wrong, &data),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uniform_dirichlet_density() {
        let log_w = vec![(0.2f64).ln(); 5];
        let v = dirichlet_symmetric_log_pdf(&log_w, 1.0);
        assert!((v - 24f64.ln()).abs() < 1e-10, "{v}");
        assert!((v - 3.178_05).abs() < 1e-5);
    }

    #[test]
    fn half_cauchy_mode() {
        assert!((half_cauchy_log_pdf(0.0, 1.0) - (-0.451_58)).abs() < 1e-5);
        assert!((half_cauchy_log_pdf(0.0, 1.0) - (2.0 / PI).ln()).abs() < 1e-14);
        // scale 5 at x = 5: 2 / (5π · 2)
        assert!((half_cauchy_log_pdf(5.0, 5.0) - (1.0 / (5.0 * PI)).ln()).abs() < 1e-14);
    }

    #[test]
    fn gamma_hyperprior_has_mean_one_over_ne() {
        // crude quadrature of x * pdf(x) for Gamma(10, 50)
        let (shape, rate) = (10.0, 50.0);
        let h = 1e-5;
        let mut mean = 0.0;
        let mut mass = 0.0;
        let mut x = h;
        while x < 2.0 {
            let p = gamma_log_pdf(x, shape, rate).exp();
            mass += p * h;
            mean += x * p * h;
            x += h;
        }
        assert!((mass - 1.0).abs() < 1e-4);
        assert!((mean - 0.2).abs() < 1e-4);
    }

    #[test]
    fn prior_rejects_invalid_theta() {
        let config = ModelConfig::new(1, 0, 2).unwrap();
        let theta = ParameterVector {
            a: vec![0.0],
            b: vec![],
            w: vec![0.9, 0.3],
            mu: vec![0.0, 0.0],
            sigma: vec![1.0, 1.0],
            sigma_f: 1.0,
            sigma_mu: 1.0,
            e0: 1.0,
        };
        assert!(log_prior(&theta, &config).is_err());
    }
}
