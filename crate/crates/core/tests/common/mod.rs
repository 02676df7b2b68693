//! Invariant checks shared by the property tests and the acceptance runner.

#![allow(dead_code)]

use barx_core::data::generate_experiment1;
use barx_core::inference::{
    hpd_region, linspace, noise_density_estimate, predictive_density, trapezoid,
};
use barx_core::model::{
    build_regression, gmm_log_density, inverse_transform, log_likelihood,
    log_posterior_unconstrained, transform, Layout,
};
use barx_core::sampler::{leapfrog, PhaseState};
use barx_core::{ModelConfig, ParameterVector, Posterior, RegressionDataset, UnconstrainedVector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const CASES: u32 = 128;

#[derive(Debug, Clone)]
pub struct ModelCase {
    pub config: ModelConfig,
    pub z: Vec<f64>,
    pub perm: Vec<usize>,
}

impl ModelCase {
    pub fn params(&self) -> ParameterVector {
        transform(&UnconstrainedVector(self.z.clone()), &self.config)
            .unwrap()
            .0
    }

    pub fn data(&self) -> RegressionDataset {
        let ds = generate_experiment1(120, 7).unwrap();
        let u = if self.config.n_b == 0 { None } else { ds.u() };
        build_regression(&ds.y, u, &self.config).unwrap()
    }
}

pub fn model_case() -> impl Strategy<Value = ModelCase> {
    (1usize..=3, 0usize..=2, 1usize..=4).prop_flat_map(|(n_a, n_b, n_e)| {
        let config = ModelConfig::new(n_a, n_b, n_e).unwrap();
        let dim = Layout::new(&config).dim;
        (
            Just(config),
            prop::collection::vec(-2.0f64..2.0, dim),
            Just((0..n_e).collect::<Vec<_>>()).prop_shuffle(),
        )
            .prop_map(|(config, z, perm)| ModelCase { config, z, perm })
    })
}

/// Jacobian of `f` at `x` by the five-point central stencil, one column per
/// perturbed input.
pub fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: F, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let mut eval = |k: f64| {
            xp[j] = x[j] + k * h;
            f(&xp)
        };
        let (p2, p1, m1, m2) = (eval(2.0), eval(1.0), eval(-1.0), eval(-2.0));
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
        }
    }
    jac
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), TestCaseError> {
    prop_assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol:e})");
    Ok(())
}

pub fn transform_round_trip(case: &ModelCase) -> Result<(), TestCaseError> {
    let theta = case.params();
    prop_assert!(theta.validate(&case.config).is_ok());
    let back = inverse_transform(&theta, &case.config).unwrap();
    for (a, b) in back.0.iter().zip(&case.z) {
        close(*a, *b, 1e-10, "round trip")?;
    }
    Ok(())
}

/// Constrained coordinates with the last (dependent) weight dropped.
fn constrained(z: &[f64], config: &ModelConfig) -> Vec<f64> {
    let t = transform(&UnconstrainedVector(z.to_vec()), config)
        .unwrap()
        .0;
    let mut c = t.coefficients();
    c.extend_from_slice(&t.w[..t.w.len() - 1]);
    c.extend_from_slice(&t.mu);
    c.extend_from_slice(&t.sigma);
    c.extend([t.sigma_f, t.sigma_mu, t.e0]);
    c
}

pub fn jacobian_determinant(case: &ModelCase) -> Result<(), TestCaseError> {
    let log_jac = transform(&UnconstrainedVector(case.z.clone()), &case.config)
        .unwrap()
        .1;
    let det = jacobian(|x| constrained(x, &case.config), &case.z, 1e-5)
        .determinant()
        .abs();
    let expected = log_jac.exp();
    prop_assert!(
        (det - expected).abs() <= 1e-4 * expected,
        "numerical det {det} vs exp(log_jacobian) {expected}"
    );
    Ok(())
}

pub fn permutation_invariance(case: &ModelCase) -> Result<(), TestCaseError> {
    let data = case.data();
    let theta = case.params();
    let z_perm = inverse_transform(&theta.permute_components(&case.perm), &case.config).unwrap();
    let a = log_posterior_unconstrained(&UnconstrainedVector(case.z.clone()), &data, &case.config)
        .unwrap();
    let b = log_posterior_unconstrained(&z_perm, &data, &case.config).unwrap();
    close(a, b, 1e-10, "log posterior under permutation")?;

    let post = Posterior::new(case.config.clone(), data).unwrap();
    let g = post.gradient(&case.z).grad;
    let gp = post.gradient(&z_perm.0).grad;
    let layout = post.layout();
    let tol = |x: f64| 1e-8 * x.abs().max(1.0);
    for j in 0..layout.n_coef() {
        close(gp[j], g[j], tol(g[j]), "coefficient gradient")?;
    }
    for (k, &src) in case.perm.iter().enumerate() {
        for off in [layout.mu, layout.log_sigma] {
            close(
                gp[off + k],
                g[off + src],
                tol(g[off + src]),
                "component gradient",
            )?;
        }
    }
    Ok(())
}

pub fn gmm_normalization(case: &ModelCase) -> Result<(), TestCaseError> {
    let t = case.params();
    let lo =
        t.mu.iter()
            .zip(&t.sigma)
            .map(|(m, s)| m - 12.0 * s)
            .fold(f64::INFINITY, f64::min);
    let hi =
        t.mu.iter()
            .zip(&t.sigma)
            .map(|(m, s)| m + 12.0 * s)
            .fold(f64::NEG_INFINITY, f64::max);
    let grid = linspace(lo, hi, 40_001);
    let dens: Vec<f64> = grid
        .iter()
        .map(|&e| gmm_log_density(e, &t.w, &t.mu, &t.sigma).unwrap().exp())
        .collect();
    close(
        trapezoid(&grid, &dens),
        1.0,
        1e-6,
        "mixture density integral",
    )
}

/// Predictive and noise densities integrate to one and do not depend on the
/// component labels.
pub fn predictive_densities(case: &ModelCase) -> Result<(), TestCaseError> {
    let data = case.data();
    let phi = data.row(0).to_vec();
    let half: Vec<f64> = case.z.iter().map(|v| 0.5 * v).collect();
    let draws = vec![
        case.params(),
        transform(&UnconstrainedVector(half), &case.config)
            .unwrap()
            .0,
    ];
    let permuted: Vec<ParameterVector> = draws
        .iter()
        .map(|d| d.permute_components(&case.perm))
        .collect();

    let spread = draws
        .iter()
        .flat_map(|d| d.sigma.iter())
        .fold(0.0f64, |a, s| a.max(*s));
    let centers: Vec<f64> = draws
        .iter()
        .flat_map(|d| {
            let m: f64 = phi.iter().zip(d.coefficients()).map(|(x, c)| x * c).sum();
            d.mu.iter().map(move |mu| m + mu).collect::<Vec<_>>()
        })
        .collect();
    let lo = centers.iter().fold(f64::INFINITY, |a, c| a.min(*c)) - 12.0 * spread;
    let hi = centers.iter().fold(f64::NEG_INFINITY, |a, c| a.max(*c)) + 12.0 * spread;
    let grid = linspace(lo, hi, 4001);

    let pd = predictive_density(&draws, &phi, &grid, Some(0)).unwrap();
    prop_assert!(pd.density.iter().all(|d| *d >= 0.0));
    let integral = pd.integral();
    prop_assert!(
        (0.99..=1.01).contains(&integral),
        "predictive integral {integral}"
    );
    let pd_perm = predictive_density(&permuted, &phi, &grid, Some(0)).unwrap();
    for (a, b) in pd.density.iter().zip(&pd_perm.density) {
        close(
            *a,
            *b,
            1e-12 * a.abs().max(1.0),
            "predictive density under permutation",
        )?;
    }

    let mu_lo = draws
        .iter()
        .flat_map(|d| d.mu.iter())
        .fold(f64::INFINITY, |a, m| a.min(*m));
    let mu_hi = draws
        .iter()
        .flat_map(|d| d.mu.iter())
        .fold(f64::NEG_INFINITY, |a, m| a.max(*m));
    let ngrid = linspace(mu_lo - 12.0 * spread, mu_hi + 12.0 * spread, 4001);
    let nd = noise_density_estimate(&draws, &ngrid).unwrap();
    let integral = nd.integral();
    prop_assert!(
        (0.99..=1.01).contains(&integral),
        "noise integral {integral}"
    );
    let nd_perm = noise_density_estimate(&permuted, &ngrid).unwrap();
    for (a, b) in nd.density.iter().zip(&nd_perm.density) {
        close(
            *a,
            *b,
            1e-12 * a.abs().max(1.0),
            "noise density under permutation",
        )?;
    }
    Ok(())
}

pub fn hpd_coverage(case: &ModelCase, level: f64) -> Result<(), TestCaseError> {
    let t = case.params();
    let spread = t.sigma.iter().fold(0.0f64, |a, s| a.max(*s));
    let lo = t.mu.iter().fold(f64::INFINITY, |a, m| a.min(*m)) - 12.0 * spread;
    let hi = t.mu.iter().fold(f64::NEG_INFINITY, |a, m| a.max(*m)) + 12.0 * spread;
    let nd = noise_density_estimate([&t], &linspace(lo, hi, 4001)).unwrap();
    let region = hpd_region(&nd, level).unwrap();
    prop_assert!(!region.truncated);
    close(region.mass, level, 0.01, "HPD mass")?;
    let covered: f64 = region
        .intervals
        .iter()
        .map(|(a, b)| nd.mass_between(*a, *b))
        .sum();
    close(
        covered / nd.integral(),
        level,
        0.01,
        "HPD mass by quadrature",
    )?;
    for (a, b) in &region.intervals {
        prop_assert!(a <= b);
    }
    for w in region.intervals.windows(2) {
        prop_assert!(
            w[0].1 < w[1].0,
            "intervals overlap or are unsorted: {:?}",
            region.intervals
        );
    }
    Ok(())
}

pub fn likelihood_decomposition(case: &ModelCase, cut: f64) -> Result<(), TestCaseError> {
    let data = case.data();
    let k = ((data.n_rows() as f64 * cut) as usize).clamp(1, data.n_rows() - 1);
    let first = data.slice(0..k);
    let second = data.slice(k..data.n_rows());
    let theta = case.params();
    let whole = log_likelihood(&theta, &first.concat(&second).unwrap()).unwrap();
    let parts = log_likelihood(&theta, &first).unwrap() + log_likelihood(&theta, &second).unwrap();
    close(
        whole,
        parts,
        1e-9 * whole.abs().max(1.0),
        "likelihood decomposition",
    )
}

/// The leapfrog map has unit Jacobian determinant. The step shrinks with the
/// local gradient so that central differences can still resolve the map.
pub fn leapfrog_volume(case: &ModelCase) -> Result<(), TestCaseError> {
    let post = Posterior::new(case.config.clone(), case.data()).unwrap();
    let n = case.z.len();
    let g_max = post
        .gradient(&case.z)
        .grad
        .iter()
        .fold(1.0f64, |a, g| a.max(g.abs()));
    let eps = (0.1 / g_max).min(2e-3);
    let mass: Vec<f64> = (0..n).map(|i| 0.5 + (i % 3) as f64 * 0.5).collect();
    let mut x0: Vec<f64> = case.z.clone();
    x0.extend(case.z.iter().map(|v| v.sin()));
    let flow = |x: &[f64]| {
        let state = PhaseState::new(x[..n].to_vec(), x[n..].to_vec()).unwrap();
        let out = leapfrog(&state, eps, 3, &mass, &post).unwrap().state;
        let mut v = out.z;
        v.extend(out.p);
        v
    };
    close(
        jacobian(flow, &x0, 1e-5).determinant(),
        1.0,
        1e-4,
        "leapfrog Jacobian determinant",
    )
}
