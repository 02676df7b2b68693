//! Convergence diagnostics: split-R̂, effective sample size, divergences and
//! energy BFMI.
//!
//! All functions are pure functions of the draw arrays. R̂ and ESS are
//! reported for the regression coefficients and the log-density only; the
//! mixture parameters are not identified under label switching.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{mean, variance};
use crate::sampler::PosteriorDraws;

/// Potential scale reduction. `degenerate` is set (and `value` is NaN) when
/// the within-chain variance vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rhat {
    pub value: f64,
    pub degenerate: bool,
}

fn split_halves(chains: &[Vec<f64>], min_len: usize) -> Result<Vec<&[f64]>> {
    if chains.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "at least 2 chains required, got {}",
            chains.len()
        )));
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < min_len {
        return Err(Error::InvalidInput(format!(
            "chains need at least {min_len} draws, shortest has {n}"
        )));
    }
    let half = n / 2;
    Ok(chains
        .iter()
        .flat_map(|c| {
            let c = &c[..n];
            [&c[..half], &c[n - half..]]
        })
        .collect())
}

/// Classic split-R̂: every chain is cut in half and the halves are compared
/// through the between/within variance ratio.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<Rhat> {
    let halves = split_halves(chains, 4)?;
    let m = halves.len() as f64;
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let w = halves.iter().map(|h| variance(h)).sum::<f64>() / m;
    let grand = mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    if !(w > 0.0) || !w.is_finite() {
        return Ok(Rhat {
            value: f64::NAN,
            degenerate: true,
        });
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    Ok(Rhat {
        value: (var_plus / w).sqrt(),
        degenerate: false,
    })
}

/// Biased autocovariance at lag `t`.
fn autocovariance(x: &[f64], m: f64, t: usize) -> f64 {
    let n = x.len();
    (0..n - t).map(|i| (x[i] - m) * (x[i + t] - m)).sum::<f64>() / n as f64
}

/// Sums autocorrelation pairs `ρ_{2k} + ρ_{2k+1}` while they stay positive
/// and returns the integrated autocorrelation time.
fn geyer_tau<F: FnMut(usize) -> f64>(n: usize, mut rho: F) -> f64 {
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if !(pair > 0.0) {
            break;
        }
        sum += pair;
        k += 1;
    }
    -1.0 + 2.0 * sum
}

/// Single-chain ESS with Geyer's initial positive sequence. Returns 0 for a
/// constant series and never exceeds `1.5·N`.
pub fn effective_sample_size(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < 10 {
        return Err(Error::InvalidInput(format!(
            "ESS needs at least 10 draws, got {n}"
        )));
    }
    let m = mean(chain);
    let c0 = autocovariance(chain, m, 0);
    if !(c0 > 0.0) {
        return Ok(0.0);
    }
    let tau = geyer_tau(n, |t| autocovariance(chain, m, t) / c0);
    Ok(cap(n as f64 / tau, n))
}

/// Multi-chain ESS, combining within-chain autocovariances with the
/// between-chain variance. Returns 0 when every chain is constant.
pub fn multichain_ess(chains: &[Vec<f64>]) -> Result<f64> {
    if chains.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 10 {
        return Err(Error::InvalidInput(format!(
            "ESS needs at least 10 draws, got {n}"
        )));
    }
    if chains.len() == 1 {
        return effective_sample_size(&chains[0][..n]);
    }
    let m = chains.len() as f64;
    let nf = n as f64;
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| variance(c)).sum::<f64>() / m;
    let b_over_n = variance(&means);
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    if !(var_plus > 0.0) {
        return Ok(0.0);
    }
    let tau = geyer_tau(n, |t| {
        let acov = chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| autocovariance(c, mu, t))
            .sum::<f64>()
            / m;
        1.0 - (w - acov) / var_plus
    });
    Ok(cap(m * nf / tau, chains.len() * n))
}

fn cap(ess: f64, total: usize) -> f64 {
    let limit = 1.5 * total as f64;
    if ess.is_nan() || ess > limit {
        limit
    } else {
        ess
    }
}

/// Energy Bayesian fraction of missing information of one chain.
pub fn energy_bfmi(energy: &[f64]) -> f64 {
    let m = mean(energy);
    let num: f64 = energy.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let den: f64 = energy.iter().map(|e| (e - m).powi(2)).sum();
    num / den
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityDiagnostics {
    pub name: String,
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
}

/// Diagnostics of a full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub quantities: Vec<QuantityDiagnostics>,
    /// Largest non-degenerate R̂, if R̂ could be computed.
    pub rhat_max: Option<f64>,
    pub ess_min: Option<f64>,
    pub divergences: usize,
    pub warmup_divergences: usize,
    pub bfmi: Vec<f64>,
    pub mean_accept_stat: f64,
    pub step_sizes: Vec<f64>,
}

/// Names of the regression coefficients, `a1..a{n_a}` then `b1..b{n_b}`.
pub fn coefficient_names(n_a: usize, n_b: usize) -> Vec<String> {
    (1..=n_a)
        .map(|i| format!("a{i}"))
        .chain((1..=n_b).map(|i| format!("b{i}")))
        .collect()
}

pub fn diagnose(draws: &PosteriorDraws) -> Result<DiagnosticsReport> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let model = &draws.model;
    let mut series: Vec<(String, Vec<Vec<f64>>)> = coefficient_names(model.n_a, model.n_b)
        .into_iter()
        .enumerate()
        .map(|(j, name)| (name, draws.coefficient_chains(j)))
        .collect();
    series.push((
        "lp".into(),
        draws
            .chains
            .iter()
            .map(|c| c.stats.iter().map(|s| s.log_density).collect())
            .collect(),
    ));

    let mut quantities = Vec::with_capacity(series.len());
    for (name, chains) in series {
        let rhat = split_rhat(&chains)
            .ok()
            .filter(|r| !r.degenerate)
            .map(|r| r.value);
        let ess = multichain_ess(&chains).ok();
        quantities.push(QuantityDiagnostics { name, rhat, ess });
    }
    let rhat_max = quantities
        .iter()
        .filter_map(|q| q.rhat)
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.max(r)))
        });
    let ess_min = quantities
        .iter()
        .filter_map(|q| q.ess)
        .fold(None, |acc: Option<f64>, e| {
            Some(acc.map_or(e, |a| a.min(e)))
        });

    let stats = draws.chains.iter().flat_map(|c| &c.stats);
    let n = draws.n_draws() as f64;
    Ok(DiagnosticsReport {
        quantities,
        rhat_max,
        ess_min,
        divergences: draws.divergences(),
        warmup_divergences: draws.chains.iter().map(|c| c.warmup_divergences).sum(),
        bfmi: draws
            .chains
            .iter()
            .map(|c| energy_bfmi(&c.stats.iter().map(|s| s.energy).collect::<Vec<_>>()))
            .collect(),
        mean_accept_stat: stats.map(|s| s.accept_stat).sum::<f64>() / n,
        step_sizes: draws.chains.iter().map(|c| c.step_size).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn white(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
        let e = white(seed, n);
        let mut x = vec![0.0; n];
        x[0] = e[0] / (1.0 - phi * phi).sqrt();
        for t in 1..n {
            x[t] = phi * x[t - 1] + e[t];
        }
        x
    }

    #[test]
    fn rhat_near_one_for_exchangeable_chains() {
        let chains: Vec<Vec<f64>> = (0..4).map(|s| white(s, 5000)).collect();
        let r = split_rhat(&chains).unwrap();
        assert!((r.value - 1.0).abs() < 0.02, "{}", r.value);
    }

    #[test]
    fn rhat_large_for_disjoint_means() {
        let a = white(1, 500);
        let b: Vec<f64> = white(2, 500).iter().map(|x| x + 10.0).collect();
        assert!(split_rhat(&[a, b]).unwrap().value > 1.2);
    }

    #[test]
    fn rhat_matches_hand_computation() {
        let c1 = vec![1.0, 2.0, 3.0, 4.0];
        let c2 = vec![2.0, 4.0, 2.0, 4.0];
        // half means 1.5, 3.5, 3, 3; grand 2.75; half variances 0.5, 0.5, 2, 2
        let w: f64 = 1.25;
        let b = 2.0 / 3.0 * (1.5625 + 0.5625 + 0.0625 + 0.0625);
        let expected = ((0.5 * w + b / 2.0) / w).sqrt();
        assert!((split_rhat(&[c1, c2]).unwrap().value - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_chains_are_degenerate() {
        let r = split_rhat(&[vec![1.0; 10], vec![1.0; 10]]).unwrap();
        assert!(r.degenerate && r.value.is_nan());
        assert_eq!(effective_sample_size(&[3.0; 50]).unwrap(), 0.0);
        assert!(split_rhat(&[vec![1.0; 10]]).is_err());
        assert!(split_rhat(&[vec![1.0; 3], vec![2.0; 3]]).is_err());
    }

    #[test]
    fn ess_of_white_noise_is_about_n() {
        let n = 4000;
        let ess = effective_sample_size(&white(9, n)).unwrap();
        assert!(ess > 0.8 * n as f64 && ess < 1.2 * n as f64, "{ess}");
    }

    #[test]
    fn ess_of_ar1_matches_analytic() {
        let (n, phi) = (20000, 0.9);
        let expected = n as f64 * (1.0 - phi) / (1.0 + phi);
        let ess = effective_sample_size(&ar1(3, n, phi)).unwrap();
        assert!((ess / expected - 1.0).abs() < 0.3, "{ess} vs {expected}");
        let chains: Vec<Vec<f64>> = (0..4).map(|s| ar1(s + 10, n / 4, phi)).collect();
        let ess = multichain_ess(&chains).unwrap();
        assert!((ess / expected - 1.0).abs() < 0.3, "{ess} vs {expected}");
    }

    #[test]
    fn ess_is_capped() {
        // alternating series is strongly antithetic
        let x: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        assert!(effective_sample_size(&x).unwrap() <= 150.0);
    }

    #[test]
    fn bfmi_of_white_noise_is_about_two() {
        let b = energy_bfmi(&white(4, 10000));
        assert!((b - 2.0).abs() < 0.1, "{b}");
    }
}
