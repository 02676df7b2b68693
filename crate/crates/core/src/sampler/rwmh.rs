use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{initialize, ModelConfig, Posterior, RegressionDataset};
use crate::sampler::chains::{ChainSamples, DrawStats, PosteriorDraws};
use crate::sampler::LogDensity;

#[derive(Debug, Clone, PartialEq)]
pub struct RwmhOutput {
    pub draws: Vec<Vec<f64>>,
    pub log_density: Vec<f64>,
    /// Acceptance probability `min(1, π(z')/π(z))` of every proposal.
    pub accept_prob: Vec<f64>,
    pub accept_rate: f64,
}

/// Gaussian random-walk Metropolis. The proposal is symmetric, so the
/// acceptance ratio is `π(z')/π(z)` alone.
pub fn random_walk_metropolis<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    z0: &[f64],
    n_iterations: usize,
    proposal_scale: f64,
    rng: &mut R,
) -> Result<RwmhOutput> {
    if !(proposal_scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "proposal scale {proposal_scale} must be positive"
        )));
    }
    let mut z = z0.to_vec();
    let mut lp = target.log_density(&z);
    let mut out = RwmhOutput {
        draws: Vec::with_capacity(n_iterations),
        log_density: Vec::with_capacity(n_iterations),
        accept_prob: Vec::with_capacity(n_iterations),
        accept_rate: 0.0,
    };
    let mut accepted = 0usize;
    let mut proposal = vec![0.0; z.len()];
    for _ in 0..n_iterations {
        for (q, x) in proposal.iter_mut().zip(&z) {
            let n: f64 = rng.sample(StandardNormal);
            *q = x + proposal_scale * n;
        }
        let lp_new = target.log_density(&proposal);
        let log_ratio = if lp_new.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp_new - lp
        };
        let u: f64 = rng.random();
        if u.ln() < log_ratio {
            z.copy_from_slice(&proposal);
            lp = lp_new;
            accepted += 1;
        }
        out.draws.push(z.clone());
        out.log_density.push(lp);
        out.accept_prob.push(log_ratio.min(0.0).exp());
    }
    out.accept_rate = accepted as f64 / n_iterations.max(1) as f64;
    Ok(out)
}

/// Single-chain random-walk Metropolis on the full model. The first half of
/// the iterations is discarded.
pub fn rwmh_baseline<R: Rng + ?Sized>(
    data: &RegressionDataset,
    model_config: &ModelConfig,
    n_iterations: usize,
    proposal_scale: f64,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    let posterior = Posterior::new(model_config.clone(), data.clone())?;
    let z0 = initialize(model_config, data, rng);
    let run = random_walk_metropolis(&posterior, z0.as_slice(), n_iterations, proposal_scale, rng)?;
    let burn = n_iterations / 2;
    let stats = run.log_density[burn..]
        .iter()
        .zip(&run.accept_prob[burn..])
        .map(|(&lp, &a)| DrawStats {
            accept_stat: a,
            n_steps: 1,
            tree_depth: 0,
            divergent: false,
            energy: -lp,
            log_density: lp,
        })
        .collect();
    let samples = ChainSamples {
        chain: 0,
        z_draws: run.draws[burn..].to_vec(),
        stats,
        step_size: proposal_scale,
        mass_diag: vec![1.0; posterior.dim()],
        warmup_divergences: 0,
    };
    PosteriorDraws::from_samples(model_config.clone(), vec![samples])
}
