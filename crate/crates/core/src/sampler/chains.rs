use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::transform::unpack;
use crate::model::{
    initialize, Layout, ModelConfig, ParameterVector, Posterior, RegressionDataset,
};
use crate::sampler::adapt::{find_from_point, DualAveraging, WarmupSchedule, Welford};
use crate::sampler::integrator::Point;
use crate::sampler::transition::transition;
use crate::sampler::{HmcConfig, LogDensity};

pub type ChainRng = ChaCha20Rng;

/// Recorded alongside every run so draws can be regenerated.
pub const RNG_DESCRIPTION: &str =
    "ChaCha20Rng (rand_chacha 0.9): seed_from_u64(seed), set_stream(chain index)";

/// The generator owned by chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: usize) -> ChainRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// Chains on the global rayon pool.
    #[default]
    Parallel,
    /// Chains on a dedicated pool of this many threads.
    ParallelCapped(usize),
}

impl Execution {
    /// Parallel execution, capped by `BARX_THREADS` when set.
    pub fn from_env() -> Self {
        match std::env::var("BARX_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            Some(0) | None => Execution::Parallel,
            Some(1) => Execution::Serial,
            Some(n) => Execution::ParallelCapped(n),
        }
    }
}

/// Per-draw sampler statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawStats {
    pub accept_stat: f64,
    pub n_steps: usize,
    pub tree_depth: usize,
    pub divergent: bool,
    pub energy: f64,
    pub log_density: f64,
}

/// Kept draws of one chain on a generic target.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSamples {
    pub chain: usize,
    pub z_draws: Vec<Vec<f64>>,
    pub stats: Vec<DrawStats>,
    pub step_size: f64,
    pub mass_diag: Vec<f64>,
    pub warmup_divergences: usize,
}

impl ChainSamples {
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.z_draws.iter().map(|z| z[i]).collect()
    }

    pub fn divergences(&self) -> usize {
        self.stats.iter().filter(|s| s.divergent).count()
    }
}

fn run_chain<T, F>(target: &T, config: &HmcConfig, chain: usize, init: &F) -> Result<ChainSamples>
where
    T: LogDensity + ?Sized,
    F: Fn(usize, &mut ChainRng) -> Vec<f64> + Sync,
{
    let mut rng = chain_rng(config.seed, chain);
    let policy = config.policy();
    let dim = target.dim();

    let mut point = Point::at(target, init(chain, &mut rng));
    for _ in 0..100 {
        if point.is_finite() {
            break;
        }
        point = Point::at(target, init(chain, &mut rng));
    }
    if !point.is_finite() {
        return Err(Error::SamplerAbort(format!(
            "chain {chain}: no initial point with finite log-density after 100 attempts"
        )));
    }

    let mut mass = vec![1.0; dim];
    let mut eps = find_from_point(target, &point, config.init_step_size, &mass, &mut rng);
    let mut da = DualAveraging::new(eps, config.target_accept);
    let schedule = WarmupSchedule::new(config.n_warmup);
    let mut welford = Welford::new(dim);
    let mut warmup_divergences = 0;

    for i in 0..config.n_warmup {
        let (next, t) = transition(target, &point, eps, &mass, &mut rng, policy);
        point = next;
        warmup_divergences += usize::from(t.divergent);
        eps = da.update(t.accept_stat);
        if schedule.in_slow_window(i) {
            welford.add(&point.z);
        }
        if schedule.is_window_end(i) && welford.count() > 1 {
            mass = welford.mass_diag();
            welford = Welford::new(dim);
            eps = find_from_point(target, &point, eps, &mass, &mut rng);
            da.restart(eps);
        }
    }
    if warmup_divergences == config.n_warmup {
        return Err(Error::SamplerAbort(format!(
            "chain {chain}: all {} warmup transitions diverged (final step size {eps:.3e})",
            config.n_warmup
        )));
    }
    let step_size = da.final_step_size();

    let n_kept = config.n_kept();
    let mut z_draws = Vec::with_capacity(n_kept);
    let mut stats = Vec::with_capacity(n_kept);
    for _ in 0..n_kept {
        let (next, t) = transition(target, &point, step_size, &mass, &mut rng, policy);
        point = next;
        z_draws.push(point.z.clone());
        stats.push(DrawStats {
            accept_stat: t.accept_stat,
            n_steps: t.n_steps,
            tree_depth: t.tree_depth,
            divergent: t.divergent,
            energy: t.energy,
            log_density: t.log_density,
        });
    }
    Ok(ChainSamples {
        chain,
        z_draws,
        stats,
        step_size,
        mass_diag: mass,
        warmup_divergences,
    })
}

/// Runs `config.n_chains` adaptive HMC chains on `target`. `init` draws a
/// starting point from the chain's own generator. The output is ordered by
/// chain index and does not depend on `execution`.
pub fn sample_chains<T, F>(
    target: &T,
    config: &HmcConfig,
    execution: Execution,
    init: F,
) -> Result<Vec<ChainSamples>>
where
    T: LogDensity + ?Sized,
    F: Fn(usize, &mut ChainRng) -> Vec<f64> + Sync,
{
    config.validate()?;
    let run = |c: usize| run_chain(target, config, c, &init);
    match execution {
        Execution::Serial => (0..config.n_chains).map(run).collect(),
        Execution::Parallel => (0..config.n_chains).into_par_iter().map(run).collect(),
        Execution::ParallelCapped(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| (0..config.n_chains).into_par_iter().map(run).collect())
        }
    }
}

/// Kept draws of one chain in both parameterisations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    pub chain: usize,
    pub draws: Vec<ParameterVector>,
    /// Empty when the draws were loaded from disk.
    #[serde(skip)]
    pub z_draws: Vec<Vec<f64>>,
    pub stats: Vec<DrawStats>,
    pub step_size: f64,
    pub mass_diag: Vec<f64>,
    pub warmup_divergences: usize,
}

/// Posterior draws of the full model, grouped by chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub model: ModelConfig,
    pub chains: Vec<ChainDraws>,
}

impl PosteriorDraws {
    pub fn from_samples(model: ModelConfig, samples: Vec<ChainSamples>) -> Result<Self> {
        let layout = Layout::new(&model);
        let mut chains = Vec::with_capacity(samples.len());
        for s in samples {
            let mut draws = Vec::with_capacity(s.z_draws.len());
            for z in &s.z_draws {
                layout.check_dim(z)?;
                draws.push(unpack(&layout, z).to_parameters(&layout));
            }
            chains.push(ChainDraws {
                chain: s.chain,
                draws,
                z_draws: s.z_draws,
                stats: s.stats,
                step_size: s.step_size,
                mass_diag: s.mass_diag,
                warmup_divergences: s.warmup_divergences,
            });
        }
        Ok(Self { model, chains })
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_draws(&self) -> usize {
        self.chains.iter().map(|c| c.draws.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.n_draws() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &ParameterVector> + '_ {
        self.chains.iter().flat_map(|c| c.draws.iter())
    }

    /// Per-chain series of a scalar function of the parameters.
    pub fn scalar_chains<F: Fn(&ParameterVector) -> f64>(&self, f: F) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.draws.iter().map(&f).collect())
            .collect()
    }

    /// Per-chain series of coefficient `j` of `[a; b]`.
    pub fn coefficient_chains(&self, j: usize) -> Vec<Vec<f64>> {
        let n_a = self.model.n_a;
        self.scalar_chains(|p| if j < n_a { p.a[j] } else { p.b[j - n_a] })
    }

    pub fn divergences(&self) -> usize {
        self.chains
            .iter()
            .flat_map(|c| &c.stats)
            .filter(|s| s.divergent)
            .count()
    }

    /// At most `max` draws, evenly spaced over the pooled chains.
    pub fn thinned(&self, max: usize) -> Vec<&ParameterVector> {
        let all: Vec<&ParameterVector> = self.iter().collect();
        if all.len() <= max || max == 0 {
            return all;
        }
        (0..max).map(|i| all[i * all.len() / max]).collect()
    }
}

/// Runs the full model with chain parallelism taken from `BARX_THREADS`.
pub fn run_chains(
    data: &RegressionDataset,
    model: &ModelConfig,
    hmc: &HmcConfig,
) -> Result<PosteriorDraws> {
    run_chains_with(data, model, hmc, Execution::from_env())
}

pub fn run_chains_with(
    data: &RegressionDataset,
    model: &ModelConfig,
    hmc: &HmcConfig,
    execution: Execution,
) -> Result<PosteriorDraws> {
    let posterior = Posterior::new(model.clone(), data.clone())?;
    let samples = sample_chains(&posterior, hmc, execution, |_, rng| {
        initialize(model, data, rng).0
    })?;
    PosteriorDraws::from_samples(model.clone(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::targets::DiagonalGaussian;
    use rand::Rng;

    fn small_config(seed: u64) -> HmcConfig {
        HmcConfig {
            n_iterations: 400,
            n_warmup: 200,
            n_chains: 3,
            seed,
            ..HmcConfig::default()
        }
    }

    #[test]
    fn streams_differ_by_chain() {
        let a: u64 = chain_rng(1, 0).random();
        let b: u64 = chain_rng(1, 1).random();
        let c: u64 = chain_rng(1, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let target = DiagonalGaussian::standard(3);
        let init =
            |_: usize, rng: &mut ChainRng| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = sample_chains(&target, &small_config(11), Execution::Serial, init).unwrap();
        let p = sample_chains(&target, &small_config(11), Execution::Parallel, init).unwrap();
        let c = sample_chains(
            &target,
            &small_config(11),
            Execution::ParallelCapped(2),
            init,
        )
        .unwrap();
        assert_eq!(s, p);
        assert_eq!(s, c);
        assert_ne!(s[0].z_draws[0], s[1].z_draws[0]);
    }

    #[test]
    fn kept_draws_use_frozen_settings() {
        let target = DiagonalGaussian {
            mean: vec![1.0, -2.0],
            sd: vec![0.1, 3.0],
        };
        let out = sample_chains(&target, &small_config(3), Execution::Serial, |_, _| {
            vec![0.0, 0.0]
        })
        .unwrap();
        for c in &out {
            assert_eq!(c.z_draws.len(), 200);
            // mass ≈ 1/variance after adaptation
            assert!(
                c.mass_diag[0] > 20.0 && c.mass_diag[1] < 1.0,
                "{:?}",
                c.mass_diag
            );
            assert!(c.step_size > 0.0);
        }
    }

    #[test]
    fn all_divergent_warmup_aborts() {
        struct Cliff;
        impl LogDensity for Cliff {
            fn dim(&self) -> usize {
                1
            }
            fn log_density_and_grad(&self, z: &[f64], g: &mut [f64]) -> f64 {
                if z[0] == 0.0 {
                    g[0] = 0.0;
                    0.0
                } else {
                    g[0] = 0.0;
                    f64::NEG_INFINITY
                }
            }
        }
        let err = sample_chains(&Cliff, &small_config(1), Execution::Serial, |_, _| {
            vec![0.0]
        })
        .unwrap_err();
        assert!(matches!(err, Error::SamplerAbort(_)));
    }
}
