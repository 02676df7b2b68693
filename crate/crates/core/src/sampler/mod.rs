//! Hamiltonian Monte Carlo.
//!
//! The default transition is multinomial NUTS (trajectory doubling with the
//! generalised no-U-turn criterion checked across subtree boundaries). A
//! static-length HMC transition with a literal Metropolis correction is
//! available for cross-checks. Warmup follows the windowed scheme: a fast
//! initial buffer, doubling slow windows that estimate a diagonal mass
//! matrix, and a terminal buffer, with dual-averaging step-size adaptation
//! throughout.
//!
//! Random numbers come from ChaCha20 seeded with `seed_from_u64(seed)` and
//! `set_stream(chain)`, so every chain owns an independent, reproducible
//! stream regardless of how chains are scheduled on threads.

mod adapt;
mod chains;
mod integrator;
mod rwmh;
pub mod targets;
mod transition;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Posterior;

pub use adapt::{find_reasonable_step_size, DualAveraging, WarmupSchedule};
pub use chains::{
    chain_rng, run_chains, run_chains_with, sample_chains, ChainDraws, ChainRng, ChainSamples,
    DrawStats, Execution, PosteriorDraws, RNG_DESCRIPTION,
};
pub use integrator::{hamiltonian, leapfrog, LeapfrogResult, PhaseState};
pub use rwmh::{random_walk_metropolis, rwmh_baseline, RwmhOutput};
pub use transition::{hmc_step, Transition, DIVERGENCE_THRESHOLD};

/// An unnormalised log-density with gradient.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Returns `ln π(z)` and writes `∇ ln π(z)` into `grad`.
    fn log_density_and_grad(&self, z: &[f64], grad: &mut [f64]) -> f64;

    fn log_density(&self, z: &[f64]) -> f64 {
        let mut g = vec![0.0; z.len()];
        self.log_density_and_grad(z, &mut g)
    }
}

impl LogDensity for Posterior {
    fn dim(&self) -> usize {
        Posterior::dim(self)
    }

    fn log_density_and_grad(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        Posterior::log_density_and_grad(self, z, grad)
    }

    fn log_density(&self, z: &[f64]) -> f64 {
        Posterior::log_density(self, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    #[default]
    Nuts,
    Static,
}

/// How a single transition builds its trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryPolicy {
    /// Doubling with a no-U-turn stop and multinomial state selection.
    Nuts { max_tree_depth: usize },
    /// `n_steps` leapfrog steps, jittered uniformly by ±20% per transition.
    Static { n_steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmcConfig {
    /// Total iterations per chain, warmup included.
    pub n_iterations: usize,
    pub n_warmup: usize,
    pub n_chains: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub init_step_size: f64,
    pub seed: u64,
    pub trajectory: TrajectoryKind,
    /// Nominal trajectory length for the static policy.
    pub static_steps: usize,
}

impl Default for HmcConfig {
    fn default() -> Self {
        Self {
            n_iterations: 30_000,
            n_warmup: 15_000,
            n_chains: 4,
            target_accept: 0.8,
            max_tree_depth: 10,
            init_step_size: 1.0,
            seed: 0,
            trajectory: TrajectoryKind::Nuts,
            static_steps: 16,
        }
    }
}

impl HmcConfig {
    /// 3000 iterations with 1500 warmup, for tests and quick runs.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            n_iterations: 3000,
            n_warmup: 1500,
            seed,
            ..Self::default()
        }
    }

    pub fn n_kept(&self) -> usize {
        self.n_iterations - self.n_warmup
    }

    pub fn policy(&self) -> TrajectoryPolicy {
        match self.trajectory {
            TrajectoryKind::Nuts => TrajectoryPolicy::Nuts {
                max_tree_depth: self.max_tree_depth,
            },
            TrajectoryKind::Static => TrajectoryPolicy::Static {
                n_steps: self.static_steps,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0 < self.n_warmup && self.n_warmup < self.n_iterations) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < n_warmup ({}) < n_iterations ({})",
                self.n_warmup, self.n_iterations
            )));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target_accept {} must lie in (0, 1)",
                self.target_accept
            )));
        }
        if self.max_tree_depth < 1 {
            return Err(Error::InvalidConfig(
                "max_tree_depth must be at least 1".into(),
            ));
        }
        if self.n_chains < 1 {
            return Err(Error::InvalidConfig("n_chains must be at least 1".into()));
        }
        if !(self.init_step_size > 0.0 && self.init_step_size.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "init_step_size {} must be positive",
                self.init_step_size
            )));
        }
        if self.static_steps < 1 {
            return Err(Error::InvalidConfig(
                "static_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(HmcConfig::default().validate().is_ok());
        let bad = HmcConfig {
            n_warmup: 0,
            ..HmcConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = HmcConfig {
            n_warmup: 100,
            n_iterations: 100,
            ..HmcConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = HmcConfig {
            target_accept: 1.0,
            ..HmcConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = HmcConfig {
            max_tree_depth: 0,
            ..HmcConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_json_fields_optional() {
        let c: HmcConfig = serde_json::from_str(r#"{"seed": 9, "trajectory": "static"}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.n_iterations, 30_000);
        assert_eq!(c.policy(), TrajectoryPolicy::Static { n_steps: 16 });
    }
}
