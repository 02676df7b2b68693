use barx_core::sampler::TrajectoryKind;
use barx_core::{HmcConfig, ModelConfig};
use serde::{Deserialize, Serialize};

/// Model and sampler settings as read from the JSON config file. Every field
/// is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_a: usize,
    pub n_b: usize,
    pub n_e: usize,
    pub alpha_w: f64,
    pub sigma_prior_scale: f64,
    pub n_iterations: usize,
    pub n_warmup: usize,
    pub n_chains: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub init_step_size: f64,
    pub seed: u64,
    pub trajectory: TrajectoryKind,
    pub static_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let h = HmcConfig::default();
        Self {
            n_a: m.n_a,
            n_b: m.n_b,
            n_e: m.n_e,
            alpha_w: m.alpha_w,
            sigma_prior_scale: m.sigma_prior_scale,
            n_iterations: h.n_iterations,
            n_warmup: h.n_warmup,
            n_chains: h.n_chains,
            target_accept: h.target_accept,
            max_tree_depth: h.max_tree_depth,
            init_step_size: h.init_step_size,
            seed: h.seed,
            trajectory: h.trajectory,
            static_steps: h.static_steps,
        }
    }
}

impl RunConfig {
    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            n_a: self.n_a,
            n_b: self.n_b,
            n_e: self.n_e,
            alpha_w: self.alpha_w,
            sigma_prior_scale: self.sigma_prior_scale,
        }
    }

    pub fn hmc(&self) -> HmcConfig {
        HmcConfig {
            n_iterations: self.n_iterations,
            n_warmup: self.n_warmup,
            n_chains: self.n_chains,
            target_accept: self.target_accept,
            max_tree_depth: self.max_tree_depth,
            init_step_size: self.init_step_size,
            seed: self.seed,
            trajectory: self.trajectory,
            static_steps: self.static_steps,
        }
    }
}
