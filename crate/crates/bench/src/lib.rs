//! Fixtures shared by the benchmarks.

use barx_core::data::generate_experiment1;
use barx_core::model::{build_regression, initialize};
use barx_core::sampler::chain_rng;
use barx_core::{ModelConfig, Posterior};

/// Experiment 1 posterior at the default model orders with `t` observations,
/// plus a starting point.
pub fn experiment1_posterior(t: usize, seed: u64) -> (Posterior, Vec<f64>) {
    let ds = generate_experiment1(t, seed).expect("simulate");
    let config = ModelConfig::default();
    let data = build_regression(&ds.y, ds.u(), &config).expect("regression");
    let z = initialize(&config, &data, &mut chain_rng(seed, 0)).0;
    (Posterior::new(config, data).expect("posterior"), z)
}
