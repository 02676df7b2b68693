use barx_bench::experiment1_posterior;
use barx_core::sampler::{chain_rng, find_reasonable_step_size, hmc_step, TrajectoryPolicy};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("log_density_and_grad");
    for t in [300, 1000] {
        let (post, z) = experiment1_posterior(t, 1);
        let mut g = vec![0.0; post.dim()];
        group.bench_with_input(BenchmarkId::from_parameter(t), &z, |b, z| {
            b.iter(|| post.log_density_and_grad(black_box(z), &mut g))
        });
    }
    group.finish();
}

fn nuts_step(c: &mut Criterion) {
    let (post, z) = experiment1_posterior(1000, 1);
    let mass = vec![1.0; post.dim()];
    let mut rng = chain_rng(7, 0);
    let eps = find_reasonable_step_size(&post, &z, 0.1, &mass, &mut rng);
    let policy = TrajectoryPolicy::Nuts { max_tree_depth: 6 };
    let mut state = z;
    c.bench_function("nuts_step", |b| {
        b.iter(|| {
            let t = hmc_step(&post, &state, eps, &mass, &mut rng, policy);
            state = t.z;
        })
    });
}

criterion_group!(benches, gradient, nuts_step);
criterion_main!(benches);
