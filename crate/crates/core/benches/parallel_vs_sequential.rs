use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stochastic_greedy::certificates::{impossibility_scan, ScanConfig};
use stochastic_greedy::engine::{compute_policy, mc_estimate};
use stochastic_greedy::harness::{generate, run_suite, standard_suite, GeneratorSpec, SuiteOptions};
use stochastic_greedy::matchers::RunConfig;
use stochastic_greedy::{AlgoParams, Execution};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn monte_carlo(c: &mut Criterion) {
    let inst = generate(&GeneratorSpec::Cascade(6)).unwrap();
    let table = compute_policy(&inst, AlgoParams::default()).unwrap();
    let mut g = c.benchmark_group("mc_estimate_20k");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mc_estimate(&inst, &table, 20_000, 1, exec).unwrap())
        });
    }
    g.finish();
}

fn suite(c: &mut Criterion) {
    let instances = standard_suite(0);
    let configs = [RunConfig::default()];
    let mut g = c.benchmark_group("run_suite");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_suite(&configs, &instances, SuiteOptions { exec, timings: false }))
        });
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let cfg = ScanConfig {
        resolution: 6,
        refine_iters: 60,
        restarts: 8,
        ..ScanConfig::default()
    };
    let mut g = c.benchmark_group("impossibility_scan");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| impossibility_scan(&cfg, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, suite, scan);
criterion_main!(benches);
