use std::hint::black_box;

use canm_bench::bench_anm;
use canm_core::discovery::{core_intervention_plan, learn_observable_graph, learn_transitive_closure, DiscoveryConfig};
use canm_core::estimation::{fit_model, AceQuery, FitConfig};
use canm_core::graph::Admg;
use canm_core::independence::{test_independence, OracleTest, TestConfig};
use canm_core::scm::{InterventionSampler, ValuePolicy};
use canm_core::NodeSet;
use criterion::{criterion_group, criterion_main, Criterion};

fn dependence_tests(c: &mut Criterion) {
    let xs: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin()).collect();
    let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x + (i as f64 * 1.3).cos()).collect();
    let cfg = TestConfig::default();
    c.bench_function("dcorr_permutation/300", |b| {
        b.iter(|| test_independence(black_box(&xs), black_box(&ys), &cfg, 1).unwrap())
    });
}

fn discovery(c: &mut Criterion) {
    let anm = bench_anm(20, 3);
    let oracle = OracleTest::new(Admg::from_covariance(anm.graph().clone(), anm.noise().cov()));
    c.bench_function("closure_oracle/20", |b| {
        b.iter(|| learn_transitive_closure(&anm, &oracle, 50, 1).unwrap())
    });
    let cfg = DiscoveryConfig {
        samples: 50,
        retain_closure_datasets: false,
        ..Default::default()
    };
    let mut group = c.benchmark_group("observable_graph");
    group.sample_size(10);
    group.bench_function("oracle/20", |b| {
        b.iter(|| learn_observable_graph(&anm, &oracle, &cfg, 1).unwrap())
    });
    group.finish();
}

fn estimation(c: &mut Criterion) {
    let anm = bench_anm(4, 11);
    let data: Vec<_> = core_intervention_plan(anm.graph(), &[false; 4])
        .iter()
        .enumerate()
        .map(|(k, t)| anm.sample(t, &ValuePolicy::StdNormal, 3000, k as u64).unwrap())
        .collect();
    c.bench_function("fit_model/4x3000", |b| {
        b.iter(|| fit_model(anm.graph(), black_box(&data), &FitConfig::default()).unwrap())
    });
    let model = fit_model(anm.graph(), &data, &FitConfig::default()).unwrap();
    let q = AceQuery::new(&NodeSet::from([0]), &[0.5]).unwrap();
    c.bench_function("ace/10000_draws", |b| b.iter(|| model.ace(black_box(&q), 10_000, 1).unwrap()));
}

criterion_group!(benches, dependence_tests, discovery, estimation);
criterion_main!(benches);
