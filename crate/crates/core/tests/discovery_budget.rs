use canm_core::discovery::{intervention_budget, learn_observable_graph, learn_transitive_closure_with, DiscoveryConfig};
use canm_core::graph::{random_dag, Admg, Dag, NodeSet};
use canm_core::independence::{Backend, OracleTest, StatisticalTest, TestConfig};
use canm_core::scm::{random_anm, RandomAnmConfig};
use canm_core::seeds::derive_seed;
use proptest::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

/// False closure edges on an edgeless graph against the binomial tail of the
/// number of tests issued.
fn empty_graph_false_edges(backend: Backend, n: usize, runs: u64) -> (usize, u64) {
    let cfg = TestConfig { backend, ..TestConfig::default() };
    let test = StatisticalTest::new(cfg);
    let mut false_edges = 0;
    for r in 0..runs {
        let anm = random_anm(&Dag::empty(n), &RandomAnmConfig::default(), derive_seed(5, 0, r)).unwrap();
        let run = learn_transitive_closure_with(&anm, &test, 1000, derive_seed(5, 1, r), false, false).unwrap();
        false_edges += run.closure.edge_count();
    }
    let sets = canm_core::setsys::strongly_separating(n).unwrap().sets;
    let tests_per_run: usize = sets.iter().map(|s| s.len() * (n - s.len())).sum();
    (false_edges, tests_per_run as u64 * runs)
}

#[test]
fn edgeless_graphs_stay_within_the_false_positive_budget() {
    for (backend, n, runs) in [(Backend::Pearson, 8, 50), (Backend::Dcorr, 4, 5)] {
        let (edges, tests) = empty_graph_false_edges(backend, n, runs);
        let limit = Binomial::new(0.01, tests).unwrap().inverse_cdf(0.999);
        assert!(edges as u64 <= limit, "{backend:?}: {edges} false edges over {tests} tests (limit {limit})");
    }
}

#[test]
fn single_treatment_needs_no_closure_interventions() {
    let anm = random_anm(&Dag::empty(1), &RandomAnmConfig::default(), 1).unwrap();
    let test = OracleTest::new(Admg::new(Dag::empty(1), []).unwrap());
    let res = learn_observable_graph(&anm, &test, &DiscoveryConfig::default(), 3).unwrap();
    assert_eq!(res.learned_graph.edge_count(), 0);
    assert_eq!(res.interventions_used, 0);
    assert_eq!(res.collected.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interventions_respect_the_budget(n in 2usize..14, d_max in 2usize..5, alpha in 1.0f64..3.0, seed in any::<u64>()) {
        let g = random_dag(n, d_max, 0.5, seed);
        let test = OracleTest::new(Admg::new(g.clone(), []).unwrap());
        let anm = random_anm(&g, &RandomAnmConfig::default(), seed).unwrap();
        let cfg = DiscoveryConfig { d_max, alpha, samples: 20, retain_closure_datasets: false, ..DiscoveryConfig::default() };
        let res = learn_observable_graph(&anm, &test, &cfg, seed).unwrap();
        prop_assert!(res.interventions_used <= intervention_budget(n, d_max, alpha));
        let theory = 8.0 * alpha * d_max as f64 * (n as f64).log2().powi(2);
        prop_assert!(res.interventions_used as f64 <= theory.max(0.0) + 2.0 * (n as f64).log2().ceil());
        for &(a, b) in &res.proposed_edges {
            prop_assert!(g.has_edge(a, b), "false edge {a} -> {b}");
        }
        let stored: NodeSet = res.contexts.iter().flatten().copied().collect();
        prop_assert!(stored.iter().all(|&v| v < n));
    }
}
