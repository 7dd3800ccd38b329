//! Shared inputs for the benchmarks.

use canm_core::graph::{random_dag, Dag};
use canm_core::scm::{random_anm, ConfoundedAnm, RandomAnmConfig};

/// A random DAG with degree bound 4 at the harness default edge probability.
pub fn bench_dag(n: usize, seed: u64) -> Dag {
    let p = if n <= 1 { 0.0 } else { (4.0 / (n - 1) as f64).min(1.0) };
    random_dag(n, 4, p, seed)
}

pub fn bench_anm(n: usize, seed: u64) -> ConfoundedAnm {
    random_anm(&bench_dag(n, seed), &RandomAnmConfig::default(), seed).expect("random model")
}
