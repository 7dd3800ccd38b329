use rand::Rng;
use rayon::prelude::*;

use super::{make_test, mean_sd, Cell, ExperimentConfig, ExperimentKind, Table};
use crate::discovery::{check_sufficiency, learn_observable_graph, outer_iterations, DiscoveryConfig};
use crate::error::Result;
use crate::graph::{shd, NodeSet};
use crate::scm::{random_anm, RandomAnmConfig};
use crate::seeds::{self, derive_seed, stream};

struct Outcome {
    shd: usize,
    interventions: usize,
}

fn one_run(cfg: &ExperimentConfig, n: usize, samples: usize, rep: usize) -> Result<Outcome> {
    let graph_seed = derive_seed(cfg.seed, stream::GRAPH, ((n as u64) << 32) | rep as u64);
    let g = cfg.random_dag(n, graph_seed);
    let anm_cfg = RandomAnmConfig {
        pairwise_prob: cfg.pairwise_prob,
        ..Default::default()
    };
    let anm = random_anm(&g, &anm_cfg, derive_seed(graph_seed, stream::MODEL, 0))?;
    let test = make_test(cfg.test, cfg.level, cfg.permutations, &anm);
    let dcfg = DiscoveryConfig {
        d_max: cfg.degree_for(n),
        alpha: cfg.alpha,
        samples,
        bonferroni: cfg.bonferroni,
        retain_closure_datasets: false,
    };
    let res = learn_observable_graph(&anm, test.as_ref(), &dcfg, derive_seed(graph_seed, stream::REPLICATION, samples as u64))?;
    Ok(Outcome {
        shd: shd(&res.learned_graph, &g)?,
        interventions: res.interventions_used,
    })
}

/// Mean SHD of the learned observable graph per setting.
///
/// `shd_vs_n` sweeps `n_values` at the first sample size; `shd_vs_samples`
/// sweeps `sample_sizes` at `n`. Graphs depend only on `(n, replication)`,
/// so they are shared across sample sizes.
pub fn run_discovery_experiment(cfg: &ExperimentConfig) -> Result<Table> {
    let settings: Vec<(usize, usize)> = match cfg.kind {
        ExperimentKind::ShdVsN => cfg.n_values.iter().map(|&n| (n, cfg.sample_sizes[0])).collect(),
        _ => cfg.sample_sizes.iter().map(|&s| (cfg.n, s)).collect(),
    };
    let mut table = Table::new(&[
        "n",
        "samples",
        "replications",
        "mean_shd",
        "sd_shd",
        "possible_edges",
        "shd_ratio",
        "exact_fraction",
        "mean_interventions",
    ]);
    for (n, samples) in settings {
        let runs: Vec<Outcome> = (0..cfg.replications)
            .into_par_iter()
            .map(|rep| one_run(cfg, n, samples, rep))
            .collect::<Result<_>>()?;
        let shds: Vec<f64> = runs.iter().map(|r| r.shd as f64).collect();
        let (mean, sd) = mean_sd(&shds);
        let possible = n * n.saturating_sub(1) / 2;
        let exact = runs.iter().filter(|r| r.shd == 0).count() as f64 / runs.len() as f64;
        let interventions = runs.iter().map(|r| r.interventions as f64).sum::<f64>() / runs.len() as f64;
        table.push(vec![
            n.into(),
            samples.into(),
            cfg.replications.into(),
            mean.into(),
            sd.into(),
            possible.into(),
            Cell::Num(if possible > 0 { mean / possible as f64 } else { 0.0 }),
            exact.into(),
            interventions.into(),
        ]);
    }
    Ok(table)
}

/// Fraction of random DAGs whose first `k` random targets plus `{∅, X}`
/// satisfy the sufficiency predicate, for `k = 0..=K`.
pub fn run_sufficiency_experiment(cfg: &ExperimentConfig) -> Result<Table> {
    let n = cfg.n;
    let d = cfg.degree_for(n);
    let k_max = cfg.max_interventions.unwrap_or_else(|| outer_iterations(n, d, cfg.alpha));
    let keep = 1.0 - 1.0 / d as f64;
    let per_rep: Vec<Vec<bool>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let graph_seed = derive_seed(cfg.seed, stream::GRAPH, ((n as u64) << 32) | rep as u64);
            let g = cfg.random_dag(n, graph_seed);
            let flags = vec![false; n];
            let mut targets: Vec<NodeSet> = vec![NodeSet::new(), (0..n).collect()];
            let mut rng = seeds::rng(derive_seed(graph_seed, stream::ITERATION, 0));
            let mut out = vec![check_sufficiency(&g, &targets, &flags).sufficient];
            for _ in 0..k_max {
                targets.push((0..n).filter(|_| rng.random_bool(keep)).collect());
                out.push(check_sufficiency(&g, &targets, &flags).sufficient);
            }
            out
        })
        .collect();
    let mut table = Table::new(&["interventions", "proportion", "replications"]);
    for k in 0..=k_max {
        let hits = per_rep.iter().filter(|r| r[k]).count();
        table.push(vec![
            k.into(),
            (hits as f64 / cfg.replications as f64).into(),
            cfg.replications.into(),
        ]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::super::TestKind;
    use super::*;

    #[test]
    fn oracle_mode_has_zero_shd() {
        let cfg = ExperimentConfig {
            n_values: vec![3, 6],
            replications: 3,
            sample_sizes: vec![30],
            test: TestKind::Oracle,
            ..ExperimentConfig::preset(ExperimentKind::ShdVsN)
        };
        let t = run_discovery_experiment(&cfg).unwrap();
        assert!(t.column("mean_shd").iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sufficiency_proportion_is_monotone() {
        let cfg = ExperimentConfig {
            n: 10,
            replications: 20,
            max_interventions: Some(40),
            ..ExperimentConfig::preset(ExperimentKind::Sufficiency)
        };
        let p = run_sufficiency_experiment(&cfg).unwrap().column("proportion");
        assert!(p.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(p.len(), 41);
    }
}
