use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{make_test, Cell, ExperimentConfig, Table};
use crate::discovery::{learn_observable_graph, DiscoveryConfig};
use crate::error::{Error, Result};
use crate::estimation::{fit_model, AceQuery, FitConfig};
use crate::graph::{shd, NodeSet};
use crate::scm::{random_anm, RandomAnmConfig};
use crate::seeds::{self, derive_seed, stream};

/// Every subset of `0..n`, ordered by bitmask.
pub(crate) fn all_subsets(n: usize) -> Vec<NodeSet> {
    (0..1usize << n).map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect()).collect()
}

pub(crate) fn subset_label(s: &NodeSet) -> String {
    if s.is_empty() {
        return "{}".to_string();
    }
    let names: Vec<String> = s.iter().map(|i| format!("X{}", i + 1)).collect();
    names.join(";")
}

/// Per-replication errors for every query, `None` when the pipeline failed.
struct RepResult {
    errors: Vec<Option<Vec<f64>>>,
    shd: Vec<usize>,
    failures: Vec<String>,
}

fn replicate(cfg: &ExperimentConfig, rep: usize, queries: &[NodeSet]) -> Result<RepResult> {
    let n = cfg.n;
    let graph_seed = derive_seed(cfg.seed, stream::GRAPH, ((n as u64) << 32) | rep as u64);
    let g = cfg.random_dag(n, graph_seed);
    let anm_cfg = RandomAnmConfig {
        pairwise_prob: cfg.pairwise_prob,
        ..Default::default()
    };
    let anm = random_anm(&g, &anm_cfg, derive_seed(graph_seed, stream::MODEL, 0))?;
    let mut qrng = seeds::rng(derive_seed(graph_seed, stream::QUERY, 0));
    let values: Vec<Vec<f64>> = queries
        .iter()
        .map(|q| q.iter().map(|_| qrng.sample(StandardNormal)).collect())
        .collect();
    let truth: Vec<f64> = queries
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(k, (q, v))| {
            anm.true_ace_oracle(q, v, cfg.oracle_draws, derive_seed(graph_seed, stream::ORACLE, k as u64))
                .map(|e| e.mean)
        })
        .collect::<Result<_>>()?;

    let test = make_test(cfg.test, cfg.level, cfg.permutations, &anm);
    let mut out = RepResult {
        errors: Vec::new(),
        shd: Vec::new(),
        failures: Vec::new(),
    };
    for &samples in &cfg.sample_sizes {
        let dcfg = DiscoveryConfig {
            d_max: cfg.degree_for(n),
            alpha: cfg.alpha,
            samples,
            bonferroni: cfg.bonferroni,
            retain_closure_datasets: true,
        };
        let res = learn_observable_graph(&anm, test.as_ref(), &dcfg, derive_seed(graph_seed, stream::REPLICATION, samples as u64))?;
        out.shd.push(shd(&res.learned_graph, &g)?);
        let fit_cfg = FitConfig {
            regressor: cfg.regressor,
            independent: Vec::new(),
        };
        let model = match fit_model(&res.learned_graph, &res.collected, &fit_cfg) {
            Ok(m) => m,
            Err(e @ (Error::Identifiability { .. } | Error::SingularFit { .. } | Error::Numerical(_))) => {
                out.failures.push(format!("rep {rep} samples {samples}: {e}"));
                out.errors.push(None);
                continue;
            }
            Err(e) => return Err(e),
        };
        let errs = queries
            .iter()
            .zip(&values)
            .zip(&truth)
            .enumerate()
            .map(|(k, ((q, v), t))| {
                let est = model.ace(&AceQuery::new(q, v)?, cfg.mc_draws, derive_seed(graph_seed, stream::ESTIMATE, k as u64))?;
                Ok((est.mean - t).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        out.errors.push(Some(errs));
    }
    Ok(out)
}

/// Mean absolute ACE error per (sample size, query) through the full
/// discovery + estimation pipeline on random ANMs.
pub fn run_mae_experiment(cfg: &ExperimentConfig) -> Result<Table> {
    let queries = all_subsets(cfg.n);
    let reps: Vec<RepResult> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| replicate(cfg, rep, &queries))
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["samples", "query", "size", "mae", "sd", "successes", "failures", "mean_shd"]);
    for (s_idx, &samples) in cfg.sample_sizes.iter().enumerate() {
        let ok: Vec<&Vec<f64>> = reps.iter().filter_map(|r| r.errors[s_idx].as_ref()).collect();
        let failures = reps.len() - ok.len();
        let mean_shd = reps.iter().map(|r| r.shd[s_idx] as f64).sum::<f64>() / reps.len() as f64;
        for (k, q) in queries.iter().enumerate() {
            let errs: Vec<f64> = ok.iter().map(|e| e[k]).collect();
            let (mae, sd) = super::mean_sd(&errs);
            table.push(vec![
                samples.into(),
                subset_label(q).into(),
                q.len().into(),
                mae.into(),
                sd.into(),
                ok.len().into(),
                failures.into(),
                Cell::Num(mean_shd),
            ]);
        }
    }
    Ok(table)
}
