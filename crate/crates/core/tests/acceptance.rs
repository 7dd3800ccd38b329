//! Acceptance gate: one line per criterion, non-zero exit when any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use canm_core::discovery::{check_sufficiency, core_intervention_plan, learn_observable_graph, learn_transitive_closure, DiscoveryConfig};
use canm_core::estimation::{fit_model, AceQuery, FitConfig};
use canm_core::fixtures;
use canm_core::graph::{random_dag, shd, Admg, Dag, NodeSet};
use canm_core::harness::{
    healthcare_model, necessity_demo, run_discovery_experiment, run_experiment, run_healthcare_experiment,
    run_mae_experiment, table1_comparison, ExperimentConfig, ExperimentKind, TestKind,
};
use canm_core::independence::OracleTest;
use canm_core::scm::{random_anm, ConfoundedAnm, InterventionSampler, McEstimate, RandomAnmConfig, ValuePolicy};
use canm_core::seeds::derive_seed;
use canm_core::setsys::{ceil_log2, strongly_separating};
use statrs::distribution::{ContinuousCDF, Normal};

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn set(v: &[usize]) -> NodeSet {
    v.iter().copied().collect()
}

fn combined(a: McEstimate, b: McEstimate) -> f64 {
    (a.se.powi(2) + b.se.powi(2)).sqrt()
}

fn ac1_separating_systems() -> Verdict {
    let start = Instant::now();
    let mut worst = None;
    for n in 2..=1024usize {
        let sys = strongly_separating(n).unwrap();
        let masks: Vec<u32> = (0..n)
            .map(|v| {
                sys.sets
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.contains(&v))
                    .fold(0u32, |m, (k, _)| m | 1 << k)
            })
            .collect();
        let separated = (0..n).all(|i| (0..n).all(|j| i == j || (masks[i] & !masks[j] != 0 && masks[j] & !masks[i] != 0)));
        let bound = 2 * ceil_log2(n);
        if !separated || sys.sets.len() > bound {
            worst = Some((n, separated, sys.sets.len(), bound));
            break;
        }
    }
    let elapsed = start.elapsed();
    match worst {
        None => verdict(elapsed < Duration::from_secs(30), format!("n=2..1024 separated within bound in {elapsed:.2?} (limit 30s)")),
        Some((n, sep, len, bound)) => verdict(false, format!("n={n}: separated={sep}, |sets|={len}, bound={bound}")),
    }
}

fn dfs_reach(n: usize, edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    let mut out = BTreeSet::new();
    for s in 0..n {
        let mut seen = vec![false; n];
        let mut stack = adj[s].clone();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                out.insert((s, v));
                stack.extend(adj[v].iter().copied());
            }
        }
    }
    out
}

fn ac2_closure_reduction() -> Verdict {
    let mut max_edges = 0;
    for k in 0..200u64 {
        let n = 1 + (k as usize % 8);
        let p = [0.3, 0.5, 0.8][k as usize % 3];
        let g = random_dag(n, 4, p, derive_seed(SEED, 2, k));
        let edges = g.edges();
        max_edges = max_edges.max(edges.len());
        let truth = dfs_reach(n, &edges);
        let closure: BTreeSet<_> = g.transitive_closure().edges().into_iter().collect();
        if closure != truth {
            return verdict(false, format!("closure mismatch on graph {k}: {edges:?}"));
        }
        let mut best: Option<(usize, Vec<BTreeSet<(usize, usize)>>)> = None;
        for mask in 0u32..1 << edges.len() {
            let subset: Vec<_> = (0..edges.len()).filter(|b| mask >> b & 1 == 1).map(|b| edges[b]).collect();
            if best.as_ref().is_some_and(|(size, _)| subset.len() > *size) || dfs_reach(n, &subset) != truth {
                continue;
            }
            let s: BTreeSet<_> = subset.iter().copied().collect();
            match &mut best {
                Some((size, all)) if *size == s.len() => all.push(s),
                _ => best = Some((s.len(), vec![s])),
            }
        }
        let (_, minima) = best.expect("the full edge set qualifies");
        let reduction: BTreeSet<_> = g.transitive_reduction().edges().into_iter().collect();
        if minima.len() != 1 || minima[0] != reduction {
            return verdict(false, format!("reduction mismatch on graph {k}: {} minima", minima.len()));
        }
    }
    verdict(true, format!("200 DAGs with n<=8 (up to {max_edges} edges) match DFS and exhaustive-subset oracles"))
}

fn oracle_for(anm: &ConfoundedAnm) -> OracleTest {
    OracleTest::new(Admg::from_covariance(anm.graph().clone(), anm.noise().cov()))
}

fn ac3_closure_exactness() -> Verdict {
    let mut worst_shd = 0;
    let mut over_budget = 0;
    for k in 0..100u64 {
        let n = 2 + (k as usize % 9);
        let g = random_dag(n, 4, 0.5, derive_seed(SEED, 3, k));
        let anm = random_anm(&g, &RandomAnmConfig::default(), k).unwrap();
        let run = learn_transitive_closure(&anm, &oracle_for(&anm), 20, k).unwrap();
        worst_shd = worst_shd.max(shd(&run.closure, &g.transitive_closure()).unwrap());
        if run.interventions > 2 * ceil_log2(n) {
            over_budget += 1;
        }
    }
    verdict(
        worst_shd == 0 && over_budget == 0,
        format!("100 DAGs n<=10: max SHD to closure {worst_shd}, runs over 2*ceil(log2 n) interventions {over_budget}"),
    )
}

fn ac4_observable_graph() -> Verdict {
    let start = Instant::now();
    let n = 20;
    let (mut exact, mut sufficient, mut worst_ratio) = (0, 0, 0.0f64);
    let trials = 200;
    for k in 0..trials {
        let g = random_dag(n, 4, 4.0 / 19.0, derive_seed(SEED, 4, k));
        let d_max = g.max_degree().max(2);
        let anm = random_anm(&g, &RandomAnmConfig::default(), k).unwrap();
        let cfg = DiscoveryConfig {
            d_max,
            alpha: 3.0,
            samples: 10,
            bonferroni: false,
            retain_closure_datasets: false,
        };
        let res = learn_observable_graph(&anm, &oracle_for(&anm), &cfg, k).unwrap();
        exact += usize::from(res.learned_graph == g);
        let mut targets = res.targets();
        targets.push(NodeSet::new());
        targets.push((0..n).collect());
        sufficient += usize::from(check_sufficiency(&g, &targets, &[false; 20]).sufficient);
        let bound = 8.0 * 3.0 * d_max as f64 * (n as f64).log2().powi(2);
        worst_ratio = worst_ratio.max(res.interventions_used as f64 / bound);
    }
    let elapsed = start.elapsed();
    let (pe, ps) = (exact as f64 / trials as f64, sufficient as f64 / trials as f64);
    verdict(
        pe >= 0.95 && ps >= 0.95 && worst_ratio <= 1.0 && elapsed < Duration::from_secs(300),
        format!(
            "exact {pe:.3} (>=0.95), sufficient {ps:.3} (>=0.95), max interventions/bound {worst_ratio:.3} (<=1), {elapsed:.1?} (<5min)"
        ),
    )
}

fn ac5_discovery_trends() -> Verdict {
    let samples_cfg = ExperimentConfig {
        seed: SEED,
        ..ExperimentConfig::preset(ExperimentKind::ShdVsSamples)
    };
    let by_samples = run_discovery_experiment(&samples_cfg).unwrap().column("mean_shd");
    let samples_ok = by_samples.windows(2).all(|w| w[1] <= w[0]);

    let n_cfg = ExperimentConfig {
        seed: SEED,
        ..ExperimentConfig::preset(ExperimentKind::ShdVsN)
    };
    let t = run_discovery_experiment(&n_cfg).unwrap();
    let ns = t.column("n");
    let ratio = t.column("shd_ratio");
    let slope = {
        let mx = ns.iter().sum::<f64>() / ns.len() as f64;
        let my = ratio.iter().sum::<f64>() / ratio.len() as f64;
        let sxy: f64 = ns.iter().zip(&ratio).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = ns.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    };
    let first_half = ratio[..ratio.len() / 2].iter().sum::<f64>() / (ratio.len() / 2) as f64;
    let second_half = ratio[ratio.len() / 2..].iter().sum::<f64>() / (ratio.len() - ratio.len() / 2) as f64;
    let n_ok = slope < 0.0 && second_half < first_half;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(",");
    verdict(
        samples_ok && n_ok,
        format!(
            "mean SHD at samples 100,300,1000,3000 = [{}] non-increasing={samples_ok}; SHD/(n(n-1)/2) slope over n=3..20 {slope:.2e}, halves {first_half:.4}->{second_half:.4}",
            fmt(&by_samples)
        ),
    )
}

struct FixtureCheck {
    worst_z: f64,
    detail: String,
}

fn pipeline_fits(anm: &ConfoundedAnm, reps: u64, salt: u64) -> Vec<canm_core::EstimatedModel> {
    let plan = core_intervention_plan(anm.graph(), &[false; 2]);
    (0..reps)
        .map(|r| {
            let data: Vec<_> = plan
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    anm.sample(t, &ValuePolicy::StdNormal, 10_000, derive_seed(SEED, salt, r * 16 + k as u64))
                        .unwrap()
                })
                .collect();
            fit_model(anm.graph(), &data, &FitConfig::default()).unwrap()
        })
        .collect()
}

fn sd(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Compares the first replicate's `E[Y | do(X1 = x1)]` with `slope·x1`; the
/// fit error is the spread of the estimate across replicate fits.
fn ace_fixture(name: &str, anm: &ConfoundedAnm, slope: f64, salt: u64) -> FixtureCheck {
    let models = pipeline_fits(anm, 20, salt);
    let mut worst_z: f64 = 0.0;
    for (i, &x1) in [-1.0, 0.5, 2.0].iter().enumerate() {
        let q = AceQuery::new(&set(&[0]), &[x1]).unwrap();
        let est: Vec<McEstimate> = models
            .iter()
            .enumerate()
            .map(|(r, m)| m.ace(&q, 100_000, derive_seed(SEED, salt + 100, (r * 8 + i) as u64)).unwrap())
            .collect();
        let fit_sd = sd(&est.iter().map(|e| e.mean).collect::<Vec<_>>());
        let tol = (fit_sd.powi(2) + est[0].se.powi(2)).sqrt();
        worst_z = worst_z.max((est[0].mean - slope * x1).abs() / tol);
    }
    FixtureCheck {
        worst_z,
        detail: format!("{name} max |err|/SE {worst_z:.2}"),
    }
}

fn ac6_closed_form_fixtures() -> Verdict {
    let m1 = ace_fixture("M1", &fixtures::appendix_m1(), 3.0, 61);
    let m3 = ace_fixture("M3", &fixtures::appendix_m3(), 5.0, 63);
    let models = pipeline_fits(&fixtures::correlated_outcome(), 20, 65);
    let mut worst: f64 = 0.0;
    for &(x1, x2) in &[(-1.0, -1.0), (0.5, 1.5), (2.0, -1.0), (1.0, 2.0)] {
        let q = AceQuery::new(&set(&[0]), &[x1]).unwrap();
        let est: Vec<f64> = models.iter().map(|m| m.conditional_ace(&q, &[x2]).unwrap()).collect();
        let truth = x1 + x2 + 0.5 * (x2 - x1);
        worst = worst.max((est[0] - truth).abs() / sd(&est));
    }
    let pass = m1.worst_z <= 3.0 && m3.worst_z <= 3.0 && worst <= 3.0;
    verdict(
        pass,
        format!("{}, {}, correlated-outcome conditional max |err|/SE {worst:.2} (<=3, 10^4 fit rows, 20 replicate fits)", m1.detail, m3.detail),
    )
}

fn ac7_mae() -> Verdict {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        seed: SEED,
        ..ExperimentConfig::preset(ExperimentKind::Mae)
    };
    let t = run_mae_experiment(&cfg).unwrap();
    let elapsed = start.elapsed();
    let samples = t.column("samples");
    let mae = t.column("mae");
    let failures = t.column("failures");
    let means: Vec<f64> = cfg
        .sample_sizes
        .iter()
        .map(|&s| {
            let v: Vec<f64> = samples.iter().zip(&mae).filter(|(x, _)| **x == s as f64).map(|(_, m)| *m).collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    let last = *means.last().unwrap();
    let trend = means.windows(2).all(|w| w[1] <= w[0]);
    let fails = failures.iter().cloned().fold(0.0, f64::max);
    verdict(
        last <= 0.1 && trend && fails == 0.0 && elapsed < Duration::from_secs(600),
        format!(
            "mean MAE over 16 queries at 300/1000/3000 = {:.4}/{:.4}/{:.4} (last <=0.1, non-increasing={trend}), pipeline failures {fails}, {elapsed:.1?} (<10min)",
            means[0], means[1], means[2]
        ),
    )
}

fn ac8_table1() -> Verdict {
    let c = table1_comparison(100_000, SEED).unwrap();
    let agree = |p: [McEstimate; 2]| (p[0].mean - p[1].mean).abs() <= 3.0 * combined(p[0], p[1]);
    let near = |e: McEstimate, v: f64| (e.mean - v).abs() <= 3.0 * e.se;
    let obs = agree(c.cov_x1x2) && agree(c.var_x2) && agree(c.var_x1);
    let derived = c.cov_x1x2.iter().all(|&e| near(e, 1.5)) && c.var_x2.iter().all(|&e| near(e, 3.0));
    let joint = agree(c.joint_y) && agree(c.joint_y_var) && c.joint_y.iter().all(|&e| near(e, 2.0));
    let gap = c.do_x1[1].mean - c.do_x1[0].mean;
    let separated = (gap - 0.2).abs() <= 3.0 * combined(c.do_x1[0], c.do_x1[1]);
    verdict(
        obs && derived && joint && separated,
        format!(
            "Cov(X1,X2) {:.3}/{:.3}, Var(X2) {:.3}/{:.3}, E[Y|do(1,2)] {:.3}/{:.3}, E[X2|do(X1=1)] {:.3}/{:.3} (gap {gap:.3}, target 0.2)",
            c.cov_x1x2[0].mean, c.cov_x1x2[1].mean, c.var_x2[0].mean, c.var_x2[1].mean, c.joint_y[0].mean, c.joint_y[1].mean, c.do_x1[0].mean, c.do_x1[1].mean
        ),
    )
}

fn ac9_necessity() -> Verdict {
    let d = necessity_demo(100_000, SEED).unwrap();
    let z_limit = Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - 0.01 / (2.0 * d.comparisons as f64));
    let gap = d.separating[1].mean - d.separating[0].mean;
    let separated = (gap - 4.0).abs() <= 3.0 * combined(d.separating[0], d.separating[1]);
    verdict(
        d.max_z <= z_limit && d.report.missing == vec![1] && !d.report.sufficient && separated,
        format!(
            "{} regimes, max |z| {:.2} over {} moment comparisons (family limit {z_limit:.2}); gate missing {:?}; do(X1=0.5) gap {gap:.3} (target 4)",
            d.targets.len(),
            d.max_z,
            d.comparisons,
            d.report.missing
        ),
    )
}

fn all_dags(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for code in 0..3usize.pow(pairs.len() as u32) {
        let mut c = code;
        let mut edges = Vec::new();
        for &(i, j) in &pairs {
            match c % 3 {
                1 => edges.push((i, j)),
                2 => edges.push((j, i)),
                _ => {}
            }
            c /= 3;
        }
        let reach = dfs_reach(n, &edges);
        if (0..n).all(|v| !reach.contains(&(v, v))) {
            out.push(edges);
        }
    }
    out
}

fn ac10_gate_bruteforce() -> Verdict {
    let mut checked = 0usize;
    let mut counts = Vec::new();
    for n in 1..=5usize {
        let full: NodeSet = (0..n).collect();
        let pool: Vec<NodeSet> = [vec![], (0..n).collect(), vec![0], vec![0, 1], vec![1, 2], vec![0, 2, 4], vec![n - 1], vec![1, 3]]
            .into_iter()
            .map(|v| v.into_iter().filter(|&x| x < n).collect())
            .collect();
        let lists: Vec<Vec<NodeSet>> = (0u32..1 << pool.len())
            .filter(|m| m.count_ones() <= 6)
            .map(|m| (0..pool.len()).filter(|b| m >> b & 1 == 1).map(|b| pool[b].clone()).collect())
            .collect();
        let flag_sets: Vec<Vec<bool>> = vec![vec![false; n], vec![true; n], (0..n).map(|i| i == 0).collect(), (0..n).map(|i| i % 2 == 1).collect()];
        let dags = all_dags(n);
        counts.push(dags.len());
        for edges in &dags {
            let g = Dag::new(n, edges.iter().copied()).unwrap();
            let parents: Vec<BTreeSet<usize>> = (0..n).map(|v| edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect()).collect();
            for targets in &lists {
                for flags in &flag_sets {
                    let has_joint = targets.iter().any(|t| *t == full);
                    let has_obs = targets.iter().any(|t| t.is_empty());
                    let missing: Vec<usize> = (0..n)
                        .filter(|&i| !flags[i] && !targets.iter().any(|t| !t.contains(&i) && parents[i].iter().all(|p| t.contains(p))))
                        .collect();
                    let r = check_sufficiency(&g, targets, flags);
                    if r.sufficient != (has_joint && has_obs && missing.is_empty()) || r.missing != missing || r.has_joint != has_joint || r.has_observational != has_obs {
                        return verdict(false, format!("disagreement on n={n} edges={edges:?} targets={targets:?} flags={flags:?}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    verdict(true, format!("{checked} (graph, targets, flags) instances agree; DAG counts per n {counts:?}"))
}

fn ac11_healthcare() -> Verdict {
    let hc = healthcare_model().unwrap();
    let targets = vec![NodeSet::new(), set(&[0, 1]), set(&[0, 1, 2, 3])];
    let gate = check_sufficiency(&hc.treatment_graph(), &targets, &[false; 4]);
    let cfg = ExperimentConfig {
        seed: SEED,
        ..ExperimentConfig::preset(ExperimentKind::Healthcare)
    };
    let t = run_healthcare_experiment(&cfg).unwrap();
    let mae = t.column("mae");
    let reference = t.column("reference_mae");
    let finite = mae.len() == 16 && mae.iter().all(|v| v.is_finite());
    let (hm, rm) = (mae.iter().sum::<f64>() / 16.0, reference.iter().sum::<f64>() / 16.0);
    verdict(
        gate.sufficient && finite && hm > rm,
        format!(
            "gate sufficient={} (witnesses {:?}), 16 finite={finite}, mean MAE {hm:.4} vs linear reference {rm:.4} at {} samples",
            gate.sufficient, gate.witness, cfg.sample_sizes[0]
        ),
    )
}

fn ac12_determinism() -> Verdict {
    let small = |kind: ExperimentKind| {
        let base = ExperimentConfig::preset(kind);
        ExperimentConfig {
            seed: SEED,
            n_values: vec![3, 5],
            n: if kind == ExperimentKind::Healthcare { 4 } else { base.n.min(6) },
            replications: 3,
            sample_sizes: base.sample_sizes.iter().map(|s| s.min(&300)).copied().collect::<BTreeSet<_>>().into_iter().collect(),
            mc_draws: 2000,
            oracle_draws: 2000,
            max_interventions: Some(10),
            ..base
        }
    };
    let mut differing = Vec::new();
    for kind in ExperimentKind::ALL {
        let cfg = small(kind);
        let a = run_experiment(&cfg).unwrap().to_csv(&cfg);
        let b = run_experiment(&cfg).unwrap().to_csv(&cfg);
        if a != b {
            differing.push(kind.name());
        }
    }
    let mut dcorr = small(ExperimentKind::ShdVsN);
    dcorr.test = TestKind::Dcorr;
    if run_experiment(&dcorr).unwrap().to_csv(&dcorr) != run_experiment(&dcorr).unwrap().to_csv(&dcorr) {
        differing.push("shd_vs_n/dcorr");
    }
    verdict(differing.is_empty(), format!("reruns of all 6 experiments (plus dcorr discovery) byte-identical; differing: {differing:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("separating-system property", ac1_separating_systems),
        ("closure/reduction oracle equivalence", ac2_closure_reduction),
        ("transitive closure exact with oracle CI", ac3_closure_exactness),
        ("observable graph success rates", ac4_observable_graph),
        ("finite-sample discovery trends", ac5_discovery_trends),
        ("closed-form ACE fixtures", ac6_closed_form_fixtures),
        ("MAE at desk scale", ac7_mae),
        ("non-identifiability witness", ac8_table1),
        ("necessity demonstration", ac9_necessity),
        ("identifiability-gate exactness", ac10_gate_bruteforce),
        ("HEALTHCARE study", ac11_healthcare),
        ("determinism", ac12_determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "AC{:<2} {} {name}: {} [{:.1?}]",
            k + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed()
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
