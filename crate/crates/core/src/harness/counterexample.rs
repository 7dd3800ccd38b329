use super::{ExperimentConfig, Table};
use crate::discovery::{check_sufficiency, SufficiencyReport};
use crate::error::Result;
use crate::fixtures;
use crate::graph::{Dag, NodeSet};
use crate::scm::{ConfoundedAnm, InterventionSampler, McEstimate, NoiseSpec, StructuralFunction, ValuePolicy};
use crate::seeds::{derive_seed, stream};

/// Joint-intervention point at which the two Table 1 outcome laws are compared.
pub const JOINT_POINT: [f64; 2] = [1.0, 2.0];

/// Parent value at which the bump fires.
pub const BUMP_AT: f64 = 0.5;

/// Bump heights of the two necessity models.
pub const BUMP_HEIGHTS: [f64; 2] = [1.0, 3.0];

/// Side-by-side Monte-Carlo summaries of Table 1's `M1` and `M2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1Comparison {
    pub var_x1: [McEstimate; 2],
    pub var_x2: [McEstimate; 2],
    pub cov_x1x2: [McEstimate; 2],
    /// `E[Y | do(X1, X2) = JOINT_POINT]`.
    pub joint_y: [McEstimate; 2],
    /// Outcome variance under the same joint intervention.
    pub joint_y_var: [McEstimate; 2],
    /// `E[X2 | do(X1 = 1)]`.
    pub do_x1: [McEstimate; 2],
}

fn moment(xs: &[f64], ys: &[f64]) -> McEstimate {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    McEstimate::from_samples(&prods)
}

fn compare_one(anm: &ConfoundedAnm, m: usize, seed: u64) -> Result<[McEstimate; 6]> {
    let obs = anm.sample(&NodeSet::new(), &ValuePolicy::StdNormal, m, derive_seed(seed, stream::OBSERVATIONAL, 0))?;
    let joint = anm.sample(&[0, 1].into(), &ValuePolicy::Fixed(JOINT_POINT.to_vec()), m, derive_seed(seed, stream::JOINT, 0))?;
    let single = anm.sample(&[0].into(), &ValuePolicy::Fixed(vec![1.0]), m, derive_seed(seed, stream::DATA, 0))?;
    Ok([
        moment(obs.column(0), obs.column(0)),
        moment(obs.column(1), obs.column(1)),
        moment(obs.column(0), obs.column(1)),
        McEstimate::from_samples(joint.outcome()),
        moment(joint.outcome(), joint.outcome()),
        McEstimate::from_samples(single.column(1)),
    ])
}

/// Samples both Table 1 models with `m` rows per regime.
pub fn table1_comparison(m: usize, seed: u64) -> Result<Table1Comparison> {
    let a = compare_one(&fixtures::table1_m1(), m, derive_seed(seed, stream::REPLICATION, 1))?;
    let b = compare_one(&fixtures::table1_m2(), m, derive_seed(seed, stream::REPLICATION, 2))?;
    Ok(Table1Comparison {
        var_x1: [a[0], b[0]],
        var_x2: [a[1], b[1]],
        cov_x1x2: [a[2], b[2]],
        joint_y: [a[3], b[3]],
        joint_y_var: [a[4], b[4]],
        do_x1: [a[5], b[5]],
    })
}

/// Chain `X1 → X2 → X3` with `X2 = X1 + h·1{X1 = BUMP_AT} + U2`,
/// `X3 = X2 + U3`, `Y = X1 + X2 + X3 + U_Y`, for each bump height `h`.
pub fn bump_pair() -> (ConfoundedAnm, ConfoundedAnm) {
    let build = |height: f64| {
        let g = Dag::new(3, [(0, 1), (1, 2)]).expect("static graph");
        let cov: [&[f64]; 4] = [&[1.0, 0.3, 0.2, 0.1], &[0.3, 1.0, 0.3, 0.2], &[0.2, 0.3, 1.0, 0.3], &[0.1, 0.2, 0.3, 1.0]];
        let noise = NoiseSpec::from_rows(&[0.0; 4], &cov).expect("static covariance");
        let f = vec![
            StructuralFunction::constant(0.0),
            StructuralFunction::constant(0.0)
                .with_linear(0, 1.0)
                .with_bump(vec![(0, BUMP_AT)], height),
            StructuralFunction::constant(0.0).with_linear(1, 1.0),
        ];
        let fy = StructuralFunction::constant(0.0)
            .with_linear(0, 1.0)
            .with_linear(1, 1.0)
            .with_linear(2, 1.0);
        ConfoundedAnm::unflagged(g, f, fy, noise).expect("static model")
    };
    (build(BUMP_HEIGHTS[0]), build(BUMP_HEIGHTS[1]))
}

/// Evidence that the bump pair cannot be told apart without a witness for `X2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NecessityDemo {
    /// Every target set of the chain that is not a witness for `X2`.
    pub targets: Vec<NodeSet>,
    /// Largest `|Δ| / SE` over column means and second moments of all
    /// available regimes.
    pub max_z: f64,
    pub comparisons: usize,
    pub report: SufficiencyReport,
    /// `E[Y | do(X1 = BUMP_AT)]` under each model.
    pub separating: [McEstimate; 2],
}

/// Compares the bump pair on every non-witness regime with `m` rows each.
pub fn necessity_demo(m: usize, seed: u64) -> Result<NecessityDemo> {
    let (a, b) = bump_pair();
    let j = 1;
    let pa = a.graph().parent_set(j);
    let targets: Vec<NodeSet> = (0..8usize)
        .map(|mask| (0..3).filter(|i| mask >> i & 1 == 1).collect::<NodeSet>())
        .filter(|s| s.contains(&j) || !pa.is_subset(s))
        .collect();
    let mut max_z: f64 = 0.0;
    let mut comparisons = 0;
    for (k, t) in targets.iter().enumerate() {
        let policy = a.randomized_policy(t);
        let da = a.sample(t, &policy, m, derive_seed(seed, stream::DATA, 2 * k as u64))?;
        let db = b.sample(t, &policy, m, derive_seed(seed, stream::DATA, 2 * k as u64 + 1))?;
        for c in (0..=3).filter(|c| !t.contains(c)) {
            let col = |d: &crate::scm::InterventionalDataset| {
                if c == 3 {
                    d.outcome().to_vec()
                } else {
                    d.column(c).to_vec()
                }
            };
            let (xa, xb) = (col(&da), col(&db));
            let sq = |x: &[f64]| x.iter().map(|v| v * v).collect::<Vec<f64>>();
            for (ea, eb) in [
                (McEstimate::from_samples(&xa), McEstimate::from_samples(&xb)),
                (McEstimate::from_samples(&sq(&xa)), McEstimate::from_samples(&sq(&xb))),
            ] {
                let z = (ea.mean - eb.mean).abs() / (ea.se.powi(2) + eb.se.powi(2)).sqrt();
                max_z = max_z.max(z);
                comparisons += 1;
            }
        }
    }
    let report = check_sufficiency(a.graph(), &targets, &[false; 3]);
    let pin = ValuePolicy::Fixed(vec![BUMP_AT]);
    let sa = a.sample(&[0].into(), &pin, m, derive_seed(seed, stream::ORACLE, 0))?;
    let sb = b.sample(&[0].into(), &pin, m, derive_seed(seed, stream::ORACLE, 1))?;
    Ok(NecessityDemo {
        targets,
        max_z,
        comparisons,
        report,
        separating: [McEstimate::from_samples(sa.outcome()), McEstimate::from_samples(sb.outcome())],
    })
}

/// Both non-identifiability demonstrations as one table.
pub fn run_counterexample_experiment(cfg: &ExperimentConfig) -> Result<Table> {
    let m = cfg.oracle_draws;
    let t1 = table1_comparison(m, cfg.seed)?;
    let demo = necessity_demo(m, cfg.seed)?;
    let mut table = Table::new(&["quantity", "model_1", "model_2", "difference", "se_1", "se_2"]);
    let mut row = |name: &str, pair: [McEstimate; 2]| {
        table.push(vec![
            name.into(),
            pair[0].mean.into(),
            pair[1].mean.into(),
            (pair[1].mean - pair[0].mean).into(),
            pair[0].se.into(),
            pair[1].se.into(),
        ]);
    };
    row("table1_var_x1", t1.var_x1);
    row("table1_var_x2", t1.var_x2);
    row("table1_cov_x1_x2", t1.cov_x1x2);
    row("table1_joint_y_mean", t1.joint_y);
    row("table1_joint_y_var", t1.joint_y_var);
    row("table1_x2_given_do_x1", t1.do_x1);
    row("bump_y_given_do_x1", demo.separating);
    table.push(vec![
        "bump_available_max_z".into(),
        demo.max_z.into(),
        demo.max_z.into(),
        0.0.into(),
        0.0.into(),
        0.0.into(),
    ]);
    Ok(table)
}
