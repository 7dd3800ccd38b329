use canm_core::fixtures;
use canm_core::graph::{random_dag, NodeSet};
use canm_core::scm::{random_anm, ConfoundedAnm, InterventionSampler, RandomAnmConfig, ValuePolicy};
use proptest::prelude::*;

fn covariance(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = cols[0].len() as f64;
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / m).collect();
    (0..cols.len())
        .map(|i| {
            (0..cols.len())
                .map(|j| {
                    cols[i].iter().zip(&cols[j]).map(|(a, b)| (a - means[i]) * (b - means[j])).sum::<f64>() / (m - 1.0)
                })
                .collect()
        })
        .collect()
}

fn residuals(anm: &ConfoundedAnm, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = anm.n();
    let ds = anm.sample(&NodeSet::new(), &ValuePolicy::StdNormal, m, seed).unwrap();
    let mut cols = vec![Vec::with_capacity(m); n + 1];
    for r in 0..m {
        let x: Vec<f64> = (0..n).map(|j| ds.value(r, j)).collect();
        for (i, col) in cols.iter_mut().enumerate().take(n) {
            col.push(x[i] - anm.treatment_fn(i).eval(&x));
        }
        cols[n].push(ds.value(r, n) - anm.outcome_fn().eval(&x));
    }
    cols
}

#[test]
fn residual_covariance_matches_sigma() {
    for seed in 0..3 {
        let g = random_dag(4, 3, 0.6, seed);
        let cfg = RandomAnmConfig { pairwise_prob: 0.5, ..RandomAnmConfig::default() };
        let anm = random_anm(&g, &cfg, seed).unwrap();
        let emp = covariance(&residuals(&anm, 100_000, seed + 100));
        let sigma = anm.noise().cov();
        let (mut diff, mut norm) = (0.0, 0.0);
        for (i, row) in emp.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                diff += (v - sigma[(i, j)]).powi(2);
                norm += sigma[(i, j)].powi(2);
            }
            let rel = (row[i] - sigma[(i, i)]).abs() / sigma[(i, i)];
            assert!(rel < 0.05, "seed {seed} variance {i}: relative error {rel}");
        }
        let rel = (diff / norm).sqrt();
        assert!(rel < 0.05, "seed {seed}: relative Frobenius error {rel}");
    }
}

#[test]
fn counterexample_observational_moments() {
    let ds = fixtures::table1_m1().sample(&NodeSet::new(), &ValuePolicy::StdNormal, 100_000, 5).unwrap();
    let cov = covariance(&[ds.column(0).to_vec(), ds.column(1).to_vec()]);
    assert!((cov[1][1] - 3.0).abs() < 0.1, "Var(X2) = {}", cov[1][1]);
    assert!((cov[0][1] - 1.5).abs() < 0.05, "Cov(X1, X2) = {}", cov[0][1]);
}

#[test]
fn single_treatment_oracles_follow_closed_forms() {
    for (anm, slope) in [(fixtures::appendix_m1(), 3.0), (fixtures::appendix_m3(), 5.0)] {
        for x1 in [-1.5, 0.0, 2.0] {
            let est = anm.true_ace_oracle(&NodeSet::from([0]), &[x1], 100_000, 9).unwrap();
            let z = (est.mean - slope * x1).abs() / est.se;
            assert!(z < 3.0, "slope {slope} x1 {x1}: {est:?}");
        }
    }
}

#[test]
fn joint_intervention_mean_is_the_shifted_outcome_function() {
    let g = random_dag(3, 2, 0.8, 4);
    let cfg = RandomAnmConfig { pairwise_prob: 1.0, ..RandomAnmConfig::default() };
    let anm = random_anm(&g, &cfg, 4).unwrap();
    let x = [0.7, -1.2, 0.4];
    let all: NodeSet = (0..3).collect();
    let ds = anm.sample(&all, &ValuePolicy::Fixed(x.to_vec()), 100_000, 3).unwrap();
    let ys = ds.outcome();
    let m = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / m;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let expected = anm.outcome_fn().eval(&x) + anm.noise().mean()[3];
    assert!((mean - expected).abs() < 3.0 * sd / m.sqrt(), "{mean} vs {expected}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampling_is_bitwise_deterministic(n in 1usize..6, graph_seed in any::<u64>(), mask in any::<u8>(), seed in any::<u64>()) {
        let g = random_dag(n, 3, 0.5, graph_seed);
        let anm = random_anm(&g, &RandomAnmConfig::default(), graph_seed).unwrap();
        let s: NodeSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let a = anm.sample(&s, &ValuePolicy::StdNormal, 50, seed).unwrap();
        let b = anm.sample(&s, &ValuePolicy::StdNormal, 50, seed).unwrap();
        prop_assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        for r in 0..50 {
            for j in 0..=n {
                prop_assert_eq!(a.value(r, j).to_bits(), b.value(r, j).to_bits());
            }
        }
    }
}
