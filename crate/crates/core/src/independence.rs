//! Marginal dependence tests between an intervened and a non-intervened
//! variable, plus an exact graphical oracle.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::graph::{Admg, NodeSet};
use crate::scm::InterventionalDataset;
use crate::seeds;

pub const DEFAULT_LEVEL: f64 = 0.01;
pub const DEFAULT_PERMUTATIONS: usize = 200;
pub const MIN_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceVerdict {
    pub dependent: bool,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Distance correlation with a permutation p-value.
    Dcorr,
    /// Pearson correlation with a two-sided t-test.
    Pearson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub backend: Backend,
    pub level: f64,
    pub permutations: usize,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            backend: Backend::Dcorr,
            level: DEFAULT_LEVEL,
            permutations: DEFAULT_PERMUTATIONS,
        }
    }
}

fn check_inputs(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::usage(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < MIN_SAMPLES {
        return Err(Error::usage(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            xs.len()
        )));
    }
    for (name, v) in [("xs", xs), ("ys", ys)] {
        if v.iter().all(|&x| x == v[0]) {
            return Err(Error::usage(format!("{name} is constant")));
        }
    }
    Ok(())
}

/// Double-centered pairwise distance matrix, row-major `m × m`.
fn centered_distances(v: &[f64]) -> Vec<f64> {
    let m = v.len();
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            d[i * m + j] = (v[i] - v[j]).abs();
        }
    }
    let row_means: Vec<f64> = (0..m).map(|i| d[i * m..(i + 1) * m].iter().sum::<f64>() / m as f64).collect();
    let grand = row_means.iter().sum::<f64>() / m as f64;
    for i in 0..m {
        for j in 0..m {
            d[i * m + j] -= row_means[i] + row_means[j] - grand;
        }
    }
    d
}

fn cross_mean(a: &[f64], b: &[f64], m: usize, perm: Option<&[usize]>) -> f64 {
    let mut s = 0.0;
    match perm {
        None => s = a.iter().zip(b).map(|(x, y)| x * y).sum(),
        Some(p) => {
            for i in 0..m {
                let row_a = &a[i * m..(i + 1) * m];
                let row_b = &b[p[i] * m..(p[i] + 1) * m];
                for j in 0..m {
                    s += row_a[j] * row_b[p[j]];
                }
            }
        }
    }
    s / (m * m) as f64
}

/// Sample distance correlation in `[0, 1]`.
pub fn distance_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_inputs(xs, ys)?;
    let m = xs.len();
    let a = centered_distances(xs);
    let b = centered_distances(ys);
    Ok(dcor_from(&a, &b, m, None))
}

fn dcor_from(a: &[f64], b: &[f64], m: usize, perm: Option<&[usize]>) -> f64 {
    let vx = cross_mean(a, a, m, None);
    let vy = cross_mean(b, b, m, None);
    let cov = cross_mean(a, b, m, perm).max(0.0);
    (cov / (vx * vy).sqrt()).sqrt()
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_inputs(xs, ys)?;
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Runs the configured backend at significance `cfg.level`.
pub fn test_independence(xs: &[f64], ys: &[f64], cfg: &TestConfig, seed: u64) -> Result<IndependenceVerdict> {
    check_inputs(xs, ys)?;
    let m = xs.len();
    let (statistic, p_value) = match cfg.backend {
        Backend::Pearson => {
            let r = pearson(xs, ys)?;
            let df = (m - 2) as f64;
            let p = if r.abs() >= 1.0 {
                0.0
            } else {
                let t = r * (df / (1.0 - r * r)).sqrt();
                let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::numerical(e.to_string()))?;
                (2.0 * dist.cdf(-t.abs())).min(1.0)
            };
            (r, p)
        }
        Backend::Dcorr => {
            let a = centered_distances(xs);
            let b = centered_distances(ys);
            let observed = dcor_from(&a, &b, m, None);
            let mut rng = seeds::rng(seed);
            let mut perm: Vec<usize> = (0..m).collect();
            let mut exceed = 0usize;
            for _ in 0..cfg.permutations {
                perm.shuffle(&mut rng);
                if dcor_from(&a, &b, m, Some(&perm)) >= observed {
                    exceed += 1;
                }
            }
            (observed, (1 + exceed) as f64 / (1 + cfg.permutations) as f64)
        }
    };
    Ok(IndependenceVerdict {
        dependent: p_value < cfg.level,
        statistic,
        p_value,
    })
}

/// Exact answer to "is `b` dependent on the randomized `a` under `do(intervened)`".
pub fn oracle_dependent(g: &Admg, intervened: &NodeSet, a: usize, b: usize) -> Result<bool> {
    let n = g.dag.n();
    if a >= n || b >= n {
        return Err(Error::usage(format!("nodes ({a}, {b}) out of range for n = {n}")));
    }
    if !intervened.contains(&a) || intervened.contains(&b) {
        return Err(Error::usage(format!(
            "query needs {a} intervened and {b} not intervened"
        )));
    }
    Ok(g.dag.without_incoming(intervened).has_path(a, b))
}

/// Backend used by the discovery algorithms.
pub trait DependenceTest: Sync {
    /// Whether the test reads sample data (the oracle does not).
    fn uses_samples(&self) -> bool {
        true
    }

    /// Tests `a ∈ targets` against `b ∉ targets` at significance `level`.
    fn test(
        &self,
        targets: &NodeSet,
        data: Option<&InterventionalDataset>,
        a: usize,
        b: usize,
        level: f64,
        seed: u64,
    ) -> Result<IndependenceVerdict>;

    fn level(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StatisticalTest {
    pub config: TestConfig,
}

impl StatisticalTest {
    pub fn new(config: TestConfig) -> Self {
        StatisticalTest { config }
    }
}

impl DependenceTest for StatisticalTest {
    fn test(
        &self,
        _targets: &NodeSet,
        data: Option<&InterventionalDataset>,
        a: usize,
        b: usize,
        level: f64,
        seed: u64,
    ) -> Result<IndependenceVerdict> {
        let ds = data.ok_or_else(|| Error::usage("statistical test needs a dataset"))?;
        let cfg = TestConfig { level, ..self.config };
        let ys = ds.column(b);
        if ys.iter().all(|&y| y == ys[0]) {
            return Ok(IndependenceVerdict {
                dependent: false,
                statistic: 0.0,
                p_value: 1.0,
            });
        }
        test_independence(ds.column(a), ys, &cfg, seed)
    }

    fn level(&self) -> f64 {
        self.config.level
    }
}

/// Exact test answered from the true graph.
#[derive(Debug, Clone)]
pub struct OracleTest {
    pub graph: Admg,
}

impl OracleTest {
    pub fn new(graph: Admg) -> Self {
        OracleTest { graph }
    }
}

impl DependenceTest for OracleTest {
    fn uses_samples(&self) -> bool {
        false
    }

    fn test(
        &self,
        targets: &NodeSet,
        _data: Option<&InterventionalDataset>,
        a: usize,
        b: usize,
        _level: f64,
        _seed: u64,
    ) -> Result<IndependenceVerdict> {
        let dependent = oracle_dependent(&self.graph, targets, a, b)?;
        Ok(IndependenceVerdict {
            dependent,
            statistic: if dependent { 1.0 } else { 0.0 },
            p_value: 1.0,
        })
    }

    fn level(&self) -> f64 {
        DEFAULT_LEVEL
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Dag;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(m: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeds::rng(seed);
        (0..m).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn dcor_detects_strong_linear_dependence() {
        let xs = normals(500, 1);
        let noise = normals(500, 2);
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x + 0.1 * e).collect();
        let v = test_independence(&xs, &ys, &TestConfig::default(), 3).unwrap();
        assert!(v.dependent);
        assert!(v.statistic > 0.9);
    }

    #[test]
    fn dcor_detects_quadratic_dependence_pearson_misses() {
        let xs = normals(500, 4);
        let noise = normals(500, 5);
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x * x + 0.1 * e).collect();
        assert!(test_independence(&xs, &ys, &TestConfig::default(), 6).unwrap().dependent);
        let pearson_cfg = TestConfig {
            backend: Backend::Pearson,
            ..Default::default()
        };
        let r = test_independence(&xs, &ys, &pearson_cfg, 6).unwrap();
        assert!(r.statistic.abs() < 0.2);
    }

    #[test]
    fn dcor_matches_textbook_definition() {
        let xs = normals(30, 7);
        let ys: Vec<f64> = normals(30, 8).iter().zip(&xs).map(|(e, x)| e + x.sin()).collect();
        let m = xs.len();
        let dist = |v: &[f64]| -> Vec<Vec<f64>> {
            (0..m).map(|i| (0..m).map(|j| (v[i] - v[j]).abs()).collect()).collect()
        };
        let (dx, dy) = (dist(&xs), dist(&ys));
        let mean = |d: &Vec<Vec<f64>>| d.iter().flatten().sum::<f64>() / (m * m) as f64;
        let term = |d1: &Vec<Vec<f64>>, d2: &Vec<Vec<f64>>| {
            let s1 = mean(&(0..m).map(|i| (0..m).map(|j| d1[i][j] * d2[i][j]).collect()).collect());
            let s2 = mean(d1) * mean(d2);
            let mut s3 = 0.0;
            for i in 0..m {
                let r1: f64 = d1[i].iter().sum::<f64>() / m as f64;
                let r2: f64 = d2[i].iter().sum::<f64>() / m as f64;
                s3 += r1 * r2;
            }
            s1 + s2 - 2.0 * s3 / m as f64
        };
        let expected = (term(&dx, &dy) / (term(&dx, &dx) * term(&dy, &dy)).sqrt()).sqrt();
        assert!((distance_correlation(&xs, &ys).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let xs = normals(30, 1);
        assert!(test_independence(&xs, &xs[..29], &TestConfig::default(), 0).is_err());
        assert!(test_independence(&xs, &[1.0; 30], &TestConfig::default(), 0).is_err());
        assert!(test_independence(&xs[..10], &xs[..10], &TestConfig::default(), 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let xs = normals(100, 1);
        let ys = normals(100, 2);
        let cfg = TestConfig::default();
        assert_eq!(
            test_independence(&xs, &ys, &cfg, 5).unwrap(),
            test_independence(&xs, &ys, &cfg, 5).unwrap()
        );
    }

    #[test]
    fn oracle_examples() {
        let chain = Admg::new(Dag::new(3, [(0, 1), (1, 2)]).unwrap(), []).unwrap();
        assert!(oracle_dependent(&chain, &[0].into(), 0, 2).unwrap());
        let pair = Admg::new(Dag::new(2, [(0, 1)]).unwrap(), []).unwrap();
        assert!(!oracle_dependent(&pair, &[1].into(), 1, 0).unwrap());
        assert!(oracle_dependent(&pair, &[0, 1].into(), 0, 1).is_err());
        let confounded = Admg::new(Dag::empty(3), [(0, 2)]).unwrap();
        assert!(!oracle_dependent(&confounded, &[0].into(), 0, 2).unwrap());
    }
}
