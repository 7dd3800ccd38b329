use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scm::StructuralFunction;

const RANK_TOL: f64 = 1e-9;

/// Regression backend used to fit shifted structural equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regressor {
    /// Least squares on intercept + linear + pairwise-product features.
    Basis,
    /// Least squares on intercept + linear features.
    Linear,
    /// Mean of the `k` nearest standardized neighbors.
    Knn { k: usize },
}

impl Default for Regressor {
    fn default() -> Self {
        Regressor::Basis
    }
}

pub const DEFAULT_KNN_K: usize = 20;

/// Column names and evaluators for the intercept/linear/pairwise basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    inputs: Vec<usize>,
    pairwise: bool,
}

impl FeatureBasis {
    pub fn new(inputs: Vec<usize>) -> Self {
        FeatureBasis { inputs, pairwise: true }
    }

    /// Intercept and linear terms only.
    pub fn linear(inputs: Vec<usize>) -> Self {
        FeatureBasis { inputs, pairwise: false }
    }

    pub fn len(&self) -> usize {
        let k = self.inputs.len();
        1 + k + self.pairs().count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = if self.pairwise { self.inputs.len() } else { 0 };
        self.inputs[..k]
            .iter()
            .enumerate()
            .flat_map(move |(a, &p)| self.inputs[a + 1..].iter().map(move |&q| (p, q)))
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["1".to_string()];
        names.extend(self.inputs.iter().map(|p| format!("X{}", p + 1)));
        names.extend(self.pairs().map(|(p, q)| format!("X{}*X{}", p + 1, q + 1)));
        names
    }

    fn row(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        out.extend(self.inputs.iter().map(|&p| x[p]));
        out.extend(self.pairs().map(|(p, q)| x[p] * x[q]));
    }

    /// Least-squares fit; `rows` yields full treatment vectors and targets.
    pub fn fit<'a>(&self, rows: impl Iterator<Item = (&'a [f64], f64)>) -> Result<StructuralFunction> {
        let p = self.len();
        let mut flat = Vec::new();
        let mut ys = Vec::new();
        let mut buf = Vec::with_capacity(p);
        for (x, y) in rows {
            self.row(x, &mut buf);
            flat.extend_from_slice(&buf);
            ys.push(y);
        }
        let m = ys.len();
        if m < p {
            return Err(Error::SingularFit {
                target: "equation".into(),
                features: self.names(),
            });
        }
        let mut design = DMatrix::from_row_slice(m, p, &flat);
        let mut scale = vec![1.0; p];
        for (j, s) in scale.iter_mut().enumerate() {
            let norm = design.column(j).norm();
            if norm > 0.0 {
                *s = norm;
                design.column_mut(j).scale_mut(1.0 / norm);
            }
        }
        let qr = design.qr();
        let r = qr.r();
        let names = self.names();
        let deficient: Vec<String> = (0..p)
            .filter(|&j| r[(j, j)].abs() < RANK_TOL)
            .map(|j| names[j].clone())
            .collect();
        if !deficient.is_empty() {
            return Err(Error::SingularFit {
                target: "equation".into(),
                features: deficient,
            });
        }
        let qty = qr.q().transpose() * DVector::from_vec(ys);
        let beta = r
            .solve_upper_triangular(&qty)
            .ok_or_else(|| Error::numerical("triangular solve failed"))?;
        let coef: Vec<f64> = beta.iter().zip(&scale).map(|(b, s)| b / s).collect();

        let k = self.inputs.len();
        let mut f = StructuralFunction::constant(coef[0]);
        for (a, &pnode) in self.inputs.iter().enumerate() {
            f = f.with_linear(pnode, coef[1 + a]);
        }
        for (idx, (pn, qn)) in self.pairs().enumerate() {
            f = f.with_pairwise(pn, qn, coef[1 + k + idx]);
        }
        Ok(f)
    }
}

/// Brute-force k-nearest-neighbor regressor on standardized inputs, with
/// the training points sorted along the first input for pruning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnModel {
    pub k: usize,
    pub inputs: Vec<usize>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    /// Row-major standardized points, `inputs.len()` values each.
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(PartialEq)]
struct Cand(f64, usize);

impl Eq for Cand {}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl KnnModel {
    pub fn fit<'a>(k: usize, inputs: Vec<usize>, rows: impl Iterator<Item = (&'a [f64], f64)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::usage("k must be at least 1"));
        }
        let d = inputs.len();
        let mut raw: Vec<Vec<f64>> = Vec::new();
        let mut values = Vec::new();
        for (x, y) in rows {
            raw.push(inputs.iter().map(|&p| x[p]).collect());
            values.push(y);
        }
        let m = values.len();
        if m == 0 {
            return Err(Error::usage("no rows to fit"));
        }
        let mut center = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let mean = raw.iter().map(|r| r[j]).sum::<f64>() / m as f64;
            let var = raw.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / m as f64;
            center[j] = mean;
            scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        let mut order: Vec<usize> = (0..m).collect();
        if d > 0 {
            order.sort_by(|&a, &b| raw[a][0].total_cmp(&raw[b][0]));
        }
        let mut points = Vec::with_capacity(m * d);
        let mut sorted_values = Vec::with_capacity(m);
        for &i in &order {
            points.extend((0..d).map(|j| (raw[i][j] - center[j]) / scale[j]));
            sorted_values.push(values[i]);
        }
        Ok(KnnModel {
            k: k.min(m),
            inputs,
            center,
            scale,
            points,
            values: sorted_values,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let d = self.inputs.len();
        let m = self.values.len();
        if d == 0 {
            return self.values.iter().sum::<f64>() / m as f64;
        }
        let q: Vec<f64> = (0..d).map(|j| (x[self.inputs[j]] - self.center[j]) / self.scale[j]).collect();
        let dist = |i: usize| -> f64 {
            let p = &self.points[i * d..(i + 1) * d];
            p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        let (mut a, mut b) = (0, m);
        while a < b {
            let mid = (a + b) / 2;
            if self.points[mid * d] < q[0] {
                a = mid + 1;
            } else {
                b = mid;
            }
        }
        let start = a;
        let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(self.k + 1);
        let (mut lo, mut hi) = (start, start);
        loop {
            let worst = if heap.len() == self.k {
                heap.peek().map_or(f64::INFINITY, |c| c.0)
            } else {
                f64::INFINITY
            };
            let gap_lo = (lo > 0).then(|| (q[0] - self.points[(lo - 1) * d]).powi(2));
            let gap_hi = (hi < m).then(|| (self.points[hi * d] - q[0]).powi(2));
            let pick = match (gap_lo, gap_hi) {
                (None, None) => break,
                (Some(a), Some(b)) => {
                    if a <= b {
                        (lo - 1, a, true)
                    } else {
                        (hi, b, false)
                    }
                }
                (Some(a), None) => (lo - 1, a, true),
                (None, Some(b)) => (hi, b, false),
            };
            if pick.1 > worst {
                break;
            }
            if pick.2 {
                lo -= 1;
            } else {
                hi += 1;
            }
            let cand = Cand(dist(pick.0), pick.0);
            if heap.len() < self.k {
                heap.push(cand);
            } else if cand < *heap.peek().expect("heap is full") {
                heap.pop();
                heap.push(cand);
            }
        }
        heap.iter().map(|c| self.values[c.1]).sum::<f64>() / heap.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use rand::Rng;

    #[test]
    fn basis_recovers_exact_polynomial() {
        let mut rng = seeds::rng(1);
        let truth = StructuralFunction::constant(0.7).with_linear(0, 2.0).with_linear(2, -1.0).with_pairwise(0, 2, 0.5);
        let xs: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let rows = xs.iter().map(|x| (x.as_slice(), truth.eval(x)));
        let fit = FeatureBasis::new(vec![0, 2]).fit(rows).unwrap();
        assert!((fit.intercept - 0.7).abs() < 1e-10);
        assert!((fit.linear[&0] - 2.0).abs() < 1e-10);
        assert!((fit.pairwise[&(0, 2)] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn basis_names_deficient_feature() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 1.0]).collect();
        let rows = xs.iter().map(|x| (x.as_slice(), x[0]));
        match FeatureBasis::new(vec![0, 1]).fit(rows) {
            Err(Error::SingularFit { features, .. }) => assert!(features.contains(&"X2".to_string())),
            other => panic!("expected singular fit, got {other:?}"),
        }
    }

    #[test]
    fn knn_matches_brute_force() {
        let mut rng = seeds::rng(2);
        let xs: Vec<Vec<f64>> = (0..300).map(|_| (0..3).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[1] + x[2]).collect();
        let model = KnnModel::fit(7, vec![0, 2], xs.iter().map(Vec::as_slice).zip(ys.iter().copied())).unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-3.5..3.5)).collect();
            let mut d: Vec<(f64, f64)> = xs
                .iter()
                .zip(&ys)
                .map(|(x, &y)| {
                    let a = (x[0] - q[0]) / model.scale[0];
                    let b = (x[2] - q[2]) / model.scale[1];
                    (a * a + b * b, y)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            let expected = d[..7].iter().map(|p| p.1).sum::<f64>() / 7.0;
            assert!((model.predict(&q) - expected).abs() < 1e-9);
        }
    }
}
