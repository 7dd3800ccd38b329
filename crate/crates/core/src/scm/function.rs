use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::NodeSet;

/// Adds `height` when every listed parent takes exactly the listed value.
///
/// Under continuous parents this term is almost surely inactive; it fires
/// only when an intervention pins the parents to the bump location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorBump {
    pub at: Vec<(usize, f64)>,
    pub height: f64,
}

/// `intercept + Σ linear[p]·x_p + Σ pairwise[(p, q)]·x_p·x_q (+ bumps)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "FunctionRepr", into = "FunctionRepr")]
pub struct StructuralFunction {
    pub intercept: f64,
    pub linear: BTreeMap<usize, f64>,
    /// Keys are ordered pairs with `p < q`.
    pub pairwise: BTreeMap<(usize, usize), f64>,
    pub bumps: Vec<IndicatorBump>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionRepr {
    intercept: f64,
    #[serde(default)]
    linear: Vec<(usize, f64)>,
    #[serde(default)]
    pairwise: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    bumps: Vec<IndicatorBump>,
}

impl From<FunctionRepr> for StructuralFunction {
    fn from(r: FunctionRepr) -> Self {
        let mut f = StructuralFunction::constant(r.intercept);
        for (p, c) in r.linear {
            f.linear.insert(p, c);
        }
        for (p, q, c) in r.pairwise {
            f.add_pairwise(p, q, c);
        }
        f.bumps = r.bumps;
        f
    }
}

impl From<StructuralFunction> for FunctionRepr {
    fn from(f: StructuralFunction) -> Self {
        FunctionRepr {
            intercept: f.intercept,
            linear: f.linear.into_iter().collect(),
            pairwise: f.pairwise.into_iter().map(|((p, q), c)| (p, q, c)).collect(),
            bumps: f.bumps,
        }
    }
}

impl StructuralFunction {
    pub fn constant(intercept: f64) -> Self {
        StructuralFunction {
            intercept,
            ..Default::default()
        }
    }

    /// Builder-style linear term.
    pub fn with_linear(mut self, parent: usize, coef: f64) -> Self {
        self.linear.insert(parent, coef);
        self
    }

    /// Builder-style product term.
    pub fn with_pairwise(mut self, p: usize, q: usize, coef: f64) -> Self {
        self.add_pairwise(p, q, coef);
        self
    }

    pub fn with_bump(mut self, at: Vec<(usize, f64)>, height: f64) -> Self {
        self.bumps.push(IndicatorBump { at, height });
        self
    }

    fn add_pairwise(&mut self, p: usize, q: usize, coef: f64) {
        assert_ne!(p, q, "pairwise term needs two distinct parents");
        *self.pairwise.entry((p.min(q), p.max(q))).or_insert(0.0) += coef;
    }

    /// Evaluates the function on a full assignment indexed by node id.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.intercept;
        for (&p, &c) in &self.linear {
            v += c * x[p];
        }
        for (&(p, q), &c) in &self.pairwise {
            v += c * x[p] * x[q];
        }
        for bump in &self.bumps {
            if bump.at.iter().all(|&(p, val)| x[p] == val) {
                v += bump.height;
            }
        }
        v
    }

    /// Every node the function reads.
    pub fn referenced(&self) -> NodeSet {
        let mut s: NodeSet = self.linear.keys().copied().collect();
        for &(p, q) in self.pairwise.keys() {
            s.insert(p);
            s.insert(q);
        }
        for b in &self.bumps {
            s.extend(b.at.iter().map(|&(p, _)| p));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_covers_every_term() {
        let f = StructuralFunction::constant(1.0)
            .with_linear(0, 2.0)
            .with_pairwise(2, 1, 3.0)
            .with_bump(vec![(0, 0.5)], 10.0);
        assert_eq!(f.eval(&[1.0, 2.0, -1.0]), 1.0 + 2.0 - 6.0);
        assert_eq!(f.eval(&[0.5, 0.0, 0.0]), 1.0 + 1.0 + 10.0);
        assert_eq!(f.referenced().into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn json_shape() {
        let f = StructuralFunction::constant(0.5).with_linear(1, 2.0).with_pairwise(0, 1, 1.0);
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"intercept":0.5,"linear":[[1,2.0]],"pairwise":[[0,1,1.0]]}"#);
        assert_eq!(serde_json::from_str::<StructuralFunction>(&text).unwrap(), f);
    }
}
