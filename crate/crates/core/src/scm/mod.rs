//! Confounded additive-noise models: representation, interventional sampling
//! and a Monte-Carlo ground-truth oracle.

mod dataset;
mod function;
mod noise;
mod random;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeSet};
use crate::seeds;

pub use dataset::{DatasetMeta, InterventionalDataset, ValuePolicy};
pub use function::{IndicatorBump, StructuralFunction};
pub use noise::{repair_psd, NoiseSpec};
pub use random::{random_anm, RandomAnmConfig};

const FLAG_TOL: f64 = 1e-12;

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        if xs.len() < 2 {
            return McEstimate { mean, se: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        McEstimate {
            mean,
            se: (var / m).sqrt(),
        }
    }
}

/// Anything that can produce samples of `(X_1..X_n, Y)` under `do(targets)`.
pub trait InterventionSampler: Sync {
    fn n_treatments(&self) -> usize;

    fn sample(
        &self,
        targets: &NodeSet,
        policy: &ValuePolicy,
        m: usize,
        seed: u64,
    ) -> Result<InterventionalDataset>;

    /// Policy used when discovery randomizes the values of `targets`.
    fn randomized_policy(&self, _targets: &NodeSet) -> ValuePolicy {
        ValuePolicy::StdNormal
    }
}

/// `X_i = f_i(Pa(X_i)) + U_i`, `Y = f_Y(X) + U_Y`, `U ~ N(μ, Σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AnmRepr", into = "AnmRepr")]
pub struct ConfoundedAnm {
    graph: Dag,
    treatments: Vec<StructuralFunction>,
    outcome: StructuralFunction,
    noise: NoiseSpec,
    independent: Vec<bool>,
    order: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Functions {
    treatments: Vec<StructuralFunction>,
    outcome: StructuralFunction,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnmRepr {
    graph: Dag,
    functions: Functions,
    noise_mean: Vec<f64>,
    noise_cov: Vec<Vec<f64>>,
    #[serde(default)]
    independent_flags: Option<Vec<bool>>,
}

impl TryFrom<AnmRepr> for ConfoundedAnm {
    type Error = Error;

    fn try_from(r: AnmRepr) -> Result<Self> {
        let rows: Vec<&[f64]> = r.noise_cov.iter().map(Vec::as_slice).collect();
        let noise = NoiseSpec::from_rows(&r.noise_mean, &rows)?;
        let n = r.graph.n();
        let flags = r.independent_flags.unwrap_or_else(|| vec![false; n]);
        ConfoundedAnm::new(r.graph, r.functions.treatments, r.functions.outcome, noise, flags)
    }
}

impl From<ConfoundedAnm> for AnmRepr {
    fn from(a: ConfoundedAnm) -> Self {
        let d = a.noise.dim();
        AnmRepr {
            noise_mean: a.noise.mean().iter().copied().collect(),
            noise_cov: (0..d).map(|i| a.noise.cov().row(i).iter().copied().collect()).collect(),
            graph: a.graph,
            functions: Functions {
                treatments: a.treatments,
                outcome: a.outcome,
            },
            independent_flags: Some(a.independent),
        }
    }
}

impl ConfoundedAnm {
    pub fn new(
        graph: Dag,
        treatments: Vec<StructuralFunction>,
        outcome: StructuralFunction,
        noise: NoiseSpec,
        independent: Vec<bool>,
    ) -> Result<Self> {
        let n = graph.n();
        if treatments.len() != n {
            return Err(Error::usage(format!(
                "{} treatment functions for a {n}-node graph",
                treatments.len()
            )));
        }
        if noise.dim() != n + 1 {
            return Err(Error::usage(format!(
                "noise has dimension {}, expected {}",
                noise.dim(),
                n + 1
            )));
        }
        if independent.len() != n {
            return Err(Error::usage("independent_flags must have one entry per treatment"));
        }
        for (i, f) in treatments.iter().enumerate() {
            let pa = graph.parent_set(i);
            if let Some(p) = f.referenced().difference(&pa).next() {
                return Err(Error::usage(format!("f_{i} references X{p}, which is not a parent")));
            }
        }
        if let Some(&p) = outcome.referenced().iter().find(|&&p| p >= n) {
            return Err(Error::usage(format!("f_Y references unknown treatment {p}")));
        }
        for (a, _) in independent.iter().enumerate().filter(|(_, &f)| f) {
            if (0..=n).any(|b| b != a && noise.cov()[(a, b)].abs() > FLAG_TOL) {
                return Err(Error::usage(format!(
                    "treatment {a} is flagged independent but its noise covariance row is not zero"
                )));
            }
        }
        let order = graph.topological_order();
        Ok(ConfoundedAnm {
            graph,
            treatments,
            outcome,
            noise,
            independent,
            order,
        })
    }

    /// Same model with no independence flags.
    pub fn unflagged(graph: Dag, treatments: Vec<StructuralFunction>, outcome: StructuralFunction, noise: NoiseSpec) -> Result<Self> {
        let n = graph.n();
        ConfoundedAnm::new(graph, treatments, outcome, noise, vec![false; n])
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn treatment_fn(&self, i: usize) -> &StructuralFunction {
        &self.treatments[i]
    }

    pub fn outcome_fn(&self) -> &StructuralFunction {
        &self.outcome
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn independent_flags(&self) -> &[bool] {
        &self.independent
    }

    /// Copy with every noise mean shifted by `c`.
    pub fn with_noise_shift(&self, c: f64) -> Result<Self> {
        let mean: DVector<f64> = self.noise.mean().add_scalar(c);
        let noise = NoiseSpec::new(mean, self.noise.cov().clone())?;
        ConfoundedAnm::new(self.graph.clone(), self.treatments.clone(), self.outcome.clone(), noise, self.independent.clone())
    }

    /// Ground truth `E[Y | do(targets = values)]` by Monte-Carlo.
    pub fn true_ace_oracle(&self, targets: &NodeSet, values: &[f64], m_mc: usize, seed: u64) -> Result<McEstimate> {
        let ds = self.sample(targets, &ValuePolicy::Fixed(values.to_vec()), m_mc, seed)?;
        Ok(McEstimate::from_samples(ds.outcome()))
    }
}

impl InterventionSampler for ConfoundedAnm {
    fn n_treatments(&self) -> usize {
        self.n()
    }

    fn sample(&self, targets: &NodeSet, policy: &ValuePolicy, m: usize, seed: u64) -> Result<InterventionalDataset> {
        let n = self.n();
        if m == 0 {
            return Err(Error::usage("sample count must be at least 1"));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= n) {
            return Err(Error::usage(format!("target {t} is not a treatment")));
        }
        policy.check_arity(targets.len())?;
        let mut slot = vec![usize::MAX; n];
        for (k, &t) in targets.iter().enumerate() {
            slot[t] = k;
        }
        let mut rng = seeds::rng(seed);
        let mut data = DMatrix::zeros(m, n + 1);
        let mut z = vec![0.0; n + 1];
        let mut u = vec![0.0; n + 1];
        let mut x = vec![0.0; n];
        let mut fixed = vec![0.0; targets.len()];
        for r in 0..m {
            self.noise.draw_into(&mut rng, &mut z, &mut u);
            for (k, v) in fixed.iter_mut().enumerate() {
                *v = policy.draw(k, &mut rng);
            }
            for &i in &self.order {
                x[i] = match slot[i] {
                    usize::MAX => self.treatments[i].eval(&x) + u[i],
                    k => fixed[k],
                };
            }
            for (c, &v) in x.iter().enumerate() {
                data[(r, c)] = v;
            }
            data[(r, n)] = self.outcome.eval(&x) + u[n];
        }
        InterventionalDataset::new(targets.clone(), policy.clone(), seed, data)
    }
}
