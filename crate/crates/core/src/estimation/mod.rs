//! Identification and estimation of `E[Y | do(W)]` from a sufficient
//! collection of interventional datasets.

mod regression;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::discovery::{check_sufficiency, SufficiencyReport};
use crate::error::{Error, Result};
use crate::graph::{Dag, NodeSet};
use crate::scm::{repair_psd, ConfoundedAnm, InterventionalDataset, McEstimate, StructuralFunction};
use crate::seeds;

pub use regression::{FeatureBasis, KnnModel, Regressor, DEFAULT_KNN_K};

pub const DEFAULT_MC_DRAWS: usize = 100_000;
const RIDGE: f64 = 1e-8;
const MIN_ROWS_PER_PARAM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EqNode {
    Treatment(usize),
    Outcome,
}

impl std::fmt::Display for EqNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EqNode::Treatment(i) => write!(f, "X{}", i + 1),
            EqNode::Outcome => write!(f, "Y"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedForm {
    Basis { function: StructuralFunction },
    Knn(KnnModel),
}

/// A shifted structural equation `f′ = f + E[U]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FittedEquation {
    pub node: EqNode,
    pub parents: NodeSet,
    pub form: FittedForm,
}

impl FittedEquation {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.form {
            FittedForm::Basis { function } => function.eval(x),
            FittedForm::Knn(model) => model.predict(x),
        }
    }

    /// The basis function, when fitted with the basis backend.
    pub fn function(&self) -> Option<&StructuralFunction> {
        match &self.form {
            FittedForm::Basis { function } => Some(function),
            FittedForm::Knn(_) => None,
        }
    }
}

fn fit_rows(
    node: EqNode,
    inputs: NodeSet,
    datasets: &[&InterventionalDataset],
    target_col: usize,
    regressor: Regressor,
) -> Result<FittedEquation> {
    let n = datasets[0].n_treatments();
    let rows: Vec<(Vec<f64>, f64)> = datasets
        .iter()
        .flat_map(|ds| {
            (0..ds.rows()).map(move |r| ((0..n).map(|c| ds.value(r, c)).collect::<Vec<_>>(), ds.value(r, target_col)))
        })
        .collect();
    let iter = || rows.iter().map(|(x, y)| (x.as_slice(), *y));
    let inputs_vec: Vec<usize> = inputs.iter().copied().collect();
    let form = match regressor {
        Regressor::Basis | Regressor::Linear => {
            let basis = if regressor == Regressor::Basis {
                FeatureBasis::new(inputs_vec)
            } else {
                FeatureBasis::linear(inputs_vec)
            };
            let need = MIN_ROWS_PER_PARAM * basis.len();
            if rows.len() < need && !inputs.is_empty() {
                return Err(Error::usage(format!(
                    "fitting {node} needs at least {need} rows, got {}",
                    rows.len()
                )));
            }
            let function = basis.fit(iter()).map_err(|e| match e {
                Error::SingularFit { features, .. } => Error::SingularFit {
                    target: node.to_string(),
                    features,
                },
                other => other,
            })?;
            FittedForm::Basis { function }
        }
        Regressor::Knn { k } => FittedForm::Knn(KnnModel::fit(k, inputs_vec, iter())?),
    };
    Ok(FittedEquation {
        node,
        parents: inputs,
        form,
    })
}

/// `f̂′_Y` from data with every treatment intervened.
pub fn fit_outcome_equation(joint: &[&InterventionalDataset], regressor: Regressor) -> Result<FittedEquation> {
    let first = joint.first().ok_or_else(|| Error::usage("no joint-interventional dataset"))?;
    let n = first.n_treatments();
    if let Some(bad) = joint.iter().find(|d| !d.is_joint()) {
        return Err(Error::Identifiability {
            missing: Vec::new(),
            detail: format!("outcome equation needs do(X) data, got targets {:?}", bad.targets),
        });
    }
    fit_rows(EqNode::Outcome, (0..n).collect(), joint, n, regressor)
}

/// `f̂′_i` from datasets `S` with `Pa(i) ⊆ S` and `i ∉ S`.
pub fn fit_treatment_equation(
    i: usize,
    parents: &NodeSet,
    witnesses: &[&InterventionalDataset],
    regressor: Regressor,
) -> Result<FittedEquation> {
    if witnesses.is_empty() {
        return Err(Error::Identifiability {
            missing: vec![i],
            detail: format!("no dataset witnesses X{}", i + 1),
        });
    }
    for ds in witnesses {
        if ds.targets.contains(&i) || !parents.is_subset(&ds.targets) {
            return Err(Error::Identifiability {
                missing: vec![i],
                detail: format!(
                    "dataset with targets {:?} cannot witness X{} with parents {:?}",
                    ds.targets,
                    i + 1,
                    parents
                ),
            });
        }
    }
    fit_rows(EqNode::Treatment(i), parents.clone(), witnesses, i, regressor)
}

/// Same as [`fit_treatment_equation`] for a treatment whose noise is
/// independent of every other noise term: fitted on observational data.
pub fn fit_independent_equation(
    i: usize,
    parents: &NodeSet,
    observational: &[&InterventionalDataset],
    regressor: Regressor,
) -> Result<FittedEquation> {
    if observational.is_empty() || observational.iter().any(|d| !d.is_observational()) {
        return Err(Error::usage("independent-noise fit needs observational datasets"));
    }
    fit_rows(EqNode::Treatment(i), parents.clone(), observational, i, regressor)
}

/// Sample covariance of observational residuals under the fitted equations,
/// repaired to be positive semi-definite.
pub fn estimate_noise_cov(
    observational: &[&InterventionalDataset],
    eqs: &[FittedEquation],
    eq_y: &FittedEquation,
) -> Result<DMatrix<f64>> {
    let first = observational.first().ok_or_else(|| Error::usage("no observational dataset"))?;
    let n = first.n_treatments();
    if eqs.len() != n {
        return Err(Error::usage(format!("{} treatment equations for {n} treatments", eqs.len())));
    }
    if observational.iter().any(|d| !d.is_observational()) {
        return Err(Error::usage("noise covariance needs observational datasets"));
    }
    let d = n + 1;
    let mut resid: Vec<f64> = Vec::new();
    let mut x = vec![0.0; n];
    for ds in observational {
        for r in 0..ds.rows() {
            for (c, v) in x.iter_mut().enumerate() {
                *v = ds.value(r, c);
            }
            for (i, eq) in eqs.iter().enumerate() {
                resid.push(x[i] - eq.eval(&x));
            }
            resid.push(ds.value(r, n) - eq_y.eval(&x));
        }
    }
    let m = resid.len() / d;
    if m < 2 {
        return Err(Error::usage("need at least two observational rows"));
    }
    let res = DMatrix::from_row_slice(m, d, &resid);
    let means = res.row_mean();
    let mut centered = res;
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    let cov = centered.transpose() * &centered / (m as f64 - 1.0);
    Ok(repair_psd(&cov))
}

/// Where each equation's training rows came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub node: EqNode,
    pub datasets: Vec<usize>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatedModel {
    pub graph: Dag,
    pub equations: Vec<FittedEquation>,
    pub outcome: FittedEquation,
    pub sigma_hat: Vec<Vec<f64>>,
    pub fitted_from: Vec<Provenance>,
    pub report: SufficiencyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub regressor: Regressor,
    pub independent: Vec<bool>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            regressor: Regressor::Basis,
            independent: Vec::new(),
        }
    }
}

/// Fits every shifted equation and `Σ̂`, refusing when the targets do not
/// identify all causal effects on `graph`.
pub fn fit_model(graph: &Dag, datasets: &[InterventionalDataset], cfg: &FitConfig) -> Result<EstimatedModel> {
    let n = graph.n();
    if let Some(d) = datasets.iter().find(|d| d.n_treatments() != n) {
        return Err(Error::usage(format!(
            "dataset has {} treatments, graph has {n}",
            d.n_treatments()
        )));
    }
    let flags: Vec<bool> = (0..n).map(|i| cfg.independent.get(i).copied().unwrap_or(false)).collect();
    let targets: Vec<NodeSet> = datasets.iter().map(|d| d.targets.clone()).collect();
    let report = identifiable(graph, &targets, &flags);
    if !report.sufficient {
        let mut detail = Vec::new();
        if !report.has_observational {
            detail.push("no observational dataset".to_string());
        }
        if !report.has_joint {
            detail.push("no joint intervention on all treatments".to_string());
        }
        if !report.missing.is_empty() {
            let names: Vec<String> = report.missing.iter().map(|i| format!("X{}", i + 1)).collect();
            detail.push(format!("no witness for {}", names.join(", ")));
        }
        return Err(Error::Identifiability {
            missing: report.missing.clone(),
            detail: detail.join("; "),
        });
    }

    let pick = |pred: &dyn Fn(&InterventionalDataset) -> bool| -> (Vec<usize>, Vec<&InterventionalDataset>) {
        datasets.iter().enumerate().filter(|(_, d)| pred(d)).unzip()
    };
    let mut fitted_from = Vec::new();
    let (obs_idx, obs) = pick(&|d| d.is_observational());
    let (joint_idx, joint) = pick(&|d| d.is_joint());
    let outcome = fit_outcome_equation(&joint, cfg.regressor)?;
    fitted_from.push(Provenance {
        node: EqNode::Outcome,
        rows: joint.iter().map(|d| d.rows()).sum(),
        datasets: joint_idx,
    });

    let mut equations = Vec::with_capacity(n);
    for i in 0..n {
        let pa = graph.parent_set(i);
        let (idx, eq) = if flags[i] {
            (obs_idx.clone(), fit_independent_equation(i, &pa, &obs, cfg.regressor)?)
        } else {
            let (idx, wit) = pick(&|d| !d.targets.contains(&i) && pa.is_subset(&d.targets));
            let eq = fit_treatment_equation(i, &pa, &wit, cfg.regressor)?;
            (idx, eq)
        };
        fitted_from.push(Provenance {
            node: EqNode::Treatment(i),
            rows: idx.iter().map(|&k| datasets[k].rows()).sum(),
            datasets: idx,
        });
        equations.push(eq);
    }

    let mut sigma = estimate_noise_cov(&obs, &equations, &outcome)?;
    for (a, _) in flags.iter().enumerate().filter(|(_, &f)| f) {
        for b in 0..=n {
            if b != a {
                sigma[(a, b)] = 0.0;
                sigma[(b, a)] = 0.0;
            }
        }
    }
    Ok(EstimatedModel {
        graph: graph.clone(),
        equations,
        outcome,
        sigma_hat: matrix_rows(&sigma),
        fitted_from,
        report,
    })
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Theorem-level identifiability of every causal effect on `graph`.
pub fn identifiable(graph: &Dag, targets: &[NodeSet], independent: &[bool]) -> SufficiencyReport {
    check_sufficiency(graph, targets, independent)
}

impl EstimatedModel {
    /// Model built from known equations and covariance; the gate is
    /// considered passed.
    pub fn from_parts(graph: Dag, equations: Vec<FittedEquation>, outcome: FittedEquation, sigma: &DMatrix<f64>) -> Self {
        let report = SufficiencyReport {
            sufficient: true,
            witness: BTreeMap::new(),
            missing: Vec::new(),
            has_joint: true,
            has_observational: true,
            observational_fit: Vec::new(),
        };
        EstimatedModel {
            graph,
            equations,
            outcome,
            sigma_hat: matrix_rows(sigma),
            fitted_from: Vec::new(),
            report,
        }
    }

    /// The true shifted equations and noise covariance of `anm`.
    pub fn oracle(anm: &ConfoundedAnm) -> Self {
        let n = anm.n();
        let mean = anm.noise().mean();
        let shifted = |f: &StructuralFunction, shift: f64| {
            let mut g = f.clone();
            g.intercept += shift;
            g
        };
        let equations = (0..n)
            .map(|i| FittedEquation {
                node: EqNode::Treatment(i),
                parents: anm.graph().parent_set(i),
                form: FittedForm::Basis {
                    function: shifted(anm.treatment_fn(i), mean[i]),
                },
            })
            .collect();
        let outcome = FittedEquation {
            node: EqNode::Outcome,
            parents: (0..n).collect(),
            form: FittedForm::Basis {
                function: shifted(anm.outcome_fn(), mean[n]),
            },
        };
        EstimatedModel::from_parts(anm.graph().clone(), equations, outcome, anm.noise().cov())
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        let d = self.sigma_hat.len();
        DMatrix::from_fn(d, d, |i, j| self.sigma_hat[i][j])
    }

    fn gate(&self) -> Result<()> {
        if self.report.sufficient {
            return Ok(());
        }
        Err(Error::Identifiability {
            missing: self.report.missing.clone(),
            detail: "model was not fitted from a sufficient set of targets".into(),
        })
    }

    /// `Σ̂_OO + λI` with `λ = 1e-8·trace/β`, and `Σ̂_OO⁻¹ Σ̂_OY`.
    fn marginal_blocks(&self, o: &[usize]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let sigma = self.sigma();
        let n = self.n();
        let beta = o.len();
        let mut s_oo = DMatrix::from_fn(beta, beta, |a, b| sigma[(o[a], o[b])]);
        let lambda = RIDGE * s_oo.trace() / beta as f64;
        for a in 0..beta {
            s_oo[(a, a)] += lambda;
        }
        let s_oy = DVector::from_fn(beta, |a, _| sigma[(o[a], n)]);
        let chol = s_oo.clone().cholesky().ok_or_else(|| {
            let eig = s_oo.clone().symmetric_eigenvalues();
            let (lo, hi) = (eig.min(), eig.max());
            Error::numerical(format!(
                "marginal noise covariance is singular (condition number {:e})",
                if lo > 0.0 { hi / lo } else { f64::INFINITY }
            ))
        })?;
        let w = chol.solve(&s_oy);
        Ok((chol.l(), w))
    }

    /// `E[Y | do(x_int), X_O = x_O]`; `x_o` is aligned with `q.marginalized()`.
    pub fn conditional_ace(&self, q: &AceQuery, x_o: &[f64]) -> Result<f64> {
        self.gate()?;
        let n = self.n();
        q.validate(n)?;
        let o = q.marginalized(n);
        if x_o.len() != o.len() {
            return Err(Error::usage(format!(
                "{} values for {} marginalized treatments",
                x_o.len(),
                o.len()
            )));
        }
        let mut x = vec![0.0; n];
        for (&i, &v) in &q.intervened {
            x[i] = v;
        }
        for (&i, &v) in o.iter().zip(x_o) {
            x[i] = v;
        }
        let base = self.outcome.eval(&x);
        if o.is_empty() {
            return Ok(base);
        }
        let (_, w) = self.marginal_blocks(&o)?;
        let correction: f64 = o.iter().zip(w.iter()).map(|(&i, wi)| wi * (x[i] - self.equations[i].eval(&x))).sum();
        Ok(base + correction)
    }

    /// Monte-Carlo estimate of `E[Y | do(x_int)]`.
    pub fn ace(&self, q: &AceQuery, m_mc: usize, seed: u64) -> Result<McEstimate> {
        self.gate()?;
        let n = self.n();
        q.validate(n)?;
        if m_mc == 0 {
            return Err(Error::usage("m_mc must be at least 1"));
        }
        let o = q.marginalized(n);
        let mut x = vec![0.0; n];
        for (&i, &v) in &q.intervened {
            x[i] = v;
        }
        if o.is_empty() {
            return Ok(McEstimate {
                mean: self.outcome.eval(&x),
                se: 0.0,
            });
        }
        let (l, w) = self.marginal_blocks(&o)?;
        let order: Vec<(usize, usize)> = self
            .graph
            .topological_order()
            .into_iter()
            .filter_map(|i| o.iter().position(|&v| v == i).map(|slot| (i, slot)))
            .collect();
        let beta = o.len();
        let mut rng = seeds::rng(seed);
        let mut z = vec![0.0; beta];
        let mut u = vec![0.0; beta];
        let mut vals = Vec::with_capacity(m_mc);
        for _ in 0..m_mc {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for a in 0..beta {
                u[a] = (0..=a).map(|b| l[(a, b)] * z[b]).sum();
            }
            for &(i, slot) in &order {
                x[i] = self.equations[i].eval(&x) + u[slot];
            }
            let corr: f64 = w.iter().zip(&u).map(|(wi, ui)| wi * ui).sum();
            vals.push(self.outcome.eval(&x) + corr);
        }
        Ok(McEstimate::from_samples(&vals))
    }
}

/// `do(X_int = x_int)`; every other treatment is marginalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AceQuery {
    pub intervened: BTreeMap<usize, f64>,
}

impl AceQuery {
    pub fn new(targets: &NodeSet, values: &[f64]) -> Result<Self> {
        if targets.len() != values.len() {
            return Err(Error::usage(format!(
                "{} values for {} intervened treatments",
                values.len(),
                targets.len()
            )));
        }
        Ok(AceQuery {
            intervened: targets.iter().copied().zip(values.iter().copied()).collect(),
        })
    }

    pub fn targets(&self) -> NodeSet {
        self.intervened.keys().copied().collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.intervened.values().copied().collect()
    }

    pub fn marginalized(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| !self.intervened.contains_key(i)).collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if let Some(&i) = self.intervened.keys().find(|&&i| i >= n) {
            return Err(Error::usage(format!("query intervenes on unknown treatment {i}")));
        }
        if self.intervened.values().any(|v| !v.is_finite()) {
            return Err(Error::usage("query values must be finite"));
        }
        Ok(())
    }
}

/// One row of ACE output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AceRow {
    pub targets: NodeSet,
    pub values: Vec<f64>,
    pub estimate: f64,
    pub se: f64,
}

/// CSV with columns `targets,values,estimate,se`; lists are `;`-separated.
pub fn ace_csv(rows: &[AceRow]) -> String {
    let mut out = String::from("targets,values,estimate,se\n");
    for r in rows {
        let t: Vec<String> = r.targets.iter().map(|i| format!("X{}", i + 1)).collect();
        let v: Vec<String> = r.values.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{},{},{},{}", t.join(";"), v.join(";"), r.estimate, r.se);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scm::{InterventionSampler, ValuePolicy};

    fn set(v: &[usize]) -> NodeSet {
        v.iter().copied().collect()
    }

    #[test]
    fn outcome_fit_recovers_pairwise_term() {
        let anm = fixtures::table1_m1();
        let ds = anm.sample(&set(&[0, 1]), &ValuePolicy::StdNormal, 10_000, 1).unwrap();
        let eq = fit_outcome_equation(&[&ds], Regressor::Basis).unwrap();
        let f = eq.function().unwrap();
        assert!((f.pairwise[&(0, 1)] - 1.0).abs() < 0.05);
        assert!(f.linear.values().all(|c| c.abs() < 0.05));
    }

    #[test]
    fn outcome_intercept_absorbs_noise_mean() {
        let base = fixtures::appendix_m3();
        let shifted = base.with_noise_shift(5.0).unwrap();
        let ds0 = base.sample(&set(&[0, 1]), &ValuePolicy::StdNormal, 5000, 2).unwrap();
        let ds5 = shifted.sample(&set(&[0, 1]), &ValuePolicy::StdNormal, 5000, 2).unwrap();
        let f0 = fit_outcome_equation(&[&ds0], Regressor::Basis).unwrap();
        let f5 = fit_outcome_equation(&[&ds5], Regressor::Basis).unwrap();
        let (f0, f5) = (f0.function().unwrap(), f5.function().unwrap());
        assert!((f5.intercept - f0.intercept - 5.0).abs() < 1e-9);
        assert!((f5.linear[&0] - f0.linear[&0]).abs() < 1e-9);
        assert!((f0.linear[&0] - 2.0).abs() < 0.05 && (f0.linear[&1] - 1.0).abs() < 0.05);
    }

    #[test]
    fn treatment_fit_guards_witness_shape() {
        let anm = fixtures::appendix_m3();
        let ds = anm.sample(&set(&[0]), &ValuePolicy::StdNormal, 10_000, 3).unwrap();
        let eq = fit_treatment_equation(1, &set(&[0]), &[&ds], Regressor::Basis).unwrap();
        let f = eq.function().unwrap();
        assert!((f.linear[&0] - 3.0).abs() < 0.05 && f.intercept.abs() < 0.05);
        assert!(matches!(
            fit_treatment_equation(0, &set(&[]), &[&ds], Regressor::Basis),
            Err(Error::Identifiability { .. })
        ));
        let obs = anm.sample(&set(&[]), &ValuePolicy::StdNormal, 200, 4).unwrap();
        let mean = obs.column(0).iter().sum::<f64>() / 200.0;
        let eq = fit_treatment_equation(0, &set(&[]), &[&obs], Regressor::Basis).unwrap();
        assert!((eq.function().unwrap().intercept - mean).abs() < 1e-12);
    }

    #[test]
    fn degenerate_joint_query_is_exact() {
        let model = EstimatedModel::oracle(&fixtures::appendix_m1());
        let q = AceQuery::new(&set(&[0, 1]), &[0.3, -1.0]).unwrap();
        let est = model.ace(&q, 10, 1).unwrap();
        assert_eq!(est, McEstimate { mean: 0.3 - 1.0, se: 0.0 });
        assert_eq!(model.conditional_ace(&q, &[]).unwrap(), est.mean);
    }

    #[test]
    fn conditional_ace_on_correlated_fixture() {
        let model = EstimatedModel::oracle(&fixtures::correlated_outcome());
        let q = AceQuery::new(&set(&[0]), &[1.5]).unwrap();
        let got = model.conditional_ace(&q, &[-0.5]).unwrap();
        let expected = 1.5 - 0.5 + 0.5 * (-0.5 - 1.5);
        assert!((got - expected).abs() < 1e-6);
    }

    #[test]
    fn oracle_model_ace_matches_closed_form() {
        let model = EstimatedModel::oracle(&fixtures::appendix_m3());
        let q = AceQuery::new(&set(&[0]), &[1.0]).unwrap();
        let est = model.ace(&q, 100_000, 5).unwrap();
        assert!((est.mean - 5.0).abs() < 3.0 * est.se);
    }

    #[test]
    fn fit_model_refuses_insufficient_targets() {
        let anm = fixtures::appendix_m1();
        let obs = anm.sample(&set(&[]), &ValuePolicy::StdNormal, 500, 1).unwrap();
        let joint = anm.sample(&set(&[0, 1]), &ValuePolicy::StdNormal, 500, 2).unwrap();
        match fit_model(anm.graph(), &[obs, joint], &FitConfig::default()) {
            Err(Error::Identifiability { missing, .. }) => assert_eq!(missing, vec![1]),
            other => panic!("expected identifiability error, got {other:?}"),
        }
    }

    #[test]
    fn model_json_round_trip() {
        let anm = fixtures::appendix_m1();
        let data = [set(&[]), set(&[0]), set(&[0, 1])]
            .iter()
            .enumerate()
            .map(|(k, t)| anm.sample(t, &ValuePolicy::StdNormal, 400, k as u64).unwrap())
            .collect::<Vec<_>>();
        for regressor in [Regressor::Basis, Regressor::Knn { k: 5 }] {
            let cfg = FitConfig {
                regressor,
                ..Default::default()
            };
            let model = fit_model(anm.graph(), &data, &cfg).unwrap();
            let text = serde_json::to_string(&model).unwrap();
            let back: EstimatedModel = serde_json::from_str(&text).unwrap();
            assert_eq!(back, model);
        }
    }
}
