//! Learning the observable graph from randomized interventions, planning the
//! core intervention set and checking whether a collection of targets
//! identifies every causal effect.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{closure_of_relation, Dag, NodeSet};
use crate::independence::DependenceTest;
use crate::scm::{InterventionSampler, InterventionalDataset};
use crate::seeds::{self, derive_seed, stream};
use crate::setsys::{ceil_log2, strongly_separating};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoveryConfig {
    pub d_max: usize,
    pub alpha: f64,
    /// Rows drawn per interventional regime.
    pub samples: usize,
    /// Divide the level by the number of tests inside each closure call.
    pub bonferroni: bool,
    /// Keep the datasets drawn inside the closure subroutine.
    pub retain_closure_datasets: bool,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            d_max: 4,
            alpha: 3.0,
            samples: 300,
            bonferroni: true,
            retain_closure_datasets: true,
        }
    }
}

/// `⌈4·α·d_max·log₂ n⌉`, zero for `n = 1`.
pub fn outer_iterations(n: usize, d_max: usize, alpha: f64) -> usize {
    if n <= 1 {
        return 0;
    }
    (4.0 * alpha * d_max as f64 * (n as f64).log2()).ceil() as usize
}

/// `⌈4·α·d_max·log₂ n⌉ · 2⌈log₂ n⌉`.
pub fn intervention_budget(n: usize, d_max: usize, alpha: f64) -> usize {
    if n <= 1 {
        return 0;
    }
    outer_iterations(n, d_max, alpha) * 2 * ceil_log2(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureRun {
    pub closure: Dag,
    pub datasets: Vec<InterventionalDataset>,
    pub interventions: usize,
}

struct Query {
    data: Option<usize>,
    targets: NodeSet,
    a: usize,
    b: usize,
}

/// Transitive closure of the graph left after intervening on `context`.
///
/// Free nodes are resolved with a strongly separating system, each set
/// sampled jointly with the context. Pairs from `context` to a free node are
/// tested on a set that leaves the node free, or on `context_data` when only
/// one node is free.
#[allow(clippy::too_many_arguments)]
fn closure_in_context<S, T>(
    sampler: &S,
    test: &T,
    context: &NodeSet,
    context_data: Option<&InterventionalDataset>,
    samples: usize,
    seed: u64,
    bonferroni: bool,
    retain: bool,
) -> Result<ClosureRun>
where
    S: InterventionSampler + ?Sized,
    T: DependenceTest + ?Sized,
{
    let n = sampler.n_treatments();
    let free: Vec<usize> = (0..n).filter(|v| !context.contains(v)).collect();
    let sets = if free.len() >= 2 {
        strongly_separating(free.len())?.relabel(&free)
    } else {
        Vec::new()
    };
    let draw = test.uses_samples() || retain;

    let mut datasets = Vec::new();
    let mut queries = Vec::new();
    let mut set_data = Vec::with_capacity(sets.len());
    for (k, set) in sets.iter().enumerate() {
        let targets: NodeSet = context.union(set).copied().collect();
        let data = if draw {
            let policy = sampler.randomized_policy(&targets);
            let ds = sampler.sample(&targets, &policy, samples, derive_seed(seed, stream::CLOSURE, k as u64))?;
            datasets.push(ds);
            Some(datasets.len() - 1)
        } else {
            None
        };
        set_data.push((targets, data));
    }
    for &a in context {
        for &b in &free {
            let (targets, data) = match sets.iter().position(|s| !s.contains(&b)) {
                Some(k) => (set_data[k].0.clone(), set_data[k].1),
                None => (context.clone(), None),
            };
            queries.push(Query { data, targets, a, b });
        }
    }
    for (set, (targets, data)) in sets.iter().zip(&set_data) {
        for &a in set {
            for &b in free.iter().filter(|b| !set.contains(b)) {
                queries.push(Query {
                    data: *data,
                    targets: targets.clone(),
                    a,
                    b,
                });
            }
        }
    }

    let level = if bonferroni && !queries.is_empty() {
        test.level() / queries.len() as f64
    } else {
        test.level()
    };
    let mut relation = BTreeSet::new();
    for (q_idx, q) in queries.iter().enumerate() {
        if relation.contains(&(q.a, q.b)) {
            continue;
        }
        let ds = match q.data {
            Some(i) => Some(&datasets[i]),
            None => context_data,
        };
        let ds = if test.uses_samples() { ds } else { None };
        let verdict = test.test(&q.targets, ds, q.a, q.b, level, derive_seed(seed, stream::TEST, q_idx as u64))?;
        if verdict.dependent {
            relation.insert((q.a, q.b));
        }
    }
    let interventions = if sets.is_empty() {
        usize::from(!context.is_empty() && !free.is_empty())
    } else {
        sets.len()
    };
    Ok(ClosureRun {
        closure: closure_of_relation(n, relation),
        datasets: if retain { datasets } else { Vec::new() },
        interventions,
    })
}

/// Transitive closure of the observable graph from at most `2⌈log₂ n⌉`
/// randomized interventions.
pub fn learn_transitive_closure<S, T>(sampler: &S, test: &T, samples: usize, seed: u64) -> Result<ClosureRun>
where
    S: InterventionSampler + ?Sized,
    T: DependenceTest + ?Sized,
{
    if sampler.n_treatments() == 0 {
        return Err(Error::usage("no treatments"));
    }
    closure_in_context(sampler, test, &NodeSet::new(), None, samples, seed, false, true)
}

/// Like [`learn_transitive_closure`] with explicit options.
pub fn learn_transitive_closure_with<S, T>(
    sampler: &S,
    test: &T,
    samples: usize,
    seed: u64,
    bonferroni: bool,
    retain: bool,
) -> Result<ClosureRun>
where
    S: InterventionSampler + ?Sized,
    T: DependenceTest + ?Sized,
{
    closure_in_context(sampler, test, &NodeSet::new(), None, samples, seed, bonferroni, retain)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryResult {
    pub learned_graph: Dag,
    /// Observational data first, the joint intervention last.
    pub collected: Vec<InterventionalDataset>,
    pub interventions_used: usize,
    pub iterations: usize,
    /// Union of the per-iteration reduction edges before cycle removal.
    pub proposed_edges: Vec<(usize, usize)>,
    /// Context set drawn by each outer iteration.
    pub contexts: Vec<NodeSet>,
}

struct Iteration {
    context: NodeSet,
    edges: Vec<(usize, usize)>,
    datasets: Vec<InterventionalDataset>,
    interventions: usize,
}

/// Randomized observable-graph learning. Also returns every dataset drawn,
/// including an observational and a joint-interventional dataset.
pub fn learn_observable_graph<S, T>(sampler: &S, test: &T, cfg: &DiscoveryConfig, seed: u64) -> Result<DiscoveryResult>
where
    S: InterventionSampler + ?Sized,
    T: DependenceTest + ?Sized,
{
    let n = sampler.n_treatments();
    if n == 0 {
        return Err(Error::usage("no treatments"));
    }
    if cfg.d_max < 2 {
        return Err(Error::usage(format!("d_max must be at least 2, got {}", cfg.d_max)));
    }
    if !(cfg.alpha >= 1.0) {
        return Err(Error::usage(format!("alpha must be at least 1, got {}", cfg.alpha)));
    }
    if cfg.samples == 0 {
        return Err(Error::usage("samples must be at least 1"));
    }
    let iterations = outer_iterations(n, cfg.d_max, cfg.alpha);
    let keep = 1.0 - 1.0 / cfg.d_max as f64;

    let run = |k: usize| -> Result<Iteration> {
        let it_seed = derive_seed(seed, stream::ITERATION, k as u64);
        let mut rng = seeds::rng(it_seed);
        let context: NodeSet = (0..n).filter(|_| rng.random_bool(keep)).collect();
        let policy = sampler.randomized_policy(&context);
        let ds = sampler.sample(&context, &policy, cfg.samples, derive_seed(it_seed, stream::DATA, 0))?;
        let closure = closure_in_context(
            sampler,
            test,
            &context,
            Some(&ds),
            cfg.samples,
            it_seed,
            cfg.bonferroni,
            cfg.retain_closure_datasets,
        )?;
        let edges = closure.closure.transitive_reduction().edges();
        let mut datasets = vec![ds];
        datasets.extend(closure.datasets);
        Ok(Iteration {
            context,
            edges,
            datasets,
            interventions: closure.interventions,
        })
    };
    let runs: Vec<Iteration> = (0..iterations).into_par_iter().map(run).collect::<Result<_>>()?;

    let all: NodeSet = (0..n).collect();
    let obs_policy = sampler.randomized_policy(&NodeSet::new());
    let joint_policy = sampler.randomized_policy(&all);
    let mut collected =
        vec![sampler.sample(&NodeSet::new(), &obs_policy, cfg.samples, derive_seed(seed, stream::OBSERVATIONAL, 0))?];
    let mut union = BTreeSet::new();
    let mut interventions_used = 0;
    let mut contexts = Vec::with_capacity(runs.len());
    for it in runs {
        union.extend(it.edges);
        interventions_used += it.interventions;
        collected.extend(it.datasets);
        contexts.push(it.context);
    }
    collected.push(sampler.sample(&all, &joint_policy, cfg.samples, derive_seed(seed, stream::JOINT, 0))?);
    let proposed_edges: Vec<(usize, usize)> = union.into_iter().collect();
    Ok(DiscoveryResult {
        learned_graph: Dag::from_relation_dropping_cycles(n, proposed_edges.iter().copied()),
        collected,
        interventions_used,
        iterations,
        proposed_edges,
        contexts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub index: usize,
    pub targets: Vec<usize>,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoveryReport {
    pub n: usize,
    pub iterations: usize,
    pub interventions_used: usize,
    pub edges: Vec<(usize, usize)>,
    pub proposed_edges: Vec<(usize, usize)>,
    pub datasets: Vec<DatasetEntry>,
}

impl DiscoveryResult {
    pub fn targets(&self) -> Vec<NodeSet> {
        self.collected.iter().map(|d| d.targets.clone()).collect()
    }

    pub fn report(&self) -> DiscoveryReport {
        DiscoveryReport {
            n: self.learned_graph.n(),
            iterations: self.iterations,
            interventions_used: self.interventions_used,
            edges: self.learned_graph.edges(),
            proposed_edges: self.proposed_edges.clone(),
            datasets: self
                .collected
                .iter()
                .enumerate()
                .map(|(index, d)| DatasetEntry {
                    index,
                    targets: d.targets.iter().copied().collect(),
                    m: d.rows(),
                })
                .collect(),
        }
    }

    /// Writes `graph.json`, `report.json` and `datasets/<k>.csv` (+ sidecars).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("datasets"))?;
        fs::write(dir.join("graph.json"), serde_json::to_string_pretty(&self.learned_graph)? + "\n")?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&self.report())? + "\n")?;
        for (k, ds) in self.collected.iter().enumerate() {
            ds.save(&dir.join("datasets"), &k.to_string())?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let learned_graph: Dag = serde_json::from_slice(&fs::read(dir.join("graph.json"))?)?;
        let report: DiscoveryReport = serde_json::from_slice(&fs::read(dir.join("report.json"))?)?;
        let collected = report
            .datasets
            .iter()
            .map(|e| InterventionalDataset::load(&dir.join("datasets").join(format!("{}.csv", e.index))))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscoveryResult {
            learned_graph,
            collected,
            interventions_used: report.interventions_used,
            iterations: report.iterations,
            proposed_edges: report.proposed_edges,
            contexts: Vec::new(),
        })
    }
}

/// `[∅, X, Pa(X_1), …, Pa(X_n)]` with empty parent sets folded into `∅`,
/// duplicates removed and flagged treatments skipped.
pub fn core_intervention_plan(g: &Dag, independent: &[bool]) -> Vec<NodeSet> {
    let n = g.n();
    let mut plan = vec![NodeSet::new(), (0..n).collect::<NodeSet>()];
    for i in 0..n {
        if independent.get(i).copied().unwrap_or(false) {
            continue;
        }
        let pa = g.parent_set(i);
        if !plan.contains(&pa) {
            plan.push(pa);
        }
    }
    plan
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub sufficient: bool,
    /// Treatment → index of a target set `S` with `Pa(i) ⊆ S`, `i ∉ S`.
    pub witness: BTreeMap<usize, usize>,
    pub missing: Vec<usize>,
    pub has_joint: bool,
    pub has_observational: bool,
    /// Treatments exempted by an independent-noise flag; their equations are
    /// fitted from observational data.
    pub observational_fit: Vec<usize>,
}

/// Whether `targets` identify every `E[Y | do(W)]` on `g`.
pub fn check_sufficiency(g: &Dag, targets: &[NodeSet], independent: &[bool]) -> SufficiencyReport {
    let n = g.n();
    let has_joint = targets.iter().any(|t| t.len() == n && t.iter().all(|&v| v < n));
    let has_observational = targets.iter().any(NodeSet::is_empty);
    let mut witness = BTreeMap::new();
    let mut missing = Vec::new();
    let mut observational_fit = Vec::new();
    for i in 0..n {
        if independent.get(i).copied().unwrap_or(false) {
            observational_fit.push(i);
            continue;
        }
        let pa = g.parent_set(i);
        match targets.iter().position(|t| !t.contains(&i) && pa.is_subset(t)) {
            Some(k) => {
                witness.insert(i, k);
            }
            None => missing.push(i),
        }
    }
    SufficiencyReport {
        sufficient: has_joint && has_observational && missing.is_empty(),
        witness,
        missing,
        has_joint,
        has_observational,
        observational_fit,
    }
}
