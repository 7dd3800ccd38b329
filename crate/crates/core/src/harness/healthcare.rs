use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mae::{all_subsets, subset_label};
use super::{mean_sd, ExperimentConfig, Table};
use crate::error::{Error, Result};
use crate::estimation::{fit_model, AceQuery, FitConfig};
use crate::graph::{Dag, NodeSet};
use crate::scm::{random_anm, InterventionSampler, InterventionalDataset, McEstimate, RandomAnmConfig, ValuePolicy};
use crate::seeds::{self, derive_seed, stream};

const BUNDLED: &str = include_str!("../../data/healthcare.json");
const NORMALIZATION_TOL: f64 = 1e-9;
const MOMENT_ROWS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteNode {
    pub name: String,
    pub states: usize,
    pub parents: Vec<String>,
    /// One probability row per parent configuration.
    pub table: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceBands {
    pub on: String,
    pub thresholds: Vec<f64>,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousNode {
    pub name: String,
    #[serde(default)]
    pub discrete_parents: Vec<String>,
    #[serde(default)]
    pub continuous_parents: Vec<String>,
    #[serde(default)]
    pub coefficients: Vec<f64>,
    pub intercepts: Vec<f64>,
    #[serde(default)]
    pub variances: Vec<f64>,
    #[serde(default)]
    pub variance_bands: Option<VarianceBands>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    #[serde(default)]
    description: Vec<String>,
    discrete: Vec<DiscreteNode>,
    continuous: Vec<ContinuousNode>,
    latent: Vec<String>,
    treatments: Vec<String>,
    outcome: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Discrete { states: usize, table: Vec<Vec<f64>> },
    Continuous {
        continuous: Vec<usize>,
        coefficients: Vec<f64>,
        intercepts: Vec<f64>,
        variances: Vec<f64>,
        bands: Option<(usize, Vec<f64>, Vec<f64>)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    name: String,
    /// Discrete parents with their state counts, most significant first.
    discrete: Vec<(usize, usize)>,
    kind: Kind,
}

/// Conditional-Gaussian Bayesian network with discrete and continuous nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedBayesNet {
    nodes: Vec<Node>,
    graph: Dag,
    order: Vec<usize>,
    latent: NodeSet,
}

impl MixedBayesNet {
    fn build(discrete: &[DiscreteNode], continuous: &[ContinuousNode], latent: &[String]) -> Result<Self> {
        let names: Vec<&str> = discrete
            .iter()
            .map(|d| d.name.as_str())
            .chain(continuous.iter().map(|c| c.name.as_str()))
            .collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        if index.len() != names.len() {
            return Err(Error::usage("duplicate node names in network"));
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::usage(format!("unknown node {name:?}")))
        };
        let states_of = |i: usize| discrete.get(i).map(|d| d.states);
        let discrete_parents = |parents: &[String], child: &str| -> Result<Vec<(usize, usize)>> {
            parents
                .iter()
                .map(|p| {
                    let i = lookup(p)?;
                    let s = states_of(i)
                        .ok_or_else(|| Error::usage(format!("{child}: {p} is not a discrete node")))?;
                    Ok((i, s))
                })
                .collect()
        };
        let configs = |dp: &[(usize, usize)]| dp.iter().map(|&(_, s)| s).product::<usize>();

        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for d in discrete {
            let dp = discrete_parents(&d.parents, &d.name)?;
            if d.states == 0 || d.table.len() != configs(&dp) {
                return Err(Error::usage(format!("{}: table needs {} rows", d.name, configs(&dp))));
            }
            for row in &d.table {
                let sum: f64 = row.iter().sum();
                if row.len() != d.states || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::usage(format!("{}: rows must be probability vectors", d.name)));
                }
            }
            edges.extend(dp.iter().map(|&(p, _)| (p, nodes.len())));
            nodes.push(Node {
                name: d.name.clone(),
                discrete: dp,
                kind: Kind::Discrete {
                    states: d.states,
                    table: d.table.clone(),
                },
            });
        }
        for c in continuous {
            let dp = discrete_parents(&c.discrete_parents, &c.name)?;
            let cp: Vec<usize> = c.continuous_parents.iter().map(|p| lookup(p)).collect::<Result<_>>()?;
            if let Some(&p) = cp.iter().find(|&&p| p < discrete.len()) {
                return Err(Error::usage(format!("{}: {} listed as continuous parent", c.name, names[p])));
            }
            let k = configs(&dp);
            if c.coefficients.len() != cp.len() || c.intercepts.len() != k {
                return Err(Error::usage(format!("{}: coefficient or intercept count mismatch", c.name)));
            }
            let bands = match &c.variance_bands {
                Some(b) => {
                    let on = lookup(&b.on)?;
                    if !cp.contains(&on) || b.variances.len() != b.thresholds.len() + 1 {
                        return Err(Error::usage(format!("{}: malformed variance bands", c.name)));
                    }
                    if b.thresholds.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::usage(format!("{}: band thresholds must increase", c.name)));
                    }
                    Some((on, b.thresholds.clone(), b.variances.clone()))
                }
                None => {
                    if c.variances.len() != k {
                        return Err(Error::usage(format!("{}: needs {k} variances", c.name)));
                    }
                    None
                }
            };
            let all_vars = c.variances.iter().chain(bands.iter().flat_map(|b| b.2.iter()));
            if all_vars.clone().any(|&v| !(v > 0.0)) {
                return Err(Error::usage(format!("{}: variances must be positive", c.name)));
            }
            let me = nodes.len();
            edges.extend(dp.iter().map(|&(p, _)| (p, me)));
            edges.extend(cp.iter().map(|&p| (p, me)));
            nodes.push(Node {
                name: c.name.clone(),
                discrete: dp,
                kind: Kind::Continuous {
                    continuous: cp,
                    coefficients: c.coefficients.clone(),
                    intercepts: c.intercepts.clone(),
                    variances: c.variances.clone(),
                    bands,
                },
            });
        }
        let graph = Dag::new(nodes.len(), edges)?;
        let order = graph.topological_order();
        let latent = latent.iter().map(|l| lookup(l)).collect::<Result<_>>()?;
        Ok(MixedBayesNet {
            nodes,
            graph,
            order,
            latent,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn latent(&self) -> &NodeSet {
        &self.latent
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    fn config(&self, node: &Node, v: &[f64]) -> usize {
        node.discrete.iter().fold(0, |acc, &(p, s)| acc * s + v[p] as usize)
    }

    /// Draws one joint assignment; `fixed[i]` overrides node `i`.
    fn draw<R: Rng>(&self, rng: &mut R, fixed: &[Option<f64>], v: &mut [f64]) {
        for &i in &self.order {
            let node = &self.nodes[i];
            if let Some(x) = fixed[i] {
                v[i] = x;
                continue;
            }
            let cfg = self.config(node, v);
            v[i] = match &node.kind {
                Kind::Discrete { states, table } => {
                    let u: f64 = rng.random();
                    let row = &table[cfg];
                    let mut acc = 0.0;
                    let mut pick = states - 1;
                    for (s, &p) in row.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = s;
                            break;
                        }
                    }
                    pick as f64
                }
                Kind::Continuous {
                    continuous,
                    coefficients,
                    intercepts,
                    variances,
                    bands,
                } => {
                    let mean = intercepts[cfg] + continuous.iter().zip(coefficients).map(|(&p, c)| c * v[p]).sum::<f64>();
                    let var = match bands {
                        Some((on, thresholds, vars)) => vars[thresholds.partition_point(|&t| t <= v[*on])],
                        None => variances[cfg],
                    };
                    let z: f64 = rng.sample(StandardNormal);
                    mean + var.sqrt() * z
                }
            };
        }
    }
}

/// The bundled network with its treatment/outcome roles.
#[derive(Debug, Clone, PartialEq)]
pub struct HealthcareNetwork {
    pub net: MixedBayesNet,
    /// Network node index of each treatment column.
    pub treatments: Vec<usize>,
    pub outcome: usize,
    /// Observational `(mean, sd)` of each treatment.
    pub moments: Vec<(f64, f64)>,
}

impl HealthcareNetwork {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        let net = MixedBayesNet::build(&file.discrete, &file.continuous, &file.latent)?;
        let role = |name: &str| -> Result<usize> {
            let i = net
                .index_of(name)
                .ok_or_else(|| Error::usage(format!("unknown role node {name:?}")))?;
            if i < file.discrete.len() || net.latent.contains(&i) {
                return Err(Error::usage(format!("{name} must be an observed continuous node")));
            }
            Ok(i)
        };
        let treatments: Vec<usize> = file.treatments.iter().map(|t| role(t)).collect::<Result<_>>()?;
        let outcome = role(&file.outcome)?;
        let mut hc = HealthcareNetwork {
            net,
            treatments,
            outcome,
            moments: Vec::new(),
        };
        let obs = hc.sample(&NodeSet::new(), &ValuePolicy::StdNormal, MOMENT_ROWS, 0)?;
        hc.moments = (0..hc.treatments.len())
            .map(|c| {
                let col = obs.column(c);
                let m = col.len() as f64;
                let mean = col.iter().sum::<f64>() / m;
                let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
                (mean, sd)
            })
            .collect();
        Ok(hc)
    }

    pub fn treatment_names(&self) -> Vec<String> {
        self.treatments.iter().map(|&i| self.net.name(i).to_string()).collect()
    }

    /// Graph induced on the treatments.
    pub fn treatment_graph(&self) -> Dag {
        let pos: BTreeMap<usize, usize> = self.treatments.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let edges = self
            .net
            .graph
            .edges()
            .into_iter()
            .filter_map(|(a, b)| Some((*pos.get(&a)?, *pos.get(&b)?)));
        Dag::new(self.treatments.len(), edges.collect::<Vec<_>>()).expect("subgraph of a DAG")
    }

    /// Monte-Carlo `E[T | do(targets = values)]`.
    pub fn oracle(&self, targets: &NodeSet, values: &[f64], m: usize, seed: u64) -> Result<McEstimate> {
        let ds = self.sample(targets, &ValuePolicy::Fixed(values.to_vec()), m, seed)?;
        Ok(McEstimate::from_samples(ds.outcome()))
    }
}

impl InterventionSampler for HealthcareNetwork {
    fn n_treatments(&self) -> usize {
        self.treatments.len()
    }

    fn sample(&self, targets: &NodeSet, policy: &ValuePolicy, m: usize, seed: u64) -> Result<InterventionalDataset> {
        let n = self.treatments.len();
        if m == 0 {
            return Err(Error::usage("sample count must be at least 1"));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= n) {
            return Err(Error::usage(format!("target {t} is not a treatment")));
        }
        policy.check_arity(targets.len())?;
        let mut rng = seeds::rng(seed);
        let mut fixed = vec![None; self.net.len()];
        let mut v = vec![0.0; self.net.len()];
        let mut data = DMatrix::zeros(m, n + 1);
        for r in 0..m {
            for (k, &t) in targets.iter().enumerate() {
                fixed[self.treatments[t]] = Some(policy.draw(k, &mut rng));
            }
            self.net.draw(&mut rng, &fixed, &mut v);
            for (c, &node) in self.treatments.iter().enumerate() {
                data[(r, c)] = v[node];
            }
            data[(r, n)] = v[self.outcome];
        }
        InterventionalDataset::new(targets.clone(), policy.clone(), seed, data)
    }

    fn randomized_policy(&self, targets: &NodeSet) -> ValuePolicy {
        ValuePolicy::Gaussian(targets.iter().map(|&t| self.moments[t]).collect())
    }
}

/// The bundled HEALTHCARE network.
pub fn healthcare_model() -> Result<HealthcareNetwork> {
    HealthcareNetwork::from_json(BUNDLED)
}

fn paper_targets(hc: &HealthcareNetwork) -> Vec<NodeSet> {
    let name = |s: &str| {
        hc.treatments
            .iter()
            .position(|&i| hc.net.name(i) == s)
            .expect("bundled roles")
    };
    vec![
        NodeSet::new(),
        [name("C"), name("D")].into(),
        (0..hc.treatments.len()).collect(),
    ]
}

fn collect<S: InterventionSampler>(s: &S, targets: &[NodeSet], m: usize, seed: u64) -> Result<Vec<InterventionalDataset>> {
    targets
        .iter()
        .enumerate()
        .map(|(k, t)| s.sample(t, &s.randomized_policy(t), m, derive_seed(seed, stream::DATA, k as u64)))
        .collect()
}

/// Per-query MAE on the HEALTHCARE network from `{∅, {C, D}, {C, D, O, I}}`,
/// next to the MAE of linear random ANMs on the same treatment graph and
/// targets at the same sample size.
pub fn run_healthcare_experiment(cfg: &ExperimentConfig) -> Result<Table> {
    let hc = healthcare_model()?;
    let graph = hc.treatment_graph();
    let targets = paper_targets(&hc);
    let queries = all_subsets(hc.treatments.len());
    let samples = *cfg.sample_sizes.last().expect("validated");
    let names = hc.treatment_names();

    let reps: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<(Vec<f64>, Vec<f64>)> {
            let seed = derive_seed(cfg.seed, stream::REPLICATION, rep as u64);
            let data = collect(&hc, &targets, samples, seed)?;
            let model = fit_model(
                &graph,
                &data,
                &FitConfig {
                    regressor: cfg.regressor,
                    independent: Vec::new(),
                },
            )?;
            let mut qrng = seeds::rng(derive_seed(seed, stream::QUERY, 0));
            let mut errs = Vec::with_capacity(queries.len());
            for (k, q) in queries.iter().enumerate() {
                let vals: Vec<f64> = q
                    .iter()
                    .map(|&t| {
                        let z: f64 = qrng.sample(StandardNormal);
                        hc.moments[t].0 + hc.moments[t].1 * z
                    })
                    .collect();
                let truth = hc.oracle(q, &vals, cfg.oracle_draws, derive_seed(seed, stream::ORACLE, k as u64))?;
                let est = model.ace(&AceQuery::new(q, &vals)?, cfg.mc_draws, derive_seed(seed, stream::ESTIMATE, k as u64))?;
                if !est.mean.is_finite() {
                    return Err(Error::numerical(format!("non-finite estimate for {}", subset_label(q))));
                }
                errs.push((est.mean - truth.mean).abs());
            }

            let anm = random_anm(&graph, &RandomAnmConfig::default(), derive_seed(seed, stream::MODEL, 0))?;
            let data = collect(&anm, &targets, samples, derive_seed(seed, stream::DATA, 99))?;
            let model = fit_model(&graph, &data, &FitConfig::default())?;
            let mut ref_errs = Vec::with_capacity(queries.len());
            for (k, q) in queries.iter().enumerate() {
                let vals: Vec<f64> = q.iter().map(|_| qrng.sample(StandardNormal)).collect();
                let truth = anm.true_ace_oracle(q, &vals, cfg.oracle_draws, derive_seed(seed, stream::ORACLE, 100 + k as u64))?;
                let est = model.ace(&AceQuery::new(q, &vals)?, cfg.mc_draws, derive_seed(seed, stream::ESTIMATE, 100 + k as u64))?;
                ref_errs.push((est.mean - truth.mean).abs());
            }
            Ok((errs, ref_errs))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&["query", "size", "samples", "mae", "sd", "reference_mae", "reference_sd"]);
    for (k, q) in queries.iter().enumerate() {
        let label = if q.is_empty() {
            "{}".to_string()
        } else {
            q.iter().map(|&t| names[t].as_str()).collect::<Vec<_>>().join(";")
        };
        let (mae, sd) = mean_sd(&reps.iter().map(|r| r.0[k]).collect::<Vec<_>>());
        let (rmae, rsd) = mean_sd(&reps.iter().map(|r| r.1[k]).collect::<Vec<_>>());
        table.push(vec![
            label.into(),
            q.len().into(),
            samples.into(),
            mae.into(),
            sd.into(),
            rmae.into(),
            rsd.into(),
        ]);
    }
    Ok(table)
}
