//! Experiment drivers: synthetic discovery and estimation studies, the
//! non-identifiability demonstrations and the HEALTHCARE network study.

mod counterexample;
mod discovery_exp;
mod healthcare;
mod mae;
mod svg;

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimation::{Regressor, DEFAULT_KNN_K};
use crate::graph::{Admg, Dag};
use crate::independence::{Backend, DependenceTest, OracleTest, StatisticalTest, TestConfig, DEFAULT_LEVEL, DEFAULT_PERMUTATIONS};
use crate::scm::ConfoundedAnm;

pub use counterexample::{
    bump_pair, necessity_demo, run_counterexample_experiment, table1_comparison, NecessityDemo, Table1Comparison,
};
pub use discovery_exp::{run_discovery_experiment, run_sufficiency_experiment};
pub use healthcare::{healthcare_model, run_healthcare_experiment, ContinuousNode, DiscreteNode, HealthcareNetwork, MixedBayesNet, VarianceBands};
pub use mae::run_mae_experiment;
pub use svg::line_chart;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ShdVsN,
    ShdVsSamples,
    Sufficiency,
    Mae,
    Healthcare,
    Counterexample,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::ShdVsN,
        ExperimentKind::ShdVsSamples,
        ExperimentKind::Sufficiency,
        ExperimentKind::Mae,
        ExperimentKind::Healthcare,
        ExperimentKind::Counterexample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ShdVsN => "shd_vs_n",
            ExperimentKind::ShdVsSamples => "shd_vs_samples",
            ExperimentKind::Sufficiency => "sufficiency",
            ExperimentKind::Mae => "mae",
            ExperimentKind::Healthcare => "healthcare",
            ExperimentKind::Counterexample => "counterexample",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Dcorr,
    Pearson,
    Oracle,
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dcorr" => Ok(TestKind::Dcorr),
            "pearson" => Ok(TestKind::Pearson),
            "oracle" => Ok(TestKind::Oracle),
            _ => Err(Error::usage(format!("unknown test {s:?} (dcorr|pearson|oracle)"))),
        }
    }
}

/// Builds the dependence test for `anm`.
pub fn make_test(kind: TestKind, level: f64, permutations: usize, anm: &ConfoundedAnm) -> Box<dyn DependenceTest> {
    match kind {
        TestKind::Oracle => Box::new(OracleTest::new(Admg::from_covariance(anm.graph().clone(), anm.noise().cov()))),
        TestKind::Dcorr | TestKind::Pearson => Box::new(StatisticalTest::new(TestConfig {
            backend: if kind == TestKind::Dcorr { Backend::Dcorr } else { Backend::Pearson },
            level,
            permutations,
        })),
    }
}

/// Everything an experiment run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Treatment counts swept by `shd_vs_n`.
    pub n_values: Vec<usize>,
    /// Treatment count for the other experiments.
    pub n: usize,
    pub d_max: usize,
    pub alpha: f64,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub test: TestKind,
    pub level: f64,
    pub permutations: usize,
    pub bonferroni: bool,
    /// Random-DAG edge probability; `min(1, d_max/(n−1))` when absent.
    pub edge_prob: Option<f64>,
    pub pairwise_prob: f64,
    pub mc_draws: usize,
    pub oracle_draws: usize,
    pub regressor: Regressor,
    /// Random target draws considered by `sufficiency`; the full outer loop
    /// length when absent.
    pub max_interventions: Option<usize>,
    pub output: Option<PathBuf>,
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            kind,
            seed: 0,
            n_values: (3..=20).collect(),
            n: 20,
            d_max: 4,
            alpha: 3.0,
            sample_sizes: vec![300],
            replications: 50,
            test: TestKind::Pearson,
            level: DEFAULT_LEVEL,
            permutations: DEFAULT_PERMUTATIONS,
            bonferroni: true,
            edge_prob: None,
            pairwise_prob: 0.0,
            mc_draws: 100_000,
            oracle_draws: 100_000,
            regressor: Regressor::Basis,
            max_interventions: None,
            output: None,
            svg: false,
        };
        match kind {
            ExperimentKind::ShdVsN | ExperimentKind::Sufficiency | ExperimentKind::Counterexample => base,
            ExperimentKind::ShdVsSamples => ExperimentConfig {
                sample_sizes: vec![100, 300, 1000, 3000],
                ..base
            },
            ExperimentKind::Mae => ExperimentConfig {
                n: 4,
                d_max: 3,
                edge_prob: Some(0.5),
                pairwise_prob: 0.25,
                sample_sizes: vec![300, 1000, 3000],
                ..base
            },
            ExperimentKind::Healthcare => ExperimentConfig {
                n: 4,
                sample_sizes: vec![5000],
                replications: 10,
                mc_draws: 5000,
                oracle_draws: 100_000,
                regressor: Regressor::Knn { k: DEFAULT_KNN_K },
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::usage("replications must be at least 1"));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::usage("sample_sizes must be non-empty and strictly increasing"));
        }
        if self.sample_sizes[0] == 0 {
            return Err(Error::usage("sample sizes must be positive"));
        }
        if self.n == 0 || self.n_values.iter().any(|&n| n == 0) {
            return Err(Error::usage("treatment counts must be positive"));
        }
        if self.d_max < 2 {
            return Err(Error::usage("d_max must be at least 2"));
        }
        if !(self.alpha >= 1.0) {
            return Err(Error::usage("alpha must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.level) || self.level == 0.0 {
            return Err(Error::usage("level must lie in (0, 1)"));
        }
        if let Some(p) = self.edge_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::usage("edge_prob must lie in [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.pairwise_prob) {
            return Err(Error::usage("pairwise_prob must lie in [0, 1]"));
        }
        if self.mc_draws == 0 || self.oracle_draws == 0 {
            return Err(Error::usage("Monte-Carlo draw counts must be positive"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, without the output path.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let text = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Effective `min(d_max, n − 1)`, never below 2.
    pub fn degree_for(&self, n: usize) -> usize {
        self.d_max.min(n.saturating_sub(1)).max(2)
    }

    pub fn edge_prob_for(&self, n: usize) -> f64 {
        self.edge_prob.unwrap_or_else(|| {
            if n <= 1 {
                0.0
            } else {
                (self.degree_for(n) as f64 / (n - 1) as f64).min(1.0)
            }
        })
    }

    pub fn random_dag(&self, n: usize, seed: u64) -> Dag {
        crate::graph::random_dag(n, self.degree_for(n), self.edge_prob_for(n), seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A rectangular result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    fn index(&self, name: &str) -> usize {
        self.header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name:?}"))
    }

    /// Numeric view of a column; text cells become NaN.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let j = self.index(name);
        self.rows
            .iter()
            .map(|r| match &r[j] {
                Cell::Int(v) => *v as f64,
                Cell::Num(v) => *v,
                Cell::Text(_) => f64::NAN,
            })
            .collect()
    }

    pub fn text_column(&self, name: &str) -> Vec<String> {
        let j = self.index(name);
        self.rows.iter().map(|r| r[j].to_string()).collect()
    }

    /// CSV text with a leading `# config_hash=… seed=…` comment line.
    pub fn to_csv(&self, cfg: &ExperimentConfig) -> String {
        let mut out = format!("# experiment={} config_hash={} seed={}\n", cfg.kind.name(), cfg.hash(), cfg.seed);
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Runs the configured experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::ShdVsN | ExperimentKind::ShdVsSamples => run_discovery_experiment(cfg),
        ExperimentKind::Sufficiency => run_sufficiency_experiment(cfg),
        ExperimentKind::Mae => run_mae_experiment(cfg),
        ExperimentKind::Healthcare => run_healthcare_experiment(cfg),
        ExperimentKind::Counterexample => run_counterexample_experiment(cfg),
    }
}

/// Writes `<kind>.csv`, `config.json` and optionally `<kind>.svg` into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, table: &Table, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let name = cfg.kind.name();
    fs::write(dir.join(format!("{name}.csv")), table.to_csv(cfg))?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
    if cfg.svg {
        if let Some(svg) = default_chart(cfg, table) {
            fs::write(dir.join(format!("{name}.svg")), svg)?;
        }
    }
    Ok(())
}

fn default_chart(cfg: &ExperimentConfig, table: &Table) -> Option<String> {
    let (x, y, title) = match cfg.kind {
        ExperimentKind::ShdVsN => ("n", "mean_shd", "SHD vs number of treatments"),
        ExperimentKind::ShdVsSamples => ("samples", "mean_shd", "SHD vs samples"),
        ExperimentKind::Sufficiency => ("interventions", "proportion", "Sufficient datasets vs interventions"),
        _ => return None,
    };
    let xs = table.column(x);
    let ys = table.column(y);
    Some(line_chart(title, x, y, &xs, &ys))
}

/// Mean and sample standard deviation.
pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}
