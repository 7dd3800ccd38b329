//! The `canm` command-line tool.
//!
//! Every subcommand reads its numeric settings from an optional JSON
//! `--config` file and from flags, flags winning. Errors print one line of
//! the form `error[<kind>] <message>` on stderr and map to exit codes:
//! 2 usage, 3 identifiability, 4 numerical, 5 I/O.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use canm_core::discovery::{check_sufficiency, core_intervention_plan, learn_observable_graph, DiscoveryConfig, DiscoveryResult};
use canm_core::estimation::{ace_csv, fit_model, AceQuery, AceRow, EstimatedModel, FitConfig, Regressor, DEFAULT_KNN_K, DEFAULT_MC_DRAWS};
use canm_core::graph::{random_dag, Dag, NodeSet};
use canm_core::harness::{healthcare_model, make_test, run_experiment, write_outputs, ExperimentConfig, ExperimentKind, TestKind};
use canm_core::independence::{DEFAULT_LEVEL, DEFAULT_PERMUTATIONS};
use canm_core::scm::{random_anm, ConfoundedAnm, InterventionSampler, InterventionalDataset, RandomAnmConfig, ValuePolicy};
use canm_core::seeds::{self, derive_seed, stream};
use canm_core::setsys::strongly_separating;
use canm_core::Error;
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IDENTIFIABILITY: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Name of the settings echo written next to every output.
pub const EFFECTIVE_CONFIG: &str = "effective_config.json";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn usage(msg: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_USAGE,
            kind: "usage",
            message: msg.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error[{}] {}", self.kind, one_line)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Graph(_) | Error::Usage(_) | Error::Json(_) | Error::Csv(_) => (EXIT_USAGE, "usage"),
            Error::Identifiability { .. } => (EXIT_IDENTIFIABILITY, "identifiability"),
            Error::SingularFit { .. } | Error::Numerical(_) => (EXIT_NUMERICAL, "numerical"),
            Error::Io(_) => (EXIT_IO, "io"),
        };
        CliError {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e).into()
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "canm", version, about = "Discovery and causal-effect estimation for confounded additive noise models")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct GlobalArgs {
    /// JSON settings file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed (required by every subcommand that samples)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; stdout when absent
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Samples per intervention (comma-separated list for experiments)
    #[arg(long, global = true, value_delimiter = ',')]
    samples: Vec<usize>,
    /// Number of treatments
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Maximum graph degree
    #[arg(long, global = true)]
    dmax: Option<usize>,
    /// Outer-loop multiplier of the randomized discovery
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Monte-Carlo draws per ACE query
    #[arg(long, global = true)]
    mc: Option<usize>,
    /// Dependence test: dcorr, pearson or oracle
    #[arg(long, global = true)]
    test: Option<String>,
    /// Regressor: basis, linear, knn or knn:<k>
    #[arg(long, global = true)]
    regressor: Option<String>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Emit a random confounded ANM as JSON
    GenScm(GenScmArgs),
    /// Draw a dataset from an ANM under an intervention
    Sample(SampleArgs),
    /// Print the strongly separating set system over --n nodes
    Setsys,
    /// Learn the observable graph and collect interventional datasets
    Discover(DiscoverArgs),
    /// Print the core intervention plan of a graph
    Plan(PlanArgs),
    /// Check whether a list of targets identifies every causal effect
    Check(CheckArgs),
    /// Fit an estimated model from a discovery directory or datasets
    Fit(FitArgs),
    /// Estimate E[Y | do(W)] from a fitted model
    Ace(AceArgs),
    /// Run a named experiment
    Experiment(ExperimentArgs),
    /// Operations on the bundled HEALTHCARE network
    Healthcare(HealthcareArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenScmArgs {
    /// Random-DAG edge probability
    #[arg(long)]
    edge_prob: Option<f64>,
    /// Probability of a product term per parent pair
    #[arg(long)]
    pairwise_prob: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    /// ANM JSON file
    #[arg(long)]
    scm: PathBuf,
    /// Intervention targets: comma-separated 0-based indices or X-names, `all` or empty
    #[arg(long, default_value = "")]
    targets: String,
    /// Value policy: std_normal, fixed:<v,..> or gaussian:<m/s,..>
    #[arg(long, default_value = "std_normal")]
    policy: String,
    /// File stem inside --out
    #[arg(long, default_value = "dataset")]
    stem: String,
}

#[derive(Args, Debug, Serialize)]
struct DiscoverArgs {
    /// ANM JSON file
    #[arg(long)]
    scm: PathBuf,
    /// Significance level of each dependence test
    #[arg(long)]
    level: Option<f64>,
    /// Permutations of the distance-correlation test
    #[arg(long)]
    permutations: Option<usize>,
    /// Use the raw level instead of dividing it by the number of tests in each closure run
    #[arg(long)]
    no_bonferroni: bool,
}

#[derive(Args, Debug, Serialize)]
struct PlanArgs {
    /// Graph JSON file
    #[arg(long)]
    graph: PathBuf,
    /// Treatments with independent noise
    #[arg(long, default_value = "")]
    independent: String,
}

#[derive(Args, Debug, Serialize)]
struct CheckArgs {
    /// Graph JSON file (defaults to the learned graph of --discovery)
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Target list as JSON, e.g. [[],[0,1,2,3]]
    #[arg(long)]
    targets: Option<String>,
    /// Discovery output directory supplying the targets
    #[arg(long)]
    discovery: Option<PathBuf>,
    /// Treatments with independent noise
    #[arg(long, default_value = "")]
    independent: String,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    /// Graph JSON file (defaults to the learned graph of --discovery)
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Discovery output directory
    #[arg(long)]
    discovery: Option<PathBuf>,
    /// Dataset CSV files with .meta.json sidecars
    #[arg(long, value_delimiter = ',')]
    datasets: Vec<PathBuf>,
    /// Treatments with independent noise
    #[arg(long, default_value = "")]
    independent: String,
}

#[derive(Args, Debug, Serialize)]
struct AceArgs {
    /// Fitted model JSON file
    #[arg(long)]
    model: PathBuf,
    /// Intervened treatments
    #[arg(long, default_value = "")]
    targets: String,
    /// Values of the intervened treatments
    #[arg(long, default_value = "")]
    values: String,
    /// Query every subset with standard-normal values drawn from --seed
    #[arg(long)]
    all: bool,
}

#[derive(Args, Debug, Serialize)]
struct ExperimentArgs {
    /// shd_vs_n, shd_vs_samples, sufficiency, mae, healthcare or counterexample
    name: String,
    /// Replications per setting
    #[arg(long)]
    replications: Option<usize>,
    /// Treatment counts swept by shd_vs_n
    #[arg(long, value_delimiter = ',')]
    n_values: Vec<usize>,
    /// Also write an SVG chart
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Debug, Serialize)]
struct HealthcareArgs {
    #[command(subcommand)]
    action: HealthcareAction,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
enum HealthcareAction {
    /// Print nodes, edges and roles
    Describe,
    /// Draw a dataset over (C, D, O, I, T)
    Sample {
        /// Intervened treatments by name or index
        #[arg(long, default_value = "")]
        targets: String,
        /// Value policy; observational moments when absent
        #[arg(long)]
        policy: Option<String>,
    },
    /// Monte-Carlo E[T | do(targets = values)]
    Oracle {
        #[arg(long, default_value = "")]
        targets: String,
        #[arg(long, default_value = "")]
        values: String,
    },
}

/// Settings shared by every subcommand, loaded from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub n: Option<usize>,
    pub dmax: Option<usize>,
    pub alpha: Option<f64>,
    pub mc: Option<usize>,
    pub test: Option<TestKind>,
    pub regressor: Option<Regressor>,
    pub level: Option<f64>,
    pub permutations: Option<usize>,
    pub bonferroni: Option<bool>,
    pub edge_prob: Option<f64>,
    pub pairwise_prob: Option<f64>,
}

impl Settings {
    fn seed(&self) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::usage("--seed (or \"seed\" in --config) is required for sampling"))
    }

    fn samples(&self) -> CliResult<usize> {
        match self.samples {
            Some(0) => Err(CliError::usage("--samples must be positive")),
            Some(m) => Ok(m),
            None => Err(CliError::usage("--samples is required")),
        }
    }
}

fn parse_regressor(s: &str) -> CliResult<Regressor> {
    match s {
        "basis" => Ok(Regressor::Basis),
        "linear" => Ok(Regressor::Linear),
        "knn" => Ok(Regressor::Knn { k: DEFAULT_KNN_K }),
        _ => match s.strip_prefix("knn:").map(str::parse::<usize>) {
            Some(Ok(k)) if k > 0 => Ok(Regressor::Knn { k }),
            _ => Err(CliError::usage(format!("unknown regressor {s:?} (basis|linear|knn|knn:<k>)"))),
        },
    }
}

fn merged_settings(g: &GlobalArgs) -> CliResult<Settings> {
    let mut s: Settings = match &g.config {
        Some(p) => serde_json::from_slice(&fs::read(p)?)?,
        None => Settings::default(),
    };
    s.seed = g.seed.or(s.seed);
    if g.samples.len() > 1 {
        return Err(CliError::usage("--samples takes a single value here"));
    }
    s.samples = g.samples.first().copied().or(s.samples);
    s.n = g.n.or(s.n);
    s.dmax = g.dmax.or(s.dmax);
    s.alpha = g.alpha.or(s.alpha);
    s.mc = g.mc.or(s.mc);
    if let Some(t) = &g.test {
        s.test = Some(t.parse()?);
    }
    if let Some(r) = &g.regressor {
        s.regressor = Some(parse_regressor(r)?);
    }
    Ok(s)
}

/// Parses `0,2`, `X1,X3`, `all` or an empty string into a node set over `0..n`.
fn parse_targets(s: &str, n: usize, names: Option<&[String]>) -> CliResult<NodeSet> {
    let s = s.trim();
    if s.is_empty() || s == "none" || s == "{}" {
        return Ok(NodeSet::new());
    }
    if s == "all" {
        return Ok((0..n).collect());
    }
    s.split([',', ';'])
        .map(str::trim)
        .map(|tok| {
            let idx = if let Some(i) = names.and_then(|ns| ns.iter().position(|x| x == tok)) {
                Some(i)
            } else if let Some(k) = tok.strip_prefix('X') {
                k.parse::<usize>().ok().filter(|&k| k >= 1).map(|k| k - 1)
            } else {
                tok.parse::<usize>().ok()
            };
            match idx {
                Some(i) if i < n => Ok(i),
                _ => Err(CliError::usage(format!("bad target {tok:?} for {n} treatments"))),
            }
        })
        .collect()
}

fn parse_values(s: &str) -> CliResult<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split([',', ';'])
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::usage(format!("bad value {v:?}")))
        })
        .collect()
}

fn parse_flags(s: &str, n: usize) -> CliResult<Vec<bool>> {
    let set = parse_targets(s, n, None)?;
    Ok((0..n).map(|i| set.contains(&i)).collect())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

struct Output<'a> {
    dir: Option<&'a Path>,
    stdout: &'a mut dyn std::io::Write,
}

impl Output<'_> {
    /// Writes `name` into the output directory, or the bytes to stdout.
    fn emit(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        match self.dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let path = dir.join(name);
                fs::write(&path, bytes)?;
                writeln!(self.stdout, "wrote {}", path.display())?;
            }
            None => self.stdout.write_all(bytes)?,
        }
        Ok(())
    }

    fn echo(&mut self, settings: &Settings, command: &Command) -> CliResult<()> {
        if let Some(dir) = self.dir {
            fs::create_dir_all(dir)?;
            let doc = serde_json::json!({ "settings": settings, "args": command });
            fs::write(dir.join(EFFECTIVE_CONFIG), serde_json::to_string_pretty(&doc)? + "\n")?;
        }
        Ok(())
    }
}

fn compact_line<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    Ok((serde_json::to_string(v)? + "\n").into_bytes())
}

fn json_line<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    Ok((serde_json::to_string_pretty(v)? + "\n").into_bytes())
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    run_cli_with(argv, &mut stdout, &mut stderr)
}

/// [`run_cli`] with explicit output streams.
pub fn run_cli_with<I, T>(argv: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return EXIT_OK;
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let _ = writeln!(stderr, "{}", CliError::usage(first));
            return EXIT_USAGE;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.code
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn std::io::Write) -> CliResult<()> {
    if let Command::Experiment(args) = &cli.command {
        return experiment(&cli.global, args, stdout);
    }
    let settings = merged_settings(&cli.global)?;
    let mut out = Output {
        dir: cli.global.out.as_deref(),
        stdout,
    };
    match &cli.command {
        Command::GenScm(a) => gen_scm(&settings, a, &mut out)?,
        Command::Sample(a) => sample(&settings, a, &mut out)?,
        Command::Setsys => {
            let n = settings.n.ok_or_else(|| CliError::usage("--n is required"))?;
            out.emit("setsys.json", &compact_line(&strongly_separating(n)?.sets)?)?;
        }
        Command::Discover(a) => discover(&settings, a, &mut out)?,
        Command::Plan(a) => {
            let g: Dag = read_json(&a.graph)?;
            let plan = core_intervention_plan(&g, &parse_flags(&a.independent, g.n())?);
            out.emit("plan.json", &compact_line(&plan)?)?;
        }
        Command::Check(a) => check(a, &mut out)?,
        Command::Fit(a) => fit(&settings, a, &mut out)?,
        Command::Ace(a) => ace(&settings, a, &mut out)?,
        Command::Healthcare(a) => healthcare(&settings, &a.action, &mut out)?,
        Command::Experiment(_) => unreachable!("handled above"),
    }
    out.echo(&settings, &cli.command)
}

fn gen_scm(s: &Settings, a: &GenScmArgs, out: &mut Output) -> CliResult<()> {
    let seed = s.seed()?;
    let n = s.n.ok_or_else(|| CliError::usage("--n is required"))?;
    if n == 0 {
        return Err(CliError::usage("--n must be positive"));
    }
    let d = s.dmax.unwrap_or(4).max(1);
    let p = a
        .edge_prob
        .or(s.edge_prob)
        .unwrap_or_else(|| if n <= 1 { 0.0 } else { (d as f64 / (n - 1) as f64).min(1.0) });
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::usage("--edge-prob must lie in [0, 1]"));
    }
    let g = random_dag(n, d, p, derive_seed(seed, stream::GRAPH, 0));
    let cfg = RandomAnmConfig {
        pairwise_prob: a.pairwise_prob.or(s.pairwise_prob).unwrap_or(0.0),
        ..Default::default()
    };
    let anm = random_anm(&g, &cfg, derive_seed(seed, stream::MODEL, 0))?;
    out.emit("anm.json", &json_line(&anm)?)?;
    if out.dir.is_some() {
        out.emit("graph.json", &json_line(anm.graph())?)?;
    }
    Ok(())
}

fn sample(s: &Settings, a: &SampleArgs, out: &mut Output) -> CliResult<()> {
    let seed = s.seed()?;
    let m = s.samples()?;
    let anm: ConfoundedAnm = read_json(&a.scm)?;
    let targets = parse_targets(&a.targets, anm.n(), None)?;
    let policy: ValuePolicy = a.policy.parse()?;
    let ds = anm.sample(&targets, &policy, m, seed)?;
    write_dataset(&ds, &a.stem, out)
}

fn write_dataset(ds: &InterventionalDataset, stem: &str, out: &mut Output) -> CliResult<()> {
    match out.dir {
        Some(dir) => {
            ds.save(dir, stem)?;
            writeln!(out.stdout, "wrote {}", dir.join(format!("{stem}.csv")).display())?;
            Ok(())
        }
        None => out.emit("", &ds.to_csv()?),
    }
}

fn discover(s: &Settings, a: &DiscoverArgs, out: &mut Output) -> CliResult<()> {
    let seed = s.seed()?;
    let anm: ConfoundedAnm = read_json(&a.scm)?;
    let defaults = DiscoveryConfig::default();
    let cfg = DiscoveryConfig {
        d_max: s.dmax.unwrap_or(defaults.d_max),
        alpha: s.alpha.unwrap_or(defaults.alpha),
        samples: s.samples.unwrap_or(defaults.samples),
        bonferroni: !a.no_bonferroni && s.bonferroni.unwrap_or(defaults.bonferroni),
        retain_closure_datasets: true,
    };
    let level = a.level.or(s.level).unwrap_or(DEFAULT_LEVEL);
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::usage("--level must lie in (0, 1)"));
    }
    let perms = a.permutations.or(s.permutations).unwrap_or(DEFAULT_PERMUTATIONS);
    let test = make_test(s.test.unwrap_or(TestKind::Dcorr), level, perms, &anm);
    let res = learn_observable_graph(&anm, test.as_ref(), &cfg, seed)?;
    match out.dir {
        Some(dir) => {
            res.save(dir)?;
            writeln!(
                out.stdout,
                "learned {} edges with {} interventions; wrote {}",
                res.learned_graph.edge_count(),
                res.interventions_used,
                dir.display()
            )?;
        }
        None => out.emit("", &json_line(&res.report())?)?,
    }
    Ok(())
}

fn check(a: &CheckArgs, out: &mut Output) -> CliResult<()> {
    let discovery = a.discovery.as_deref().map(DiscoveryResult::load).transpose()?;
    let g: Dag = match (&a.graph, &discovery) {
        (Some(p), _) => read_json(p)?,
        (None, Some(d)) => d.learned_graph.clone(),
        (None, None) => return Err(CliError::usage("--graph or --discovery is required")),
    };
    let targets: Vec<NodeSet> = match (&a.targets, &discovery) {
        (Some(t), _) => serde_json::from_str(t)?,
        (None, Some(d)) => d.targets(),
        (None, None) => return Err(CliError::usage("--targets or --discovery is required")),
    };
    if let Some(t) = targets.iter().flatten().find(|&&t| t >= g.n()) {
        return Err(CliError::usage(format!("target {t} outside the graph")));
    }
    let report = check_sufficiency(&g, &targets, &parse_flags(&a.independent, g.n())?);
    out.emit("sufficiency.json", &json_line(&report)?)?;
    if report.sufficient {
        return Ok(());
    }
    let mut why = Vec::new();
    if !report.has_observational {
        why.push("no observational dataset".to_string());
    }
    if !report.has_joint {
        why.push("no joint intervention".to_string());
    }
    Err(Error::Identifiability {
        missing: report.missing.clone(),
        detail: why.join(", "),
    }
    .into())
}

fn fit(s: &Settings, a: &FitArgs, out: &mut Output) -> CliResult<()> {
    let discovery = a.discovery.as_deref().map(DiscoveryResult::load).transpose()?;
    let g: Dag = match (&a.graph, &discovery) {
        (Some(p), _) => read_json(p)?,
        (None, Some(d)) => d.learned_graph.clone(),
        (None, None) => return Err(CliError::usage("--graph or --discovery is required")),
    };
    let mut datasets = discovery.map(|d| d.collected).unwrap_or_default();
    for p in &a.datasets {
        datasets.push(InterventionalDataset::load(p)?);
    }
    if datasets.is_empty() {
        return Err(CliError::usage("no datasets given (--discovery or --datasets)"));
    }
    let cfg = FitConfig {
        regressor: s.regressor.unwrap_or_default(),
        independent: parse_flags(&a.independent, g.n())?,
    };
    let model = fit_model(&g, &datasets, &cfg)?;
    out.emit("model.json", &json_line(&model)?)
}

fn ace(s: &Settings, a: &AceArgs, out: &mut Output) -> CliResult<()> {
    let seed = s.seed()?;
    let m_mc = s.mc.unwrap_or(DEFAULT_MC_DRAWS);
    let model: EstimatedModel = read_json(&a.model)?;
    let n = model.n();
    let queries: Vec<(NodeSet, Vec<f64>)> = if a.all {
        let mut rng = seeds::rng(derive_seed(seed, stream::QUERY, 0));
        (0..1usize << n)
            .map(|mask| {
                let t: NodeSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let v = t.iter().map(|_| rng.sample(StandardNormal)).collect();
                (t, v)
            })
            .collect()
    } else {
        vec![(parse_targets(&a.targets, n, None)?, parse_values(&a.values)?)]
    };
    let rows = queries
        .into_iter()
        .enumerate()
        .map(|(k, (targets, values))| {
            let est = model.ace(&AceQuery::new(&targets, &values)?, m_mc, derive_seed(seed, stream::ESTIMATE, k as u64))?;
            Ok(AceRow {
                targets,
                values,
                estimate: est.mean,
                se: est.se,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    out.emit("ace.csv", ace_csv(&rows).as_bytes())
}

fn healthcare(s: &Settings, action: &HealthcareAction, out: &mut Output) -> CliResult<()> {
    let hc = healthcare_model()?;
    let names = hc.treatment_names();
    match action {
        HealthcareAction::Describe => {
            let nodes: Vec<&str> = (0..hc.net.len()).map(|i| hc.net.name(i)).collect();
            let edges: Vec<(&str, &str)> = hc
                .net
                .graph()
                .edges()
                .into_iter()
                .map(|(a, b)| (nodes[a], nodes[b]))
                .collect();
            let latent: Vec<&str> = hc.net.latent().iter().map(|&i| nodes[i]).collect();
            let doc = serde_json::json!({
                "nodes": nodes,
                "edges": edges,
                "latent": latent,
                "treatments": names,
                "outcome": hc.net.name(hc.outcome),
                "treatment_graph": hc.treatment_graph(),
            });
            out.emit("healthcare.json", &json_line(&doc)?)
        }
        HealthcareAction::Sample { targets, policy } => {
            let seed = s.seed()?;
            let m = s.samples()?;
            let t = parse_targets(targets, names.len(), Some(&names))?;
            let policy = match policy {
                Some(p) => p.parse()?,
                None => hc.randomized_policy(&t),
            };
            let ds = hc.sample(&t, &policy, m, seed)?;
            write_dataset(&ds, "healthcare", out)
        }
        HealthcareAction::Oracle { targets, values } => {
            let seed = s.seed()?;
            let t = parse_targets(targets, names.len(), Some(&names))?;
            let est = hc.oracle(&t, &parse_values(values)?, s.mc.unwrap_or(DEFAULT_MC_DRAWS), seed)?;
            out.emit("oracle.json", &json_line(&est)?)
        }
    }
}

/// Builds the experiment config: preset, then `--config` keys, then flags.
fn experiment_config(g: &GlobalArgs, a: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let kind: ExperimentKind = a.name.parse()?;
    let mut doc = serde_json::to_value(ExperimentConfig::preset(kind))?;
    let mut seeded = false;
    if let Some(path) = &g.config {
        let overlay: Value = read_json(path)?;
        let Value::Object(map) = overlay else {
            return Err(CliError::usage("experiment config must be a JSON object"));
        };
        for (k, v) in map {
            if k == "kind" && v != doc["kind"] {
                return Err(CliError::usage(format!("config kind {v} does not match {}", kind.name())));
            }
            seeded |= k == "seed";
            doc[k] = v;
        }
    }
    let mut cfg: ExperimentConfig = serde_json::from_value(doc)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
        seeded = true;
    }
    if !seeded {
        return Err(CliError::usage("--seed (or \"seed\" in --config) is required for sampling"));
    }
    if !g.samples.is_empty() {
        cfg.sample_sizes = g.samples.clone();
    }
    if let Some(n) = g.n {
        cfg.n = n;
    }
    if !a.n_values.is_empty() {
        cfg.n_values = a.n_values.clone();
    }
    if let Some(d) = g.dmax {
        cfg.d_max = d;
    }
    if let Some(al) = g.alpha {
        cfg.alpha = al;
    }
    if let Some(mc) = g.mc {
        cfg.mc_draws = mc;
    }
    if let Some(t) = &g.test {
        cfg.test = t.parse()?;
    }
    if let Some(r) = &g.regressor {
        cfg.regressor = parse_regressor(r)?;
    }
    if let Some(r) = a.replications {
        cfg.replications = r;
    }
    if let Some(o) = &g.out {
        cfg.output = Some(o.clone());
    }
    cfg.svg |= a.svg;
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(g: &GlobalArgs, a: &ExperimentArgs, stdout: &mut dyn std::io::Write) -> CliResult<()> {
    let cfg = experiment_config(g, a)?;
    let table = run_experiment(&cfg)?;
    match &cfg.output {
        Some(dir) => {
            write_outputs(&cfg, &table, dir)?;
            writeln!(stdout, "wrote {}", dir.join(format!("{}.csv", cfg.kind.name())).display())?;
        }
        None => stdout.write_all(table.to_csv(&cfg).as_bytes())?,
    }
    Ok(())
}
