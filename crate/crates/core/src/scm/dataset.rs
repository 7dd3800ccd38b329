use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeSet;

/// How intervened nodes receive their values, one draw per row.
#[derive(Debug, Clone, PartialEq)]
pub enum ValuePolicy {
    /// Independent `N(0, 1)` per row and target.
    StdNormal,
    /// The same constant per target on every row (ascending target order).
    Fixed(Vec<f64>),
    /// Independent `N(mean, sd²)` per row, one `(mean, sd)` per target.
    Gaussian(Vec<(f64, f64)>),
}

impl ValuePolicy {
    pub(crate) fn check_arity(&self, targets: usize) -> Result<()> {
        let len = match self {
            ValuePolicy::StdNormal => return Ok(()),
            ValuePolicy::Fixed(v) => v.len(),
            ValuePolicy::Gaussian(v) => v.len(),
        };
        if len != targets {
            return Err(Error::usage(format!(
                "value policy lists {len} values for {targets} targets"
            )));
        }
        Ok(())
    }

    /// Value for the `k`-th target (ascending order) on the current row.
    pub(crate) fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> f64 {
        match self {
            ValuePolicy::StdNormal => rng.sample(StandardNormal),
            ValuePolicy::Fixed(v) => v[k],
            ValuePolicy::Gaussian(v) => {
                let z: f64 = rng.sample(StandardNormal);
                v[k].0 + v[k].1 * z
            }
        }
    }
}

impl fmt::Display for ValuePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuePolicy::StdNormal => write!(f, "std_normal"),
            ValuePolicy::Fixed(v) => {
                let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "fixed:{}", vals.join(","))
            }
            ValuePolicy::Gaussian(v) => {
                let vals: Vec<String> = v.iter().map(|(m, s)| format!("{m}/{s}")).collect();
                write!(f, "gaussian:{}", vals.join(","))
            }
        }
    }
}

impl FromStr for ValuePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::usage(format!("bad number {t:?} in value policy")))
        };
        if s == "std_normal" {
            return Ok(ValuePolicy::StdNormal);
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            if rest.is_empty() {
                return Ok(ValuePolicy::Fixed(Vec::new()));
            }
            return rest.split(',').map(parse).collect::<Result<_>>().map(ValuePolicy::Fixed);
        }
        if let Some(rest) = s.strip_prefix("gaussian:") {
            let pairs = rest
                .split(',')
                .map(|p| {
                    let (m, sd) = p
                        .split_once('/')
                        .ok_or_else(|| Error::usage(format!("expected mean/sd, got {p:?}")))?;
                    Ok((parse(m)?, parse(sd)?))
                })
                .collect::<Result<_>>()?;
            return Ok(ValuePolicy::Gaussian(pairs));
        }
        Err(Error::usage(format!("unknown value policy {s:?}")))
    }
}

impl Serialize for ValuePolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ValuePolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Samples drawn under one intervention regime.
///
/// Columns are the `n` treatments followed by the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionalDataset {
    pub targets: NodeSet,
    pub policy: ValuePolicy,
    pub seed: u64,
    data: DMatrix<f64>,
}

/// Sidecar metadata stored next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub targets: Vec<usize>,
    pub policy: ValuePolicy,
    pub seed: u64,
    pub m: usize,
}

impl InterventionalDataset {
    /// `data` is `m × (n + 1)`.
    pub fn new(targets: NodeSet, policy: ValuePolicy, seed: u64, data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() < 1 {
            return Err(Error::usage("dataset needs at least one row and an outcome column"));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= data.ncols() - 1) {
            return Err(Error::usage(format!("target {t} is not a treatment column")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("dataset contains non-finite values"));
        }
        Ok(InterventionalDataset {
            targets,
            policy,
            seed,
            data,
        })
    }

    pub fn n_treatments(&self) -> usize {
        self.data.ncols() - 1
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_observational(&self) -> bool {
        self.targets.is_empty()
    }

    /// Whether every treatment was intervened on.
    pub fn is_joint(&self) -> bool {
        self.targets.len() == self.n_treatments()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Column `j` (`n` is the outcome) as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        let m = self.rows();
        &self.data.as_slice()[j * m..(j + 1) * m]
    }

    pub fn outcome(&self) -> &[f64] {
        self.column(self.n_treatments())
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            targets: self.targets.iter().copied().collect(),
            policy: self.policy.clone(),
            seed: self.seed,
            m: self.rows(),
        }
    }

    fn header(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("X{i}")).chain(["Y".to_string()]).collect()
    }

    /// CSV bytes: header `X1..Xn,Y`, shortest round-trip float formatting.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::header(self.n_treatments()))?;
        let mut rec = Vec::with_capacity(self.data.ncols());
        for r in 0..self.rows() {
            rec.clear();
            rec.extend((0..self.data.ncols()).map(|c| self.data[(r, c)].to_string()));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn from_csv(bytes: &[u8], meta: &DatasetMeta) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(bytes);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let n = header.len().checked_sub(1).ok_or_else(|| Error::usage("empty csv header"))?;
        if header != Self::header(n) {
            return Err(Error::usage(format!("unexpected csv header {header:?}")));
        }
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != n + 1 {
                return Err(Error::usage("ragged csv row"));
            }
            for field in rec.iter() {
                values.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| Error::usage(format!("bad number {field:?} in csv")))?,
                );
            }
        }
        let m = values.len() / (n + 1);
        if m != meta.m {
            return Err(Error::usage(format!("csv has {m} rows, sidecar says {}", meta.m)));
        }
        let data = DMatrix::from_row_slice(m, n + 1, &values);
        meta.policy.check_arity(meta.targets.len()).or_else(|e| match meta.policy {
            ValuePolicy::StdNormal => Ok(()),
            _ => Err(e),
        })?;
        InterventionalDataset::new(meta.targets.iter().copied().collect(), meta.policy.clone(), meta.seed, data)
    }

    /// Writes `<stem>.csv` and `<stem>.meta.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.csv")), self.to_csv()?)?;
        let meta = serde_json::to_string_pretty(&self.meta())?;
        fs::write(dir.join(format!("{stem}.meta.json")), meta + "\n")?;
        Ok(())
    }

    /// Reads `<path>` and the sidecar `<path without .csv>.meta.json`.
    pub fn load(csv_path: &Path) -> Result<Self> {
        let stem = csv_path
            .to_str()
            .and_then(|s| s.strip_suffix(".csv"))
            .ok_or_else(|| Error::usage(format!("{} is not a .csv path", csv_path.display())))?;
        let meta: DatasetMeta = serde_json::from_slice(&fs::read(format!("{stem}.meta.json"))?)?;
        InterventionalDataset::from_csv(&fs::read(csv_path)?, &meta)
    }
}
