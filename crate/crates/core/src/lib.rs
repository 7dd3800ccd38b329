//! Discovery and causal-effect estimation for confounded additive noise models.

pub mod discovery;
pub mod error;
pub mod estimation;
pub mod fixtures;
pub mod graph;
pub mod harness;
pub mod independence;
pub mod scm;
pub mod seeds;
pub mod setsys;

pub use discovery::{DiscoveryConfig, DiscoveryResult, SufficiencyReport};
pub use error::{Error, Result};
pub use estimation::{AceQuery, EstimatedModel, FitConfig, Regressor};
pub use graph::{Admg, Dag, NodeSet};
pub use harness::{ExperimentConfig, ExperimentKind, Table};
pub use scm::{ConfoundedAnm, InterventionSampler, InterventionalDataset, McEstimate, NoiseSpec, StructuralFunction, ValuePolicy};
pub use setsys::SeparatingSetSystem;
