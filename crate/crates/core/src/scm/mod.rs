//! Structural causal models.
//!
//! Two families are supported: [`LinearScm`] (linear mechanisms with additive
//! noise) and [`CptModel`] (finite domains with conditional probability
//! tables). Interventions are graph surgery: edges into the intervened nodes
//! are removed and those nodes become constants, every other mechanism is
//! carried over untouched.
//!
//! Sampling uses `ChaCha8Rng::seed_from_u64(seed)`. Linear noise is drawn
//! from `rand_distr::Normal`; categorical values by inverse-CDF on a single
//! `f64` uniform per node. Rows are drawn one at a time, nodes within a row in
//! topological order, so a dataset is a pure function of `(model, n, seed)`.

mod discrete;
mod linear;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{GraphError, NodeId};

pub use discrete::{CptModel, NodeTable};
pub use linear::{fit_linear, LinearScm, Noise};

/// Node (or noise-term) values for the linear family.
pub type RealAssignment = BTreeMap<NodeId, f64>;
/// Node values for the discrete family, as category labels.
pub type CategoryAssignment = BTreeMap<NodeId, String>;
/// Forced values keyed by node.
pub type InterventionSet<V> = BTreeMap<NodeId, V>;

/// Tolerance on CPT row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScmError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("no value for noise term `{0}`")]
    MissingNoise(String),
    #[error("no value for node `{0}`")]
    MissingValue(String),
    #[error("edge `{0}` -> `{1}` has no coefficient")]
    MissingCoefficient(String, String),
    #[error("coefficient given for `{0}` -> `{1}`, which is not an edge")]
    StrayCoefficient(String, String),
    #[error("non-finite value for `{0}`")]
    NonFinite(String),
    #[error("invalid noise parameters for `{node}`: mean {mean}, sd {sd}")]
    InvalidNoise { node: String, mean: f64, sd: f64 },
    #[error("no table for node `{0}`")]
    MissingTable(String),
    #[error("table for `{node}` lists parents {listed:?}, graph has {actual:?}")]
    ParentMismatch {
        node: String,
        listed: Vec<String>,
        actual: Vec<String>,
    },
    #[error("domain of `{0}` is empty or has repeated labels")]
    BadDomain(String),
    #[error("table for `{node}` has {got} rows, expected {expected}")]
    RowCount {
        node: String,
        expected: usize,
        got: usize,
    },
    #[error("row {row} of `{node}` has {got} entries, expected {expected}")]
    RowWidth {
        node: String,
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row} of `{node}` sums to {sum}, not 1")]
    RowSum { node: String, row: usize, sum: f64 },
    #[error("row {row} of `{node}` has an entry outside [0, 1]")]
    InvalidProbability { node: String, row: usize },
    #[error("value `{value}` is outside the domain of `{node}`")]
    OutsideDomain { node: String, value: String },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("{rows} rows is too few; need at least {needed}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("design matrix for `{0}` is rank deficient")]
    RankDeficient(String),
    #[error("unit-level counterfactuals are not defined for conditional-probability-table models")]
    DiscreteCounterfactual,
}

/// Graph surgery shared by both model families.
pub trait Intervene: Sized {
    type Value;

    /// Returns the mutilated model for `do(assignments)`.
    fn intervene(&self, assignments: &InterventionSet<Self::Value>) -> Result<Self, ScmError>;
}
