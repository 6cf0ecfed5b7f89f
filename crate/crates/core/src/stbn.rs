//! Lag templates unrolled into time-indexed DAGs.
//!
//! A template edge `(from, τ, to)` stands for `from@(t-τ) -> to@t` at every
//! timestamp `t` where both ends exist. Edges never point backward in time;
//! `τ = 0` edges must be acyclic among themselves.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dag, GraphError, NodeId};
use crate::identify::{evaluate_expression, fci, Identification, IdentifyError, QuerySpec};
use crate::oracle::Distribution;
use crate::scm::CptModel;

/// Variable added by [`augment_time_confounder`].
pub const CONFOUNDER: &str = "C";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StbnError {
    #[error("edge {from} -> {to} has lag {lag}; causes may not follow their effects")]
    NegativeLag { from: String, to: String, lag: i64 },
    #[error("max_lag must be non-negative, got {0}")]
    NegativeMaxLag(i64),
    #[error("edge {from} -> {to} has lag {lag} above max_lag {max_lag}")]
    LagAboveMax {
        from: String,
        to: String,
        lag: usize,
        max_lag: usize,
    },
    #[error("instantaneous edges form a cycle: {}", .0.join(" -> "))]
    InstantaneousCycle(Vec<String>),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` listed twice")]
    DuplicateVariable(String),
    #[error("edge ({from}, {lag}, {to}) listed twice")]
    DuplicateEdge {
        from: String,
        lag: usize,
        to: String,
    },
    #[error("horizon {horizon} is too short; need at least max_lag + 1 = {needed}")]
    HorizonTooSmall { horizon: usize, needed: usize },
    #[error("variable `{0}` already exists")]
    NameCollision(String),
    #[error("adjacency matrix must be square; row {row} has {len} entries for {n} rows")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("adjacency entry ({row}, {col}) is {value}; entries must be finite and non-negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("template is not first order with self edges on every variable")]
    NotFirstOrder,
    #[error("series needs at least two observations, got {0}")]
    SeriesTooShort(usize),
    #[error("observation {index} has {got} components, expected {expected}")]
    RaggedSeries {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("node `{var}@{time}` is outside the unrolled horizon")]
    OutsideHorizon { var: String, time: usize },
    #[error("model graph does not match the unrolled template")]
    GraphMismatch,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Identify(#[from] IdentifyError),
}

/// `from@(t-lag) -> to@t`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LaggedEdge {
    pub from: NodeId,
    pub lag: usize,
    pub to: NodeId,
}

/// Validated lag template; build one with [`validate_temporal`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StbnTemplate {
    variables: Vec<NodeId>,
    max_lag: usize,
    edges: BTreeSet<LaggedEdge>,
}

/// Unvalidated template as it appears in documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTemplate {
    pub variables: Vec<NodeId>,
    pub max_lag: i64,
    pub lagged_edges: Vec<(NodeId, i64, NodeId)>,
}

impl StbnTemplate {
    pub fn variables(&self) -> &[NodeId] {
        &self.variables
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn edges(&self) -> &BTreeSet<LaggedEdge> {
        &self.edges
    }

    pub fn to_raw(&self) -> RawTemplate {
        RawTemplate {
            variables: self.variables.clone(),
            max_lag: self.max_lag as i64,
            lagged_edges: self
                .edges
                .iter()
                .map(|e| (e.from.clone(), e.lag as i64, e.to.clone()))
                .collect(),
        }
    }

    /// Adjacency of a first-order template: `A[i][j] = 1` iff `X_j@(t-1) -> X_i@t`
    /// for `i != j`. The diagonal is zero.
    pub fn adjacency(&self) -> Result<Vec<Vec<f64>>, StbnError> {
        let n = self.variables.len();
        let pos: BTreeMap<&NodeId, usize> = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        let first_order = self.max_lag == 1
            && self.edges.iter().all(|e| e.lag == 1)
            && self.variables.iter().all(|v| {
                self.edges.contains(&LaggedEdge {
                    from: v.clone(),
                    lag: 1,
                    to: v.clone(),
                })
            });
        if !first_order {
            return Err(StbnError::NotFirstOrder);
        }
        let mut a = vec![vec![0.0; n]; n];
        for e in &self.edges {
            let (j, i) = (pos[&e.from], pos[&e.to]);
            if i != j {
                a[i][j] = 1.0;
            }
        }
        Ok(a)
    }
}

impl TryFrom<RawTemplate> for StbnTemplate {
    type Error = StbnError;

    fn try_from(raw: RawTemplate) -> Result<Self, StbnError> {
        validate_temporal(raw.variables, raw.max_lag, raw.lagged_edges)
    }
}

/// Checks the temporal ordering rules and returns the template.
pub fn validate_temporal(
    variables: Vec<NodeId>,
    max_lag: i64,
    lagged_edges: impl IntoIterator<Item = (NodeId, i64, NodeId)>,
) -> Result<StbnTemplate, StbnError> {
    if max_lag < 0 {
        return Err(StbnError::NegativeMaxLag(max_lag));
    }
    let max_lag = max_lag as usize;
    let mut seen = BTreeSet::new();
    for v in &variables {
        if !seen.insert(v) {
            return Err(StbnError::DuplicateVariable(v.to_string()));
        }
    }
    let mut edges = BTreeSet::new();
    for (from, lag, to) in lagged_edges {
        for v in [&from, &to] {
            if !seen.contains(v) {
                return Err(StbnError::UnknownVariable(v.to_string()));
            }
        }
        if lag < 0 {
            return Err(StbnError::NegativeLag {
                from: from.to_string(),
                to: to.to_string(),
                lag,
            });
        }
        let lag = lag as usize;
        if lag > max_lag {
            return Err(StbnError::LagAboveMax {
                from: from.to_string(),
                to: to.to_string(),
                lag,
                max_lag,
            });
        }
        let e = LaggedEdge { from, lag, to };
        if edges.contains(&e) {
            return Err(StbnError::DuplicateEdge {
                from: e.from.to_string(),
                lag,
                to: e.to.to_string(),
            });
        }
        edges.insert(e);
    }
    let instantaneous: Vec<(&NodeId, &NodeId)> = edges
        .iter()
        .filter(|e| e.lag == 0)
        .map(|e| (&e.from, &e.to))
        .collect();
    if let Some((v, _)) = instantaneous.iter().find(|(a, b)| a == b) {
        return Err(StbnError::InstantaneousCycle(vec![
            v.to_string(),
            v.to_string(),
        ]));
    }
    match Dag::new(variables.iter().cloned(), instantaneous) {
        Ok(_) => {}
        Err(GraphError::Cycle(c)) => return Err(StbnError::InstantaneousCycle(c)),
        Err(e) => return Err(e.into()),
    }
    Ok(StbnTemplate {
        variables,
        max_lag,
        edges,
    })
}

/// Composite node label `name@t`.
pub fn composite(var: &str, time: usize) -> NodeId {
    NodeId::new(format!("{var}@{time}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnrolledStbn {
    template: StbnTemplate,
    dag: Dag,
    horizon: usize,
}

impl UnrolledStbn {
    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn template(&self) -> &StbnTemplate {
        &self.template
    }

    /// Label of `var` at `time`, if both exist.
    pub fn node(&self, var: &str, time: usize) -> Result<NodeId, StbnError> {
        let id = composite(var, time);
        if time < self.horizon && self.dag.contains(id.as_str()) {
            Ok(id)
        } else if !self.template.variables.iter().any(|v| v.as_str() == var) {
            Err(StbnError::UnknownVariable(var.to_owned()))
        } else {
            Err(StbnError::OutsideHorizon {
                var: var.to_owned(),
                time,
            })
        }
    }
}

/// Instantiates the template at timestamps `0..horizon`.
pub fn unroll(tmpl: &StbnTemplate, horizon: usize) -> Result<UnrolledStbn, StbnError> {
    let needed = tmpl.max_lag + 1;
    if horizon < needed {
        return Err(StbnError::HorizonTooSmall { horizon, needed });
    }
    let mut nodes = Vec::with_capacity(horizon * tmpl.variables.len());
    for t in 0..horizon {
        for v in &tmpl.variables {
            nodes.push(composite(v.as_str(), t));
        }
    }
    let mut edges = Vec::new();
    for t in 0..horizon {
        for e in &tmpl.edges {
            if e.lag <= t {
                edges.push((
                    composite(e.from.as_str(), t - e.lag),
                    composite(e.to.as_str(), t),
                ));
            }
        }
    }
    let dag = Dag::new(nodes, edges.iter())?;
    Ok(UnrolledStbn {
        template: tmpl.clone(),
        dag,
        horizon,
    })
}

/// `P(target | do(schedule))` on a model over the unrolled graph.
pub fn stbn_query(
    unrolled: &UnrolledStbn,
    cpts: &CptModel,
    target: (&str, usize),
    schedule: &BTreeMap<(NodeId, usize), String>,
) -> Result<(Identification, Distribution), StbnError> {
    if cpts.graph() != unrolled.dag() {
        return Err(StbnError::GraphMismatch);
    }
    let target = unrolled.node(target.0, target.1)?;
    let mut values = BTreeMap::new();
    for ((v, t), val) in schedule {
        values.insert(unrolled.node(v.as_str(), *t)?, val.clone());
    }
    let q = QuerySpec::with_values(target, values.clone());
    let id = fci(unrolled.dag(), &q)?;
    let d = evaluate_expression(&id.expression, cpts, &values)?;
    Ok((id, d))
}

/// First-order template from a non-negative adjacency matrix: a self edge on
/// every variable and `X_j@(t-1) -> X_i@t` whenever `A[i][j] > 0`.
///
/// Diagonal entries are absorbed into the self edge.
pub fn from_dynamics(adjacency: &[Vec<f64>]) -> Result<StbnTemplate, StbnError> {
    let n = adjacency.len();
    for (i, row) in adjacency.iter().enumerate() {
        if row.len() != n {
            return Err(StbnError::NotSquare {
                row: i,
                len: row.len(),
                n,
            });
        }
        for (j, &a) in row.iter().enumerate() {
            if !a.is_finite() || a < 0.0 {
                return Err(StbnError::NegativeEntry {
                    row: i,
                    col: j,
                    value: a,
                });
            }
        }
    }
    let names: Vec<NodeId> = (1..=n).map(|i| NodeId::new(format!("X{i}"))).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((names[i].clone(), 1, names[i].clone()));
        for j in 0..n {
            if i != j && adjacency[i][j] > 0.0 {
                edges.push((names[j].clone(), 1, names[i].clone()));
            }
        }
    }
    validate_temporal(names, 1, edges)
}

/// First differences `series[s+1] - series[s]`.
pub fn difference_series(series: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, StbnError> {
    if series.len() < 2 {
        return Err(StbnError::SeriesTooShort(series.len()));
    }
    let width = series[0].len();
    if let Some((index, s)) = series.iter().enumerate().find(|(_, s)| s.len() != width) {
        return Err(StbnError::RaggedSeries {
            index,
            expected: width,
            got: s.len(),
        });
    }
    Ok(series
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
        .collect())
}

/// Adds an observed confounder `C` with `C@(t-1) -> C@t` and
/// `C@t -> v@t` for every affected `v`.
pub fn augment_time_confounder(
    tmpl: &StbnTemplate,
    affected: &BTreeSet<NodeId>,
) -> Result<StbnTemplate, StbnError> {
    let c = NodeId::from(CONFOUNDER);
    if tmpl.variables.contains(&c) {
        return Err(StbnError::NameCollision(CONFOUNDER.to_owned()));
    }
    let mut raw = tmpl.to_raw();
    raw.variables.push(c.clone());
    raw.max_lag = raw.max_lag.max(1);
    raw.lagged_edges.push((c.clone(), 1, c.clone()));
    for v in affected {
        raw.lagged_edges.push((c.clone(), 0, v.clone()));
    }
    raw.try_into()
}
