use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CategoryAssignment, Intervene, InterventionSet, ScmError, ROW_SUM_TOL};
use crate::graph::{Dag, NodeId};

/// Conditional probability table of one node.
///
/// `rows[r][k]` is `P(node = domain[k] | parents = combo_r)`, where the parent
/// combinations are enumerated in row-major order over `parents` (first parent
/// slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTable {
    pub domain: Vec<String>,
    pub parents: Vec<NodeId>,
    pub rows: Vec<Vec<f64>>,
}

/// Finite-domain Bayesian network.
#[derive(Debug, Clone, PartialEq)]
pub struct CptModel {
    graph: Dag,
    tables: Vec<NodeTable>,
    parent_idx: Vec<Vec<usize>>,
}

impl CptModel {
    /// Builds a model whose edges are read off each table's parent list, in
    /// the order the tables are given.
    pub fn from_tables(tables: Vec<(NodeId, NodeTable)>) -> Result<Self, ScmError> {
        let nodes: Vec<NodeId> = tables.iter().map(|(n, _)| n.clone()).collect();
        let edges: Vec<(NodeId, NodeId)> = tables
            .iter()
            .flat_map(|(n, t)| t.parents.iter().map(move |p| (p.clone(), n.clone())))
            .collect();
        let graph = Dag::new(nodes, edges.iter())?;
        CptModel::new(graph, tables.into_iter().collect())
    }

    pub fn new(graph: Dag, mut tables: BTreeMap<NodeId, NodeTable>) -> Result<Self, ScmError> {
        for k in tables.keys() {
            if !graph.contains(k.as_str()) {
                return Err(ScmError::UnknownNode(k.to_string()));
            }
        }
        let mut ordered = Vec::with_capacity(graph.len());
        for v in graph.nodes() {
            ordered.push(
                tables
                    .remove(v)
                    .ok_or_else(|| ScmError::MissingTable(v.to_string()))?,
            );
        }
        let mut parent_idx = Vec::with_capacity(graph.len());
        for (i, t) in ordered.iter().enumerate() {
            let v = graph.label(i);
            let listed: BTreeSet<&NodeId> = t.parents.iter().collect();
            let actual: BTreeSet<&NodeId> = graph
                .parents_idx(i)
                .iter()
                .map(|&p| graph.label(p))
                .collect();
            if listed != actual || listed.len() != t.parents.len() {
                return Err(ScmError::ParentMismatch {
                    node: v.to_string(),
                    listed: t.parents.iter().map(|p| p.to_string()).collect(),
                    actual: actual.iter().map(|p| p.to_string()).collect(),
                });
            }
            let uniq: BTreeSet<&String> = t.domain.iter().collect();
            if t.domain.is_empty() || uniq.len() != t.domain.len() {
                return Err(ScmError::BadDomain(v.to_string()));
            }
            parent_idx.push(
                t.parents
                    .iter()
                    .map(|p| graph.index_of(p.as_str()).expect("checked"))
                    .collect::<Vec<_>>(),
            );
        }
        for (i, t) in ordered.iter().enumerate() {
            let v = graph.label(i).to_string();
            let expected: usize = parent_idx[i]
                .iter()
                .map(|&p| ordered[p].domain.len())
                .product();
            if t.rows.len() != expected {
                return Err(ScmError::RowCount {
                    node: v,
                    expected,
                    got: t.rows.len(),
                });
            }
            for (r, row) in t.rows.iter().enumerate() {
                if row.len() != t.domain.len() {
                    return Err(ScmError::RowWidth {
                        node: v,
                        row: r,
                        expected: t.domain.len(),
                        got: row.len(),
                    });
                }
                if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                    return Err(ScmError::InvalidProbability { node: v, row: r });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(ScmError::RowSum {
                        node: v,
                        row: r,
                        sum,
                    });
                }
            }
        }
        Ok(CptModel {
            graph,
            tables: ordered,
            parent_idx,
        })
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn table(&self, v: &str) -> Option<&NodeTable> {
        self.graph.index_of(v).map(|i| &self.tables[i])
    }

    pub fn tables(&self) -> impl Iterator<Item = (&NodeId, &NodeTable)> {
        self.graph.nodes().iter().zip(&self.tables)
    }

    pub fn domain(&self, v: &str) -> Option<&[String]> {
        self.table(v).map(|t| t.domain.as_slice())
    }

    /// Domain sizes in node order.
    pub fn cardinalities(&self) -> Vec<usize> {
        self.tables.iter().map(|t| t.domain.len()).collect()
    }

    pub fn value_index(&self, v: &str, value: &str) -> Result<usize, ScmError> {
        let t = self
            .table(v)
            .ok_or_else(|| ScmError::UnknownNode(v.to_owned()))?;
        t.domain
            .iter()
            .position(|d| d == value)
            .ok_or_else(|| ScmError::OutsideDomain {
                node: v.to_owned(),
                value: value.to_owned(),
            })
    }

    /// `P(node i = x[i] | parents as in x)` for a full assignment of value indices.
    pub fn local_probability(&self, i: usize, x: &[usize]) -> f64 {
        self.tables[i].rows[self.row_index(i, x)][x[i]]
    }

    fn row_index(&self, i: usize, x: &[usize]) -> usize {
        self.parent_idx[i]
            .iter()
            .fold(0, |acc, &p| acc * self.tables[p].domain.len() + x[p])
    }

    /// Unit-level counterfactuals need an invertible mechanism, which a
    /// probability table does not provide.
    pub fn counterfactual(
        &self,
        _observed: &CategoryAssignment,
        _assignments: &InterventionSet<String>,
    ) -> Result<CategoryAssignment, ScmError> {
        Err(ScmError::DiscreteCounterfactual)
    }

    /// `n` independent rows as value indices in node order.
    pub fn simulate_indices(&self, n: usize, seed: u64) -> Result<Vec<Vec<usize>>, ScmError> {
        if n == 0 {
            return Err(ScmError::EmptySample);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut x = vec![0usize; self.graph.len()];
            for &i in self.graph.topo_idx() {
                let row = &self.tables[i].rows[self.row_index(i, &x)];
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = row.len() - 1;
                for (k, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                x[i] = pick;
            }
            rows.push(x);
        }
        Ok(rows)
    }

    pub fn simulate(&self, n: usize, seed: u64) -> Result<Vec<CategoryAssignment>, ScmError> {
        Ok(self
            .simulate_indices(n, seed)?
            .into_iter()
            .map(|x| {
                x.iter()
                    .enumerate()
                    .map(|(i, &k)| {
                        (
                            self.graph.label(i).clone(),
                            self.tables[i].domain[k].clone(),
                        )
                    })
                    .collect()
            })
            .collect())
    }
}

impl Intervene for CptModel {
    type Value = String;

    fn intervene(&self, assignments: &InterventionSet<String>) -> Result<Self, ScmError> {
        let mut targets = BTreeSet::new();
        let mut forced = BTreeMap::new();
        for (v, val) in assignments {
            let i = self
                .graph
                .index_of(v.as_str())
                .ok_or_else(|| ScmError::UnknownNode(v.to_string()))?;
            forced.insert(i, self.value_index(v.as_str(), val)?);
            targets.insert(i);
        }
        let graph = self.graph.without_incoming(&targets);
        let mut tables = self.tables.clone();
        let mut parent_idx = self.parent_idx.clone();
        for (&i, &k) in &forced {
            let t = &mut tables[i];
            let mut row = vec![0.0; t.domain.len()];
            row[k] = 1.0;
            t.parents.clear();
            t.rows = vec![row];
            parent_idx[i].clear();
        }
        Ok(CptModel {
            graph,
            tables,
            parent_idx,
        })
    }
}
