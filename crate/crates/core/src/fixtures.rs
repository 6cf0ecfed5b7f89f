//! Reference models and seeded random generators.
//!
//! The worked models are small enough to check by hand; the generators feed
//! the property and acceptance suites.

use std::collections::BTreeMap;

use rand::Rng;

use crate::graph::{Dag, NodeId};
use crate::scm::{CptModel, LinearScm, NodeTable, Noise};

/// Lower bound of random CPT entries; the upper bound is `1 - CPT_FLOOR`.
pub const CPT_FLOOR: f64 = 0.05;

/// `X1 -> X2 -> X3`, `X1 -> X3`.
pub fn triangle_dag() -> Dag {
    Dag::new(
        ["X1", "X2", "X3"],
        [("X1", "X2"), ("X1", "X3"), ("X2", "X3")],
    )
    .expect("acyclic")
}

/// Linear model on [`triangle_dag`] with coefficients 0.5 (X1→X2), 0.7 (X1→X3)
/// and 0.4 (X2→X3), zero intercepts and noise terms U1..U3.
pub fn triangle_scm() -> LinearScm {
    let coeff = BTreeMap::from([
        (("X1".into(), "X2".into()), 0.5),
        (("X1".into(), "X3".into()), 0.7),
        (("X2".into(), "X3".into()), 0.4),
    ]);
    let noise = (1..=3)
        .map(|i| {
            (
                NodeId::from(format!("X{i}")),
                Noise::standard(format!("U{i}")),
            )
        })
        .collect();
    LinearScm::new(triangle_dag(), coeff, noise).expect("valid model")
}

/// Confounded treatment: `X -> T`, `X -> Y`, `T -> Y`.
pub fn confounded_dag() -> Dag {
    Dag::new(["X", "T", "Y"], [("X", "T"), ("X", "Y"), ("T", "Y")]).expect("acyclic")
}

fn binary(parents: &[&str], rows: Vec<Vec<f64>>) -> NodeTable {
    NodeTable {
        domain: vec!["0".into(), "1".into()],
        parents: parents.iter().map(|s| NodeId::from(*s)).collect(),
        rows,
    }
}

/// Binary model on [`confounded_dag`]: `P(X=1) = 0.4`, `P(T=1|X) = (0.3, 0.8)`,
/// `P(Y=1|X,T) = (0.1, 0.5, 0.3, 0.7)` over `(x,t) = 00, 01, 10, 11`.
pub fn confounded_cpt() -> CptModel {
    CptModel::from_tables(vec![
        ("X".into(), binary(&[], vec![vec![0.6, 0.4]])),
        (
            "T".into(),
            binary(&["X"], vec![vec![0.7, 0.3], vec![0.2, 0.8]]),
        ),
        (
            "Y".into(),
            binary(
                &["X", "T"],
                vec![
                    vec![0.9, 0.1],
                    vec![0.5, 0.5],
                    vec![0.7, 0.3],
                    vec![0.3, 0.7],
                ],
            ),
        ),
    ])
    .expect("valid model")
}

/// Collider `A -> C <- B`.
pub fn collider_dag() -> Dag {
    Dag::new(["A", "B", "C"], [("A", "C"), ("B", "C")]).expect("acyclic")
}

/// Random DAG on nodes `V0..V{n-1}`; each forward pair `i < j` gets an edge
/// with probability `p`, after shuffling node positions.
pub fn random_dag<R: Rng>(n: usize, p: f64, rng: &mut R) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let labels: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((labels[order[a]].clone(), labels[order[b]].clone()));
            }
        }
    }
    Dag::new(labels, edges).expect("forward edges are acyclic")
}

/// Binary CPTs on `g` with every `P(node = 1 | parents)` drawn uniformly
/// from `[CPT_FLOOR, 1 - CPT_FLOOR]`.
pub fn random_binary_cpt<R: Rng>(g: &Dag, rng: &mut R) -> CptModel {
    let tables = g
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let parents: Vec<NodeId> = g
                .parents_idx(i)
                .iter()
                .map(|&p| g.label(p).clone())
                .collect();
            let rows = (0..1usize << parents.len())
                .map(|_| {
                    let p1 = rng.random_range(CPT_FLOOR..=1.0 - CPT_FLOOR);
                    vec![1.0 - p1, p1]
                })
                .collect();
            (
                v.clone(),
                NodeTable {
                    domain: vec!["0".into(), "1".into()],
                    parents,
                    rows,
                },
            )
        })
        .collect();
    CptModel::new(g.clone(), tables).expect("valid random model")
}
