//! Path blocking, d-separation and the back-door criterion.
//!
//! [`d_separated`] uses the linear-time reachability ("Bayes ball") traversal.
//! Path enumeration is kept for [`path_blocked`] / [`backdoor_paths`] and as a
//! test oracle on small graphs.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use crate::graph::{Dag, Direction, GraphError, NodeId, Path};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeparationError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("sets must be pairwise disjoint; `{0}` appears twice")]
    Overlap(String),
    #[error("{0} set must be non-empty")]
    EmptySet(&'static str),
    #[error("adjustment set {adjustment:?} fails the back-door criterion for {treatments:?} -> {outcome}")]
    AdjustmentRejected {
        treatments: Vec<String>,
        outcome: String,
        adjustment: Vec<String>,
    },
}

pub type NodeSet = BTreeSet<NodeId>;

/// Whether `z` blocks `p`.
///
/// An interior node blocks when it is a collider with neither itself nor a
/// descendant in `z`, or when it is in `z` and is not a collider.
pub fn path_blocked(g: &Dag, p: &Path, z: &NodeSet) -> Result<bool, SeparationError> {
    p.validate(g)?;
    let nodes = p.nodes();
    for end in [&nodes[0], &nodes[nodes.len() - 1]] {
        if z.contains(end) {
            return Err(SeparationError::Overlap(end.to_string()));
        }
    }
    let zi = indices(g, z)?;
    let z_anc = g.ancestors_mask(&zi);
    for pos in 1..nodes.len() - 1 {
        let v = g.require(nodes[pos].as_str())?;
        let in_z = zi.contains(&v);
        if p.is_collider_at(pos) {
            // z_anc[v] <=> v or one of its descendants is in z
            if !z_anc[v] {
                return Ok(true);
            }
        } else if in_z {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether `z` d-separates `x` from `y` in `g`.
pub fn d_separated(
    g: &Dag,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
) -> Result<bool, SeparationError> {
    if x.is_empty() {
        return Err(SeparationError::EmptySet("x"));
    }
    if y.is_empty() {
        return Err(SeparationError::EmptySet("y"));
    }
    disjoint(&[x, y, z])?;
    let xi = indices(g, x)?;
    let yi = indices(g, y)?;
    let zi = indices(g, z)?;
    let reach = reachable(g, &xi, &zi);
    Ok(yi.iter().all(|&v| !reach[v]))
}

/// Nodes reachable from `x` along active trails given `z`.
pub(crate) fn reachable(g: &Dag, x: &[usize], z: &[usize]) -> Vec<bool> {
    let n = g.len();
    let mut in_z = vec![false; n];
    for &v in z {
        in_z[v] = true;
    }
    let z_anc = g.ancestors_mask(z);
    // visited[v][0]: arrived from a child (moving up); [1]: from a parent (moving down)
    let mut visited = vec![[false; 2]; n];
    let mut reach = vec![false; n];
    let mut queue: VecDeque<(usize, bool)> = x.iter().map(|&v| (v, true)).collect();
    while let Some((v, up)) = queue.pop_front() {
        let slot = if up { 0 } else { 1 };
        if visited[v][slot] {
            continue;
        }
        visited[v][slot] = true;
        if !in_z[v] {
            reach[v] = true;
        }
        if up {
            if !in_z[v] {
                queue.extend(g.parents_idx(v).iter().map(|&p| (p, true)));
                queue.extend(g.children_idx(v).iter().map(|&c| (c, false)));
            }
        } else {
            if !in_z[v] {
                queue.extend(g.children_idx(v).iter().map(|&c| (c, false)));
            }
            if z_anc[v] {
                queue.extend(g.parents_idx(v).iter().map(|&p| (p, true)));
            }
        }
    }
    reach
}

/// Undirected paths from `t` to `y` whose first step enters `t`.
pub fn backdoor_paths(g: &Dag, t: &str, y: &str) -> Result<Vec<Path>, SeparationError> {
    Ok(g.undirected_paths(t, y)?
        .into_iter()
        .filter(|p| p.steps()[0] == Direction::Backward)
        .collect())
}

/// Back-door criterion for a treatment set `t`, outcome `y` and adjustment set `w`.
///
/// Holds iff no node of `w` descends from a treatment, and `w` blocks every
/// back-door path from a treatment to `y` that does not pass through another
/// treatment. The second condition is evaluated as d-separation of `t` and
/// `y` given `w` after deleting the edges out of `t`.
pub fn check_backdoor(g: &Dag, t: &NodeSet, y: &str, w: &NodeSet) -> Result<bool, SeparationError> {
    if t.is_empty() {
        return Err(SeparationError::EmptySet("treatment"));
    }
    let yset: NodeSet = [NodeId::from(y)].into();
    disjoint(&[t, &yset, w])?;
    let ti = indices(g, t)?;
    let yi = g.require(y)?;
    let wi = indices(g, w)?;
    Ok(backdoor_holds(g, &ti, yi, &wi))
}

pub(crate) fn backdoor_holds(g: &Dag, t: &[usize], y: usize, w: &[usize]) -> bool {
    let desc = g.descendants_mask(t);
    if w.iter().any(|&v| desc[v]) {
        return false;
    }
    let cut = g.without_outgoing(&t.iter().copied().collect());
    !reachable(&cut, t, w)[y]
}

/// Union of the treatments' parents, minus the treatments, verified with
/// [`check_backdoor`].
pub fn default_adjustment_set(g: &Dag, t: &NodeSet, y: &str) -> Result<NodeSet, SeparationError> {
    let ti = indices(g, t)?;
    let yi = g.require(y)?;
    let w = parents_adjustment(g, &ti);
    if w.contains(&yi) || !backdoor_holds(g, &ti, yi, &w) {
        return Err(SeparationError::AdjustmentRejected {
            treatments: t.iter().map(|n| n.to_string()).collect(),
            outcome: y.to_owned(),
            adjustment: w.iter().map(|&i| g.label(i).to_string()).collect(),
        });
    }
    Ok(g.sorted_labels(w))
}

pub(crate) fn parents_adjustment(g: &Dag, t: &[usize]) -> Vec<usize> {
    let mut w: Vec<usize> = t
        .iter()
        .flat_map(|&v| g.parents_idx(v).iter().copied())
        .filter(|v| !t.contains(v))
        .collect();
    w.sort_by(|&a, &b| g.label(a).cmp(g.label(b)));
    w.dedup();
    w
}

fn indices(g: &Dag, s: &NodeSet) -> Result<Vec<usize>, SeparationError> {
    Ok(s.iter()
        .map(|v| g.require(v.as_str()))
        .collect::<Result<_, _>>()?)
}

fn disjoint(sets: &[&NodeSet]) -> Result<(), SeparationError> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if let Some(v) = a.intersection(b).next() {
                return Err(SeparationError::Overlap(v.to_string()));
            }
        }
    }
    Ok(())
}
