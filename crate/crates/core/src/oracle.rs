//! Exact enumeration referee.
//!
//! Everything here works on the full joint table of a [`CptModel`]; there is no
//! approximation, and models whose state space exceeds the cap are refused.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::NodeId;
use crate::scm::{CptModel, Intervene, InterventionSet, ScmError};

/// Default limit on the number of joint states.
pub const DEFAULT_STATE_CAP: u128 = 1 << 20;
/// Joints larger than this are summed with compensation.
const COMPENSATE_ABOVE: usize = 1 << 16;
/// Tolerance of [`ci_test_exact`].
pub const CI_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("joint has {0} states, above the cap of {1}")]
    StateSpaceTooLarge(u128, u128),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error("node `{0}` is not covered by the joint")]
    UnknownNode(String),
    #[error("sets must be disjoint; `{0}` appears twice")]
    Overlap(String),
}

/// Full joint distribution. States are ordered row-major over `nodes`
/// (last node fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    nodes: Vec<NodeId>,
    domains: Vec<Vec<String>>,
    probs: Vec<f64>,
}

impl Joint {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn domains(&self) -> &[Vec<String>] {
        &self.domains
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        sum(&self.probs)
    }

    pub fn index_of(&self, v: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.as_str() == v)
    }

    fn require(&self, v: &str) -> Result<usize, OracleError> {
        self.index_of(v)
            .ok_or_else(|| OracleError::UnknownNode(v.to_owned()))
    }

    /// Value indices of state `k`.
    pub fn state(&self, mut k: usize) -> Vec<usize> {
        let mut x = vec![0; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let c = self.domains[i].len();
            x[i] = k % c;
            k /= c;
        }
        x
    }

    /// Marginal table over `vars` (node positions), row-major with the first
    /// variable slowest.
    pub fn marginal(&self, vars: &[usize]) -> Vec<f64> {
        let size: usize = vars.iter().map(|&v| self.domains[v].len()).product();
        let mut acc = vec![0.0; size];
        let mut comp = vec![0.0; size];
        let compensate = self.probs.len() > COMPENSATE_ABOVE;
        let mut x = vec![0usize; self.nodes.len()];
        for &p in &self.probs {
            let idx = vars
                .iter()
                .fold(0, |a, &v| a * self.domains[v].len() + x[v]);
            if compensate {
                neumaier_add(&mut acc[idx], &mut comp[idx], p);
            } else {
                acc[idx] += p;
            }
            advance(&mut x, &self.domains);
        }
        if compensate {
            for (a, c) in acc.iter_mut().zip(&comp) {
                *a += c;
            }
        }
        acc
    }

    /// Marginal distribution of a single node.
    pub fn distribution(&self, v: &str) -> Result<Distribution, OracleError> {
        let i = self.require(v)?;
        Ok(Distribution {
            node: self.nodes[i].clone(),
            values: self.domains[i].clone(),
            probs: self.marginal(&[i]),
        })
    }
}

/// Distribution over one node's domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub node: NodeId,
    pub values: Vec<String>,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn get(&self, value: &str) -> Option<f64> {
        self.values
            .iter()
            .position(|v| v == value)
            .map(|k| self.probs[k])
    }

    /// Total variation distance; `None` if the supports differ.
    pub fn total_variation(&self, other: &Distribution) -> Option<f64> {
        if self.values != other.values {
            return None;
        }
        Some(
            0.5 * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>(),
        )
    }

    /// Expectation with the domain labels read as numbers.
    pub fn expectation(&self) -> Option<f64> {
        let mut e = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            e += v.trim().parse::<f64>().ok()? * p;
        }
        Some(e)
    }

    pub fn as_map(&self) -> BTreeMap<String, f64> {
        self.values
            .iter()
            .cloned()
            .zip(self.probs.iter().copied())
            .collect()
    }
}

pub fn enumerate_joint(m: &CptModel) -> Result<Joint, OracleError> {
    enumerate_joint_capped(m, DEFAULT_STATE_CAP)
}

/// Every full assignment with its probability, the product of CPT entries.
pub fn enumerate_joint_capped(m: &CptModel, cap: u128) -> Result<Joint, OracleError> {
    let cards = m.cardinalities();
    let states = cards.iter().map(|&c| c as u128).product::<u128>();
    if states > cap {
        return Err(OracleError::StateSpaceTooLarge(states, cap));
    }
    let domains: Vec<Vec<String>> = m.tables().map(|(_, t)| t.domain.clone()).collect();
    let n = cards.len();
    let mut probs = Vec::with_capacity(states as usize);
    let mut x = vec![0usize; n];
    for _ in 0..states {
        probs.push((0..n).map(|i| m.local_probability(i, &x)).product());
        advance(&mut x, &domains);
    }
    Ok(Joint {
        nodes: m.graph().nodes().to_vec(),
        domains,
        probs,
    })
}

/// Ground truth `P(target | do(assignments))` by enumerating the mutilated model.
pub fn interventional_oracle(
    m: &CptModel,
    assignments: &InterventionSet<String>,
    target: &str,
) -> Result<Distribution, OracleError> {
    let cut = m.intervene(assignments)?;
    enumerate_joint(&cut)?.distribution(target)
}

/// Exact conditional independence `x ⊥ y | z` in `joint`, to [`CI_TOL`].
///
/// Strata of `z` with zero mass are skipped.
pub fn ci_test_exact(
    joint: &Joint,
    x: &BTreeSet<NodeId>,
    y: &BTreeSet<NodeId>,
    z: &BTreeSet<NodeId>,
) -> Result<bool, OracleError> {
    for (a, b) in [(x, y), (x, z), (y, z)] {
        if let Some(v) = a.intersection(b).next() {
            return Err(OracleError::Overlap(v.to_string()));
        }
    }
    let pos = |s: &BTreeSet<NodeId>| -> Result<Vec<usize>, OracleError> {
        s.iter().map(|v| joint.require(v.as_str())).collect()
    };
    let (xi, yi, zi) = (pos(x)?, pos(y)?, pos(z)?);
    let card = |vs: &[usize]| -> usize { vs.iter().map(|&v| joint.domains[v].len()).product() };
    let (nx, ny, nz) = (card(&xi), card(&yi), card(&zi));
    // Layout of the marginal: z slowest, then x, then y.
    let vars: Vec<usize> = zi.iter().chain(&xi).chain(&yi).copied().collect();
    let table = joint.marginal(&vars);
    for kz in 0..nz {
        let block = &table[kz * nx * ny..(kz + 1) * nx * ny];
        let pz: f64 = block.iter().sum();
        if pz <= 0.0 {
            log::debug!("skipping zero-mass stratum {kz} of {z:?}");
            continue;
        }
        for kx in 0..nx {
            let px: f64 = block[kx * ny..(kx + 1) * ny].iter().sum::<f64>() / pz;
            for ky in 0..ny {
                let py: f64 = (0..nx).map(|j| block[j * ny + ky]).sum::<f64>() / pz;
                let pxy = block[kx * ny + ky] / pz;
                if (pxy - px * py).abs() > CI_TOL {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn advance(x: &mut [usize], domains: &[Vec<String>]) {
    for i in (0..x.len()).rev() {
        x[i] += 1;
        if x[i] < domains[i].len() {
            return;
        }
        x[i] = 0;
    }
}

fn neumaier_add(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

fn sum(xs: &[f64]) -> f64 {
    if xs.len() <= COMPENSATE_ABOVE {
        return xs.iter().sum();
    }
    let (mut s, mut c) = (0.0, 0.0);
    for &v in xs {
        neumaier_add(&mut s, &mut c, v);
    }
    s + c
}
