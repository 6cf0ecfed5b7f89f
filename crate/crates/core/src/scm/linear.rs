use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Intervene, InterventionSet, RealAssignment, ScmError};
use crate::graph::{Dag, NodeId};
use crate::ols::{ols, OlsError};

/// Exogenous term attached to one node.
///
/// `mean` doubles as the node's intercept; `sd` is only used by
/// [`LinearScm::simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub name: NodeId,
    pub mean: f64,
    pub sd: f64,
}

impl Noise {
    pub fn standard(name: impl Into<NodeId>) -> Self {
        Noise {
            name: name.into(),
            mean: 0.0,
            sd: 1.0,
        }
    }
}

/// Linear additive-noise SCM: `x_i = sum_j coeff(j -> i) * x_j + u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScm {
    graph: Dag,
    coeff: BTreeMap<(NodeId, NodeId), f64>,
    noise: BTreeMap<NodeId, Noise>,
    fixed: BTreeMap<NodeId, f64>,
}

impl LinearScm {
    /// Builds a model. Nodes missing from `noise` get a standard normal term
    /// named `U_<node>`.
    pub fn new(
        graph: Dag,
        coeff: BTreeMap<(NodeId, NodeId), f64>,
        mut noise: BTreeMap<NodeId, Noise>,
    ) -> Result<Self, ScmError> {
        for (from, to) in graph.edges() {
            match coeff.get(&(from.clone(), to.clone())) {
                None => {
                    return Err(ScmError::MissingCoefficient(
                        from.to_string(),
                        to.to_string(),
                    ))
                }
                Some(c) if !c.is_finite() => {
                    return Err(ScmError::NonFinite(format!("{from}->{to}")))
                }
                _ => {}
            }
        }
        for (from, to) in coeff.keys() {
            if !graph.has_edge(from.as_str(), to.as_str()) {
                return Err(ScmError::StrayCoefficient(from.to_string(), to.to_string()));
            }
        }
        for k in noise.keys() {
            if !graph.contains(k.as_str()) {
                return Err(ScmError::UnknownNode(k.to_string()));
            }
        }
        for v in graph.nodes() {
            let n = noise
                .entry(v.clone())
                .or_insert_with(|| Noise::standard(format!("U_{v}")));
            if !n.mean.is_finite() || !n.sd.is_finite() || n.sd < 0.0 {
                return Err(ScmError::InvalidNoise {
                    node: v.to_string(),
                    mean: n.mean,
                    sd: n.sd,
                });
            }
        }
        Ok(LinearScm {
            graph,
            coeff,
            noise,
            fixed: BTreeMap::new(),
        })
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn coefficients(&self) -> &BTreeMap<(NodeId, NodeId), f64> {
        &self.coeff
    }

    pub fn coefficient(&self, from: &str, to: &str) -> Option<f64> {
        self.coeff.get(&(from.into(), to.into())).copied()
    }

    pub fn noise(&self) -> &BTreeMap<NodeId, Noise> {
        &self.noise
    }

    /// Nodes held constant by an intervention.
    pub fn fixed(&self) -> &BTreeMap<NodeId, f64> {
        &self.fixed
    }

    /// Incoming coefficients of `v` in parent order.
    pub fn mechanism(&self, v: &str) -> Vec<(NodeId, f64)> {
        let Some(i) = self.graph.index_of(v) else {
            return Vec::new();
        };
        self.graph
            .parents_idx(i)
            .iter()
            .map(|&p| {
                let pl = self.graph.label(p).clone();
                let c = self.coeff[&(pl.clone(), v.into())];
                (pl, c)
            })
            .collect()
    }

    fn structural(&self, i: usize, x: &[f64]) -> f64 {
        let v = self.graph.label(i);
        self.graph
            .parents_idx(i)
            .iter()
            .map(|&p| self.coeff[&(self.graph.label(p).clone(), v.clone())] * x[p])
            .sum()
    }

    /// Computes every node from the exogenous values, keyed by noise name.
    pub fn evaluate(&self, u: &RealAssignment) -> Result<RealAssignment, ScmError> {
        let mut x = vec![0.0; self.graph.len()];
        for &i in self.graph.topo_idx() {
            let v = self.graph.label(i);
            x[i] = match self.fixed.get(v) {
                Some(&c) => c,
                None => {
                    let name = &self.noise[v].name;
                    let ui = *u
                        .get(name)
                        .ok_or_else(|| ScmError::MissingNoise(name.to_string()))?;
                    self.structural(i, &x) + ui
                }
            };
        }
        Ok(self.collect(&x))
    }

    /// Recovers the exogenous values that reproduce a full observation.
    pub fn abduct(&self, x: &RealAssignment) -> Result<RealAssignment, ScmError> {
        let xs = self.dense(x)?;
        Ok(self
            .graph
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, v)| (self.noise[v].name.clone(), xs[i] - self.structural(i, &xs)))
            .collect())
    }

    /// Abduction, action, prediction.
    ///
    /// A node whose inputs all keep their observed values keeps its own
    /// observed value bit for bit, rather than the rounded `s + (x - s)`.
    pub fn counterfactual(
        &self,
        observed: &RealAssignment,
        assignments: &InterventionSet<f64>,
    ) -> Result<RealAssignment, ScmError> {
        let u = self.abduct(observed)?;
        let seen = self.dense(observed)?;
        let m = self.intervene(assignments)?;
        let mut x = vec![0.0; m.graph.len()];
        let mut moved = vec![false; m.graph.len()];
        for &i in m.graph.topo_idx() {
            let v = m.graph.label(i);
            x[i] = match m.fixed.get(v) {
                Some(&c) => c,
                None if m.graph.parents_idx(i).iter().any(|&p| moved[p]) => {
                    m.structural(i, &x) + u[&m.noise[v].name]
                }
                None => seen[i],
            };
            moved[i] = x[i].to_bits() != seen[i].to_bits();
        }
        Ok(m.collect(&x))
    }

    /// Expected values under `do(assignments)`: evaluation at the noise means.
    pub fn interventional_mean(
        &self,
        assignments: &InterventionSet<f64>,
    ) -> Result<RealAssignment, ScmError> {
        let m = self.intervene(assignments)?;
        let u = m.noise.values().map(|n| (n.name.clone(), n.mean)).collect();
        m.evaluate(&u)
    }

    /// `n` independent rows, reproducible from `seed`.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Vec<RealAssignment>, ScmError> {
        if n == 0 {
            return Err(ScmError::EmptySample);
        }
        let dists: Vec<Normal<f64>> = self
            .graph
            .nodes()
            .iter()
            .map(|v| {
                let ns = &self.noise[v];
                Normal::new(ns.mean, ns.sd).map_err(|_| ScmError::InvalidNoise {
                    node: v.to_string(),
                    mean: ns.mean,
                    sd: ns.sd,
                })
            })
            .collect::<Result<_, _>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        let mut x = vec![0.0; self.graph.len()];
        for _ in 0..n {
            for &i in self.graph.topo_idx() {
                let u = dists[i].sample(&mut rng);
                x[i] = match self.fixed.get(self.graph.label(i)) {
                    Some(&c) => c,
                    None => self.structural(i, &x) + u,
                };
            }
            rows.push(self.collect(&x));
        }
        Ok(rows)
    }

    fn dense(&self, x: &RealAssignment) -> Result<Vec<f64>, ScmError> {
        for k in x.keys() {
            if !self.graph.contains(k.as_str()) {
                return Err(ScmError::UnknownNode(k.to_string()));
            }
        }
        self.graph
            .nodes()
            .iter()
            .map(|v| {
                x.get(v)
                    .copied()
                    .ok_or_else(|| ScmError::MissingValue(v.to_string()))
            })
            .collect()
    }

    fn collect(&self, x: &[f64]) -> RealAssignment {
        self.graph
            .nodes()
            .iter()
            .cloned()
            .zip(x.iter().copied())
            .collect()
    }
}

impl Intervene for LinearScm {
    type Value = f64;

    fn intervene(&self, assignments: &InterventionSet<f64>) -> Result<Self, ScmError> {
        let mut targets = BTreeSet::new();
        for (v, &val) in assignments {
            let i = self
                .graph
                .index_of(v.as_str())
                .ok_or_else(|| ScmError::UnknownNode(v.to_string()))?;
            if !val.is_finite() {
                return Err(ScmError::NonFinite(v.to_string()));
            }
            targets.insert(i);
        }
        let graph = self.graph.without_incoming(&targets);
        let coeff = self
            .coeff
            .iter()
            .filter(|((_, to), _)| !assignments.contains_key(to))
            .map(|(k, c)| (k.clone(), *c))
            .collect();
        let mut fixed = self.fixed.clone();
        fixed.extend(assignments.iter().map(|(k, v)| (k.clone(), *v)));
        Ok(LinearScm {
            graph,
            coeff,
            noise: self.noise.clone(),
            fixed,
        })
    }
}

/// Per-node least squares of each node on its parents plus an intercept.
///
/// The intercept becomes the noise mean and the residual standard deviation
/// the noise scale.
pub fn fit_linear(data: &[RealAssignment], g: &Dag) -> Result<LinearScm, ScmError> {
    let max_in = (0..g.len())
        .map(|i| g.parents_idx(i).len())
        .max()
        .unwrap_or(0);
    let needed = max_in + 2;
    if data.len() < needed {
        return Err(ScmError::TooFewRows {
            rows: data.len(),
            needed,
        });
    }
    let column = |v: &NodeId| -> Result<Vec<f64>, ScmError> {
        data.iter()
            .map(|row| {
                row.get(v)
                    .copied()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| ScmError::MissingValue(v.to_string()))
            })
            .collect()
    };
    let mut coeff = BTreeMap::new();
    let mut noise = BTreeMap::new();
    for (i, v) in g.nodes().iter().enumerate() {
        let y = column(v)?;
        let parents: Vec<&NodeId> = g.parents_idx(i).iter().map(|&p| g.label(p)).collect();
        let cols: Vec<Vec<f64>> = parents
            .iter()
            .map(|p| column(p))
            .collect::<Result<_, _>>()?;
        let x: Vec<Vec<f64>> = (0..y.len())
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect();
        let fit = ols(&x, &y).map_err(|e| match e {
            OlsError::RankDeficient => ScmError::RankDeficient(v.to_string()),
            OlsError::TooFewRows { rows, needed } => ScmError::TooFewRows { rows, needed },
        })?;
        for (p, c) in parents.iter().zip(&fit.coef[1..]) {
            coeff.insert(((*p).clone(), v.clone()), *c);
        }
        noise.insert(
            v.clone(),
            Noise {
                name: format!("U_{v}").into(),
                mean: fit.coef[0],
                sd: fit.residual_variance.sqrt(),
            },
        );
    }
    LinearScm::new(g.clone(), coeff, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn obs(vals: &[(&str, f64)]) -> RealAssignment {
        vals.iter().map(|(k, v)| (NodeId::from(*k), *v)).collect()
    }

    fn close(a: &RealAssignment, b: &RealAssignment, tol: f64) -> bool {
        a.len() == b.len() && a.iter().all(|(k, v)| (b[k] - v).abs() <= tol)
    }

    #[test]
    fn evaluate_examples() {
        let m = fixtures::triangle_scm();
        let x = m
            .evaluate(&obs(&[("U1", 0.5), ("U2", 0.75), ("U3", 0.75)]))
            .unwrap();
        assert!(close(
            &x,
            &obs(&[("X1", 0.5), ("X2", 1.0), ("X3", 1.5)]),
            1e-12
        ));

        let x = m
            .evaluate(&obs(&[("U1", 0.0), ("U2", 0.0), ("U3", 0.0)]))
            .unwrap();
        assert!(x.values().all(|v| *v == 0.0));

        // x2 = 0.5, x3 = 0.7 + 0.4 * 0.5
        let x = m
            .evaluate(&obs(&[("U1", 1.0), ("U2", 0.0), ("U3", 0.0)]))
            .unwrap();
        assert!(close(
            &x,
            &obs(&[("X1", 1.0), ("X2", 0.5), ("X3", 0.9)]),
            1e-12
        ));

        assert_eq!(
            m.evaluate(&obs(&[("U1", 1.0)])).unwrap_err(),
            ScmError::MissingNoise("U2".into())
        );
    }

    #[test]
    fn abduct_examples() {
        let m = fixtures::triangle_scm();
        let u = m
            .abduct(&obs(&[("X1", 0.5), ("X2", 1.0), ("X3", 1.5)]))
            .unwrap();
        assert!(close(
            &u,
            &obs(&[("U1", 0.5), ("U2", 0.75), ("U3", 0.75)]),
            1e-12
        ));
        let u = m
            .abduct(&obs(&[("X1", 0.0), ("X2", 0.0), ("X3", 0.0)]))
            .unwrap();
        assert!(u.values().all(|v| *v == 0.0));
        assert_eq!(
            m.abduct(&obs(&[("X1", 0.0)])).unwrap_err(),
            ScmError::MissingValue("X2".into())
        );
    }

    #[test]
    fn intervention_is_surgery() {
        let m = fixtures::triangle_scm();
        let cut = m.intervene(&obs(&[("X2", 2.0)])).unwrap();
        assert!(!cut.graph().has_edge("X1", "X2"));
        assert!(cut.graph().has_edge("X1", "X3") && cut.graph().has_edge("X2", "X3"));
        assert_eq!(cut.mechanism("X3"), m.mechanism("X3"));
        assert!(cut.mechanism("X2").is_empty());

        let root = m.intervene(&obs(&[("X1", 3.0)])).unwrap();
        assert_eq!(root.graph(), m.graph());
        assert_eq!(root.fixed()[&NodeId::from("X1")], 3.0);

        let all = m
            .intervene(&obs(&[("X1", 1.0), ("X2", 1.0), ("X3", 1.0)]))
            .unwrap();
        assert_eq!(all.graph().edge_count(), 0);
        assert_eq!(all.fixed().len(), 3);

        assert!(matches!(
            m.intervene(&obs(&[("Q", 1.0)])),
            Err(ScmError::UnknownNode(_))
        ));
    }

    #[test]
    fn counterfactual_examples() {
        let m = fixtures::triangle_scm();
        let seen = obs(&[("X1", 0.5), ("X2", 1.0), ("X3", 1.5)]);
        let cf = m.counterfactual(&seen, &obs(&[("X2", 2.0)])).unwrap();
        assert!((cf[&NodeId::from("X3")] - 1.9).abs() < 1e-12);
        assert_eq!(cf[&NodeId::from("X2")], 2.0);

        let same = m.counterfactual(&seen, &obs(&[("X2", 1.0)])).unwrap();
        assert!(close(&same, &seen, 1e-12));

        let leaf = m.counterfactual(&seen, &obs(&[("X3", 7.0)])).unwrap();
        assert_eq!(leaf[&NodeId::from("X1")], 0.5);
        assert!((leaf[&NodeId::from("X2")] - 1.0).abs() < 1e-12);
        assert_eq!(leaf[&NodeId::from("X3")], 7.0);
    }

    #[test]
    fn simulate_is_deterministic_and_degenerate_noise_is_constant() {
        let m = fixtures::triangle_scm();
        assert_eq!(m.simulate(5, 7).unwrap(), m.simulate(5, 7).unwrap());
        assert_ne!(m.simulate(5, 7).unwrap(), m.simulate(5, 8).unwrap());
        assert_eq!(m.simulate(0, 7).unwrap_err(), ScmError::EmptySample);

        let mut noise = m.noise().clone();
        for n in noise.values_mut() {
            n.mean = 1.0;
            n.sd = 0.0;
        }
        let flat = LinearScm::new(m.graph().clone(), m.coefficients().clone(), noise).unwrap();
        let rows = flat.simulate(4, 1).unwrap();
        let at_mean = flat.interventional_mean(&BTreeMap::new()).unwrap();
        assert!(rows.iter().all(|r| *r == at_mean));
    }

    #[test]
    fn invalid_noise_rejected() {
        let m = fixtures::triangle_scm();
        let mut noise = m.noise().clone();
        noise.get_mut(&NodeId::from("X1")).unwrap().sd = -1.0;
        assert!(matches!(
            LinearScm::new(m.graph().clone(), m.coefficients().clone(), noise),
            Err(ScmError::InvalidNoise { .. })
        ));
    }

    #[test]
    fn coefficient_map_must_match_edges() {
        let g = Dag::new(["A", "B"], [("A", "B")]).unwrap();
        assert!(matches!(
            LinearScm::new(g.clone(), BTreeMap::new(), BTreeMap::new()),
            Err(ScmError::MissingCoefficient(..))
        ));
        let stray = BTreeMap::from([
            (("A".into(), "B".into()), 1.0),
            (("B".into(), "A".into()), 1.0),
        ]);
        assert!(matches!(
            LinearScm::new(g, stray, BTreeMap::new()),
            Err(ScmError::StrayCoefficient(..))
        ));
    }

    #[test]
    fn fit_extrapolation_example() {
        let g = Dag::new(["T", "Y"], [("T", "Y")]).unwrap();
        let data: Vec<RealAssignment> = [(0.0, 0.5), (1.0, 1.0), (2.0, 2.5), (3.0, 2.0)]
            .iter()
            .map(|&(t, y)| obs(&[("T", t), ("Y", y)]))
            .collect();
        let m = fit_linear(&data, &g).unwrap();
        // Least squares through these points is Y = 0.6 T + 0.6, not the
        // hand-drawn 0.5 T + 0.5 line.
        assert!((m.coefficient("T", "Y").unwrap() - 0.6).abs() < 1e-9);
        assert!((m.noise()[&NodeId::from("Y")].mean - 0.6).abs() < 1e-9);
        let pred = m.interventional_mean(&obs(&[("T", 4.0)])).unwrap();
        assert!((pred[&NodeId::from("Y")] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn fit_noiseless_and_constant_columns() {
        let g = Dag::new(["T", "Y"], [("T", "Y")]).unwrap();
        let exact: Vec<RealAssignment> = (0..6)
            .map(|i| obs(&[("T", i as f64), ("Y", 2.0 - 3.0 * i as f64)]))
            .collect();
        let m = fit_linear(&exact, &g).unwrap();
        assert!((m.coefficient("T", "Y").unwrap() + 3.0).abs() < 1e-9);
        assert!(m.noise()[&NodeId::from("Y")].sd < 1e-9);

        let flat: Vec<RealAssignment> = (0..6)
            .map(|i| obs(&[("T", i as f64), ("Y", 4.0)]))
            .collect();
        let m = fit_linear(&flat, &g).unwrap();
        assert!(m.coefficient("T", "Y").unwrap().abs() < 1e-9);
        assert!((m.noise()[&NodeId::from("Y")].mean - 4.0).abs() < 1e-9);
    }

    #[test]
    fn fit_errors() {
        let g = Dag::new(["T", "Y"], [("T", "Y")]).unwrap();
        let few = vec![obs(&[("T", 0.0), ("Y", 0.0)]); 2];
        assert!(matches!(
            fit_linear(&few, &g),
            Err(ScmError::TooFewRows { .. })
        ));
        let constant_t = vec![obs(&[("T", 1.0), ("Y", 0.0)]); 5];
        assert_eq!(
            fit_linear(&constant_t, &g).unwrap_err(),
            ScmError::RankDeficient("Y".into())
        );
    }
}
