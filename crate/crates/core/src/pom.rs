//! Potential-outcome tables: positivity audit, matching imputation and
//! stratified effect estimates.
//!
//! Every unit shows one potential outcome; the other is missing. Reports
//! carry the no-interference premise verbatim because a single table cannot
//! test it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dseparation::{check_backdoor, NodeSet, SeparationError};
use crate::graph::NodeId;
use crate::oracle::{enumerate_joint, OracleError};
use crate::scm::{CategoryAssignment, CptModel, ScmError};

/// Declared, untested premise attached to every report.
pub const SUTVA_PREMISE: &str =
    "no interference between units and no hidden versions of treatment (assumed, not tested)";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PomError {
    #[error("table has no rows")]
    Empty,
    #[error("unit `{0}` appears twice")]
    DuplicateUnit(String),
    #[error("unit `{unit}`: covariate schema differs at column {column}")]
    SchemaMismatch { unit: String, column: usize },
    #[error("unit `{unit}`: treatment must be 0 or 1, got {value}")]
    BadTreatment { unit: String, value: String },
    #[error("unit `{unit}`: outcome must be finite")]
    NonFiniteOutcome { unit: String },
    #[error("real-valued covariate in column {0}; bin it before stratifying")]
    RealCovariate(usize),
    #[error("categorical covariate in column {0}; caliper matching needs real covariates")]
    CategoricalCovariate(usize),
    #[error("caliper radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("every stratum violates positivity")]
    NoUsableStratum,
    #[error("`{value}` of node `{node}` is not numeric")]
    NonNumeric { node: String, value: String },
    #[error("P({0}) is zero; the adjusted expectation is undefined")]
    ZeroMass(String),
    #[error(
        "{adjustment:?} does not satisfy the back-door criterion for {treatment} -> {outcome}"
    )]
    BackdoorRejected {
        treatment: String,
        outcome: String,
        adjustment: Vec<String>,
    },
    #[error(transparent)]
    Separation(#[from] SeparationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Scm(#[from] ScmError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Covariate {
    Real(f64),
    Category(String),
}

impl Covariate {
    fn is_real(&self) -> bool {
        matches!(self, Covariate::Real(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PomRow {
    pub unit: String,
    pub covariates: Vec<Covariate>,
    pub treatment: u8,
    pub outcome: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PomTable {
    rows: Vec<PomRow>,
}

impl PomTable {
    pub fn new(rows: Vec<PomRow>) -> Result<Self, PomError> {
        let first = rows.first().ok_or(PomError::Empty)?;
        let schema: Vec<bool> = first.covariates.iter().map(Covariate::is_real).collect();
        let mut units = BTreeSet::new();
        for r in &rows {
            if !units.insert(r.unit.as_str()) {
                return Err(PomError::DuplicateUnit(r.unit.clone()));
            }
            if r.covariates.len() != schema.len() {
                return Err(PomError::SchemaMismatch {
                    unit: r.unit.clone(),
                    column: r.covariates.len().min(schema.len()),
                });
            }
            if let Some(column) = r.covariates.iter().zip(&schema).position(|(c, &s)| {
                c.is_real() != s || matches!(c, Covariate::Real(v) if !v.is_finite())
            }) {
                return Err(PomError::SchemaMismatch {
                    unit: r.unit.clone(),
                    column,
                });
            }
            if r.treatment > 1 {
                return Err(PomError::BadTreatment {
                    unit: r.unit.clone(),
                    value: r.treatment.to_string(),
                });
            }
            if !r.outcome.is_finite() {
                return Err(PomError::NonFiniteOutcome {
                    unit: r.unit.clone(),
                });
            }
        }
        Ok(PomTable { rows })
    }

    /// Table from categorical samples: `x_nodes` become covariates, the
    /// treatment must take values "0"/"1" and the outcome must be numeric.
    /// Units are named `u0, u1, ...`.
    pub fn from_assignments(
        samples: &[CategoryAssignment],
        treatment: &str,
        outcome: &str,
        x_nodes: &[NodeId],
    ) -> Result<Self, PomError> {
        let get = |s: &CategoryAssignment, v: &str| -> Result<String, PomError> {
            s.get(v)
                .cloned()
                .ok_or_else(|| PomError::Scm(ScmError::MissingValue(v.to_owned())))
        };
        let mut rows = Vec::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            let unit = format!("u{i}");
            let t = get(s, treatment)?;
            let treatment = match t.as_str() {
                "0" => 0,
                "1" => 1,
                _ => return Err(PomError::BadTreatment { unit, value: t }),
            };
            let y = get(s, outcome)?;
            let outcome = y.trim().parse().map_err(|_| PomError::NonNumeric {
                node: outcome.to_owned(),
                value: y.clone(),
            })?;
            let covariates = x_nodes
                .iter()
                .map(|x| get(s, x.as_str()).map(Covariate::Category))
                .collect::<Result<_, _>>()?;
            rows.push(PomRow {
                unit,
                covariates,
                treatment,
                outcome,
            });
        }
        PomTable::new(rows)
    }

    pub fn rows(&self) -> &[PomRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn covariate_count(&self) -> usize {
        self.rows[0].covariates.len()
    }

    fn strata(&self) -> Result<BTreeMap<Vec<String>, Vec<usize>>, PomError> {
        let mut out: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            let mut key = Vec::with_capacity(r.covariates.len());
            for (c, v) in r.covariates.iter().enumerate() {
                match v {
                    Covariate::Category(s) => key.push(s.clone()),
                    Covariate::Real(_) => return Err(PomError::RealCovariate(c)),
                }
            }
            out.entry(key).or_default().push(i);
        }
        Ok(out)
    }

    fn real_matrix(&self) -> Result<Vec<Vec<f64>>, PomError> {
        self.rows
            .iter()
            .map(|r| {
                r.covariates
                    .iter()
                    .enumerate()
                    .map(|(c, v)| match v {
                        Covariate::Real(x) => Ok(*x),
                        Covariate::Category(_) => Err(PomError::CategoricalCovariate(c)),
                    })
                    .collect()
            })
            .collect()
    }
}

/// A covariate stratum in which only one treatment arm occurs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityViolation {
    pub stratum: Vec<String>,
    /// The arm every unit in the stratum received.
    pub arm: u8,
    pub units: usize,
    pub singleton: bool,
}

/// One-armed strata; an empty list means the audit passes.
pub fn check_positivity(t: &PomTable) -> Result<Vec<PositivityViolation>, PomError> {
    let mut out = Vec::new();
    for (stratum, idx) in t.strata()? {
        let arms: BTreeSet<u8> = idx.iter().map(|&i| t.rows[i].treatment).collect();
        if arms.len() == 1 {
            out.push(PositivityViolation {
                stratum,
                arm: t.rows[idx[0]].treatment,
                units: idx.len(),
                singleton: idx.len() == 1,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    Exact,
    Caliper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitImputation {
    pub unit: String,
    pub treatment: u8,
    pub observed: f64,
    /// Mean outcome of the matched opposite-arm units; `None` when unmatched.
    pub imputed: Option<f64>,
    pub matches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImputationReport {
    pub method: MatchMethod,
    pub radius: Option<f64>,
    pub units: Vec<UnitImputation>,
    /// Covariate columns left out of the caliper distance for having zero variance.
    pub dropped_dimensions: Vec<usize>,
    pub premises: Vec<String>,
}

impl ImputationReport {
    pub fn unmatched(&self) -> impl Iterator<Item = &UnitImputation> {
        self.units.iter().filter(|u| u.imputed.is_none())
    }

    /// Mean of `observed - imputed` over matched treated units.
    pub fn att(&self) -> Option<f64> {
        let d: Vec<f64> = self
            .units
            .iter()
            .filter(|u| u.treatment == 1)
            .filter_map(|u| u.imputed.map(|m| u.observed - m))
            .collect();
        (!d.is_empty()).then(|| d.iter().sum::<f64>() / d.len() as f64)
    }
}

fn impute(t: &PomTable, i: usize, matches: &[usize]) -> UnitImputation {
    let r = &t.rows[i];
    let imputed = (!matches.is_empty())
        .then(|| matches.iter().map(|&j| t.rows[j].outcome).sum::<f64>() / matches.len() as f64);
    UnitImputation {
        unit: r.unit.clone(),
        treatment: r.treatment,
        observed: r.outcome,
        imputed,
        matches: matches.len(),
    }
}

/// Imputes each unit's missing outcome from opposite-arm units with identical covariates.
pub fn exact_match_impute(t: &PomTable) -> Result<ImputationReport, PomError> {
    let strata = t.strata()?;
    let mut units = vec![None; t.len()];
    for idx in strata.values() {
        for &i in idx {
            let arm = t.rows[i].treatment;
            let m: Vec<usize> = idx
                .iter()
                .copied()
                .filter(|&j| t.rows[j].treatment != arm)
                .collect();
            units[i] = Some(impute(t, i, &m));
        }
    }
    Ok(ImputationReport {
        method: MatchMethod::Exact,
        radius: None,
        units: units
            .into_iter()
            .map(|u| u.expect("every row is in a stratum"))
            .collect(),
        dropped_dimensions: vec![],
        premises: vec![SUTVA_PREMISE.to_owned()],
    })
}

/// Imputes from opposite-arm units within `radius` in standardized covariate space.
///
/// Each column is scaled by its sample standard deviation over all units;
/// zero-variance columns are dropped and listed in the report.
pub fn caliper_match_impute(t: &PomTable, radius: f64) -> Result<ImputationReport, PomError> {
    if !(radius > 0.0) {
        return Err(PomError::BadRadius(radius));
    }
    let x = t.real_matrix()?;
    let n = x.len();
    let k = t.covariate_count();
    let mut scale = Vec::with_capacity(k);
    let mut dropped = Vec::new();
    for c in 0..k {
        let mean = x.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = if n > 1 {
            x.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        if var > 0.0 {
            scale.push(Some(var.sqrt()));
        } else {
            log::warn!("covariate column {c} has zero variance; dropped from the distance");
            dropped.push(c);
            scale.push(None);
        }
    }
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        scale
            .iter()
            .enumerate()
            .filter_map(|(c, s)| s.map(|s| ((a[c] - b[c]) / s).powi(2)))
            .sum::<f64>()
            .sqrt()
    };
    let units = (0..n)
        .map(|i| {
            let arm = t.rows[i].treatment;
            let m: Vec<usize> = (0..n)
                .filter(|&j| t.rows[j].treatment != arm && dist(&x[i], &x[j]) <= radius)
                .collect();
            impute(t, i, &m)
        })
        .collect();
    Ok(ImputationReport {
        method: MatchMethod::Caliper,
        radius: Some(radius),
        units,
        dropped_dimensions: dropped,
        premises: vec![SUTVA_PREMISE.to_owned()],
    })
}

/// Stratified treatment-effect estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AteEstimate {
    pub e_y1: f64,
    pub e_y0: f64,
    pub ate: f64,
    pub se_e_y1: f64,
    pub se_e_y0: f64,
    pub se_ate: f64,
    pub strata_used: usize,
    /// Strata left out for lacking one arm; the remaining weights are renormalized.
    pub excluded: Vec<PositivityViolation>,
    pub premises: Vec<String>,
}

fn mean_var(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let m = ys.iter().sum::<f64>() / n;
    let v = if ys.len() > 1 {
        ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, v)
}

/// `E[Y(t)] = Σ_x P̂(x) mean(Y | T=t, X=x)` with `P̂(x)` the share of all units in stratum `x`.
///
/// Standard errors combine the within-stratum sampling variance of the arm
/// means with the multinomial variance of the stratum shares.
pub fn ate(t: &PomTable) -> Result<AteEstimate, PomError> {
    let excluded = check_positivity(t)?;
    let bad: BTreeSet<&Vec<String>> = excluded.iter().map(|v| &v.stratum).collect();
    let strata = t.strata()?;
    struct S {
        w: f64,
        m: [f64; 2],
        v: [f64; 2],
    }
    let mut kept = Vec::new();
    for (key, idx) in &strata {
        if bad.contains(key) {
            continue;
        }
        let mut m = [0.0; 2];
        let mut v = [0.0; 2];
        for arm in 0..2u8 {
            let ys: Vec<f64> = idx
                .iter()
                .filter(|&&i| t.rows[i].treatment == arm)
                .map(|&i| t.rows[i].outcome)
                .collect();
            let (mean, var) = mean_var(&ys);
            m[arm as usize] = mean;
            v[arm as usize] = var / ys.len() as f64;
        }
        kept.push(S {
            w: idx.len() as f64,
            m,
            v,
        });
    }
    if kept.is_empty() {
        return Err(PomError::NoUsableStratum);
    }
    let n: f64 = kept.iter().map(|s| s.w).sum();
    for s in &mut kept {
        s.w /= n;
    }
    let point = |f: &dyn Fn(&S) -> f64| kept.iter().map(|s| s.w * f(s)).sum::<f64>();
    let e1 = point(&|s| s.m[1]);
    let e0 = point(&|s| s.m[0]);
    let se = |f: &dyn Fn(&S) -> f64, var: &dyn Fn(&S) -> f64, est: f64| -> f64 {
        let sampling: f64 = kept.iter().map(|s| s.w * s.w * var(s)).sum();
        let shares: f64 = kept.iter().map(|s| s.w * (f(s) - est).powi(2)).sum::<f64>() / n;
        (sampling + shares).sqrt()
    };
    Ok(AteEstimate {
        e_y1: e1,
        e_y0: e0,
        ate: e1 - e0,
        se_e_y1: se(&|s| s.m[1], &|s| s.v[1], e1),
        se_e_y0: se(&|s| s.m[0], &|s| s.v[0], e0),
        se_ate: se(&|s| s.m[1] - s.m[0], &|s| s.v[0] + s.v[1], e1 - e0),
        strata_used: kept.len(),
        excluded,
        premises: vec![SUTVA_PREMISE.to_owned()],
    })
}

/// `Σ_x P(X=x) Σ_y y P(Y=y | T=t, X=x)` from the exact joint of `m`.
pub fn adjusted_expectation(
    m: &CptModel,
    t_node: &str,
    y_node: &str,
    x_nodes: &NodeSet,
    t_value: &str,
) -> Result<f64, PomError> {
    let g = m.graph();
    let treatment = NodeSet::from([NodeId::from(t_node)]);
    if !check_backdoor(g, &treatment, y_node, x_nodes)? {
        return Err(PomError::BackdoorRejected {
            treatment: t_node.to_owned(),
            outcome: y_node.to_owned(),
            adjustment: x_nodes.iter().map(|x| x.to_string()).collect(),
        });
    }
    let ti = g.require(t_node).map_err(SeparationError::from)?;
    let yi = g.require(y_node).map_err(SeparationError::from)?;
    let xi: Vec<usize> = x_nodes
        .iter()
        .map(|x| g.require(x.as_str()))
        .collect::<Result<_, _>>()
        .map_err(SeparationError::from)?;
    let tk = m.value_index(t_node, t_value)?;
    let ys: Vec<f64> = m
        .domain(y_node)
        .expect("checked")
        .iter()
        .map(|v| {
            v.trim().parse().map_err(|_| PomError::NonNumeric {
                node: y_node.to_owned(),
                value: v.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    let joint = enumerate_joint(m)?;
    let nx: usize = xi.iter().map(|&v| joint.domains()[v].len()).product();
    let nt = joint.domains()[ti].len();
    let ny = ys.len();
    let vars: Vec<usize> = xi.iter().copied().chain([ti, yi]).collect();
    let table = joint.marginal(&vars);
    let mut total = 0.0;
    for kx in 0..nx {
        let block = &table[kx * nt * ny..(kx + 1) * nt * ny];
        let px: f64 = block.iter().sum();
        if px <= 0.0 {
            continue;
        }
        let row = &block[tk * ny..(tk + 1) * ny];
        let ptx: f64 = row.iter().sum();
        if ptx <= 0.0 {
            return Err(PomError::ZeroMass(format!(
                "{t_node}={t_value}, stratum {kx}"
            )));
        }
        let ey: f64 = row.iter().zip(&ys).map(|(p, y)| p * y).sum::<f64>() / ptx;
        total += px * ey;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::interventional_oracle;

    fn row(unit: &str, x: &[&str], t: u8, y: f64) -> PomRow {
        PomRow {
            unit: unit.into(),
            covariates: x
                .iter()
                .map(|s| Covariate::Category(s.to_string()))
                .collect(),
            treatment: t,
            outcome: y,
        }
    }

    fn real(unit: &str, x: &[f64], t: u8, y: f64) -> PomRow {
        PomRow {
            unit: unit.into(),
            covariates: x.iter().map(|v| Covariate::Real(*v)).collect(),
            treatment: t,
            outcome: y,
        }
    }

    #[test]
    fn table_invariants() {
        assert_eq!(PomTable::new(vec![]).unwrap_err(), PomError::Empty);
        assert!(matches!(
            PomTable::new(vec![row("a", &["0"], 1, 1.0), row("a", &["0"], 0, 1.0)]),
            Err(PomError::DuplicateUnit(_))
        ));
        assert!(matches!(
            PomTable::new(vec![row("a", &["0"], 1, 1.0), real("b", &[0.0], 0, 1.0)]),
            Err(PomError::SchemaMismatch { column: 0, .. })
        ));
        assert!(matches!(
            PomTable::new(vec![row("a", &["0"], 2, 1.0)]),
            Err(PomError::BadTreatment { .. })
        ));
    }

    #[test]
    fn positivity_audit() {
        let t = PomTable::new(vec![
            row("a", &["x"], 1, 1.0),
            row("b", &["x"], 1, 1.0),
            row("c", &["x"], 1, 1.0),
            row("d", &["y"], 0, 1.0),
            row("e", &["z"], 0, 1.0),
            row("f", &["z"], 1, 1.0),
        ])
        .unwrap();
        let v = check_positivity(&t).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(
            (v[0].stratum.clone(), v[0].arm, v[0].singleton),
            (vec!["x".into()], 1, false)
        );
        assert_eq!(
            (v[1].stratum.clone(), v[1].singleton),
            (vec!["y".into()], true)
        );
        let ok = PomTable::new(vec![row("e", &["z"], 0, 1.0), row("f", &["z"], 1, 1.0)]).unwrap();
        assert!(check_positivity(&ok).unwrap().is_empty());
        let r = PomTable::new(vec![real("a", &[0.5], 0, 1.0)]).unwrap();
        assert_eq!(
            check_positivity(&r).unwrap_err(),
            PomError::RealCovariate(0)
        );
    }

    #[test]
    fn exact_matching() {
        let t = PomTable::new(vec![row("a", &["x"], 1, 3.0), row("b", &["x"], 0, 1.0)]).unwrap();
        let r = exact_match_impute(&t).unwrap();
        assert_eq!(r.units[0].imputed, Some(1.0));
        assert_eq!(r.units[1].imputed, Some(3.0));
        assert_eq!(r.premises, vec![SUTVA_PREMISE.to_owned()]);

        let t = PomTable::new(vec![
            row("a", &["x"], 1, 9.0),
            row("b", &["x"], 0, 1.0),
            row("c", &["x"], 0, 2.0),
            row("d", &["x"], 0, 3.0),
            row("e", &["w"], 0, 3.0),
        ])
        .unwrap();
        let r = exact_match_impute(&t).unwrap();
        assert_eq!((r.units[0].imputed, r.units[0].matches), (Some(2.0), 3));
        assert_eq!(r.units[4].imputed, None);
        assert_eq!(r.unmatched().count(), 1);
        assert_eq!(r.att(), Some(7.0));
    }

    #[test]
    fn caliper_matching() {
        let t = PomTable::new(vec![
            real("a", &[0.0], 1, 0.0),
            real("b", &[0.1], 0, 1.0),
            real("c", &[5.0], 0, 2.0),
        ])
        .unwrap();
        // sd of {0, 0.1, 5} scales the raw radius; express 0.5 raw units in standardized terms.
        let sd = {
            let m = 5.1 / 3.0;
            (([0.0f64, 0.1, 5.0]
                .iter()
                .map(|x| (x - m).powi(2))
                .sum::<f64>())
                / 2.0)
                .sqrt()
        };
        let r = caliper_match_impute(&t, 0.5 / sd).unwrap();
        assert_eq!((r.units[0].matches, r.units[0].imputed), (1, Some(1.0)));

        let r = caliper_match_impute(&t, 1e9).unwrap();
        assert_eq!(r.units[0].imputed, Some(1.5));

        let r = caliper_match_impute(&t, 1e-6).unwrap();
        assert_eq!(r.unmatched().count(), 3);

        assert_eq!(
            caliper_match_impute(&t, 0.0).unwrap_err(),
            PomError::BadRadius(0.0)
        );

        let flat = PomTable::new(vec![
            real("a", &[1.0, 0.0], 1, 0.0),
            real("b", &[1.0, 3.0], 0, 1.0),
        ])
        .unwrap();
        assert_eq!(
            caliper_match_impute(&flat, 10.0)
                .unwrap()
                .dropped_dimensions,
            vec![0]
        );
    }

    #[test]
    fn stratified_ate() {
        // Y = T + X, both arms in each stratum.
        let mut rows = Vec::new();
        for (i, (x, t)) in [(0, 0), (0, 1), (1, 0), (1, 1), (1, 1), (2, 0), (2, 1)]
            .iter()
            .enumerate()
        {
            rows.push(row(
                &format!("u{i}"),
                &[&x.to_string()],
                *t,
                (*t + *x) as f64,
            ));
        }
        let e = ate(&PomTable::new(rows).unwrap()).unwrap();
        assert!((e.ate - 1.0).abs() < 1e-12);

        // Single stratum collapses to the difference of arm means.
        let t = PomTable::new(vec![
            row("a", &["x"], 1, 4.0),
            row("b", &["x"], 1, 6.0),
            row("c", &["x"], 0, 1.0),
        ])
        .unwrap();
        let e = ate(&t).unwrap();
        assert_eq!((e.e_y1, e.e_y0, e.ate), (5.0, 1.0, 4.0));

        let lone = PomTable::new(vec![row("a", &["x"], 1, 4.0)]).unwrap();
        assert_eq!(ate(&lone).unwrap_err(), PomError::NoUsableStratum);
    }

    #[test]
    fn adjusted_expectation_matches_oracle() {
        let m = fixtures::confounded_cpt();
        let x = NodeSet::from(["X".into()]);
        for t in ["0", "1"] {
            let adj = adjusted_expectation(&m, "T", "Y", &x, t).unwrap();
            let o = interventional_oracle(&m, &BTreeMap::from([("T".into(), t.to_string())]), "Y")
                .unwrap()
                .expectation()
                .unwrap();
            assert!((adj - o).abs() < 1e-12);
        }
        assert!(matches!(
            adjusted_expectation(&m, "T", "Y", &NodeSet::new(), "1"),
            Err(PomError::BackdoorRejected { .. })
        ));
    }
}
