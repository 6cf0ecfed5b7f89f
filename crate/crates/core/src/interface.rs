//! Model documents, CSV ingestion and the query surface shared by the CLI.
//!
//! Every document is a JSON envelope
//!
//! ```json
//! {"kind": "dag", "version": 1, "payload": {"nodes": ["A", "B"], "edges": [["A", "B"]]}}
//! ```
//!
//! with one payload shape per kind:
//!
//! | kind            | payload                                                                  |
//! |-----------------|--------------------------------------------------------------------------|
//! | `dag`           | `nodes`, `edges: [[from, to]]`                                           |
//! | `linear_scm`    | `nodes`, `edges: [[from, to, coefficient]]`, optional `noise`, `fixed`    |
//! | `cpt_model`     | `nodes: [{name, domain, parents, rows}]`                                  |
//! | `stbn_template` | `variables`, `max_lag`, `lagged_edges: [[from, lag, to]]`                 |
//! | `pom_table`     | `rows: [{unit, covariates, treatment, outcome}]`                          |
//!
//! `noise` maps a node to `{name, mean, sd}`; `fixed` maps intervened nodes
//! to their forced values. A `pom_table` may also be read from CSV with the
//! header `unit,treatment,outcome,x_1,...,x_k`; CSV covariates load as
//! category labels and are parsed as numbers when caliper matching needs them.
//!
//! Query output is JSON with sorted keys and every float rounded to
//! [`SIGNIFICANT_DIGITS`] significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dseparation::{
    backdoor_paths, check_backdoor, d_separated, default_adjustment_set, NodeSet,
};
use crate::graph::{Dag, NodeId};
use crate::identify::{evaluate_expression, fci, render_expression, IdentifyError, QuerySpec};
use crate::mediation::{causal_steps, difference_test, fit_mediation, sobel_test, DEFAULT_ALPHA};
use crate::pom::{
    adjusted_expectation, ate, caliper_match_impute, exact_match_impute, Covariate, PomRow,
    PomTable,
};
use crate::scm::{CptModel, Intervene, LinearScm, NodeTable, Noise, RealAssignment};
use crate::stbn::{stbn_query, unroll, RawTemplate, StbnTemplate};

pub const FORMAT_VERSION: u32 = 1;
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterfaceError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported document version {0}; expected {FORMAT_VERSION}")]
    Version(u32),
    #[error("unknown model kind `{0}`")]
    UnknownKind(String),
    #[error("invalid {kind}: {message}")]
    Invalid { kind: &'static str, message: String },
    #[error("`{query}` does not apply to a {kind} model")]
    KindMismatch { query: String, kind: String },
    #[error("`{0}` needs a model; pass --model")]
    MissingModel(String),
    #[error("{0}")]
    Query(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl InterfaceError {
    /// 1 for errors caused by the input, 2 for broken internal invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            InterfaceError::Internal(_) => 2,
            _ => 1,
        }
    }
}

fn query_err(e: impl std::fmt::Display) -> InterfaceError {
    InterfaceError::Query(e.to_string())
}

fn identify_err(e: IdentifyError) -> InterfaceError {
    match e {
        IdentifyError::NotNormalized(_) => InterfaceError::Internal(e.to_string()),
        other => query_err(other),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Dag(Dag),
    LinearScm(LinearScm),
    CptModel(CptModel),
    StbnTemplate(StbnTemplate),
    PomTable(PomTable),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Dag(_) => "dag",
            Model::LinearScm(_) => "linear_scm",
            Model::CptModel(_) => "cpt_model",
            Model::StbnTemplate(_) => "stbn_template",
            Model::PomTable(_) => "pom_table",
        }
    }

    pub fn graph(&self) -> Option<&Dag> {
        match self {
            Model::Dag(g) => Some(g),
            Model::LinearScm(m) => Some(m.graph()),
            Model::CptModel(m) => Some(m.graph()),
            _ => None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    kind: String,
    version: u32,
    payload: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DagDoc {
    nodes: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearDoc {
    nodes: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId, f64)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    noise: BTreeMap<NodeId, NoiseDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    fixed: BTreeMap<NodeId, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseDoc {
    name: NodeId,
    #[serde(default)]
    mean: f64,
    #[serde(default = "unit_sd")]
    sd: f64,
}

fn unit_sd() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CptDoc {
    nodes: Vec<CptNodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CptNodeDoc {
    name: NodeId,
    domain: Vec<String>,
    #[serde(default)]
    parents: Vec<NodeId>,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PomDoc {
    rows: Vec<PomRow>,
}

fn schema_err<E: std::fmt::Display>(
    prefix: &str,
    e: serde_path_to_error::Error<E>,
) -> InterfaceError {
    let inner = e.path().to_string();
    let path = match (prefix.is_empty(), inner.as_str()) {
        (true, _) => inner.clone(),
        (false, ".") => prefix.to_owned(),
        (false, _) => format!("{prefix}.{inner}"),
    };
    InterfaceError::Schema {
        path,
        message: e.into_inner().to_string(),
    }
}

fn payload<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, InterfaceError> {
    serde_path_to_error::deserialize(v).map_err(|e| schema_err("payload", e))
}

fn invalid(kind: &'static str) -> impl Fn(&dyn std::fmt::Display) -> InterfaceError {
    move |e| InterfaceError::Invalid {
        kind,
        message: e.to_string(),
    }
}

/// Parses and validates a JSON model document.
pub fn parse_model(document: &str) -> Result<Model, InterfaceError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let env: Envelope = serde_path_to_error::deserialize(de).map_err(|e| schema_err("", e))?;
    if env.version != FORMAT_VERSION {
        return Err(InterfaceError::Version(env.version));
    }
    match env.kind.as_str() {
        "dag" => {
            let d: DagDoc = payload(env.payload)?;
            Ok(Model::Dag(
                Dag::new(d.nodes, d.edges.iter()).map_err(|e| invalid("dag")(&e))?,
            ))
        }
        "linear_scm" => {
            let d: LinearDoc = payload(env.payload)?;
            let err = invalid("linear_scm");
            let g =
                Dag::new(d.nodes, d.edges.iter().map(|(a, b, _)| (a, b))).map_err(|e| err(&e))?;
            let coeff = d.edges.into_iter().map(|(a, b, c)| ((a, b), c)).collect();
            let noise = d
                .noise
                .into_iter()
                .map(|(k, n)| {
                    (
                        k,
                        Noise {
                            name: n.name,
                            mean: n.mean,
                            sd: n.sd,
                        },
                    )
                })
                .collect();
            let m = LinearScm::new(g, coeff, noise).map_err(|e| err(&e))?;
            let m = if d.fixed.is_empty() {
                m
            } else {
                m.intervene(&d.fixed).map_err(|e| err(&e))?
            };
            Ok(Model::LinearScm(m))
        }
        "cpt_model" => {
            let d: CptDoc = payload(env.payload)?;
            let tables = d
                .nodes
                .into_iter()
                .map(|n| {
                    (
                        n.name,
                        NodeTable {
                            domain: n.domain,
                            parents: n.parents,
                            rows: n.rows,
                        },
                    )
                })
                .collect();
            Ok(Model::CptModel(
                CptModel::from_tables(tables).map_err(|e| invalid("cpt_model")(&e))?,
            ))
        }
        "stbn_template" => {
            let d: RawTemplate = payload(env.payload)?;
            Ok(Model::StbnTemplate(
                StbnTemplate::try_from(d).map_err(|e| invalid("stbn_template")(&e))?,
            ))
        }
        "pom_table" => {
            let d: PomDoc = payload(env.payload)?;
            Ok(Model::PomTable(
                PomTable::new(d.rows).map_err(|e| invalid("pom_table")(&e))?,
            ))
        }
        other => Err(InterfaceError::UnknownKind(other.to_owned())),
    }
}

/// Pretty-printed JSON document for `m`; [`parse_model`] reads it back to an equal model.
pub fn serialize_model(m: &Model) -> String {
    let payload = match m {
        Model::Dag(g) => serde_json::to_value(DagDoc {
            nodes: g.nodes().to_vec(),
            edges: g.edges().map(|(a, b)| (a.clone(), b.clone())).collect(),
        }),
        Model::LinearScm(s) => serde_json::to_value(LinearDoc {
            nodes: s.graph().nodes().to_vec(),
            edges: s
                .graph()
                .edges()
                .map(|(a, b)| {
                    let c = s
                        .coefficient(a.as_str(), b.as_str())
                        .expect("edge coefficient");
                    (a.clone(), b.clone(), c)
                })
                .collect(),
            noise: s
                .noise()
                .iter()
                .map(|(k, n)| {
                    (
                        k.clone(),
                        NoiseDoc {
                            name: n.name.clone(),
                            mean: n.mean,
                            sd: n.sd,
                        },
                    )
                })
                .collect(),
            fixed: s.fixed().clone(),
        }),
        Model::CptModel(c) => serde_json::to_value(CptDoc {
            nodes: c
                .tables()
                .map(|(n, t)| CptNodeDoc {
                    name: n.clone(),
                    domain: t.domain.clone(),
                    parents: t.parents.clone(),
                    rows: t.rows.clone(),
                })
                .collect(),
        }),
        Model::StbnTemplate(t) => serde_json::to_value(t.to_raw()),
        Model::PomTable(p) => serde_json::to_value(PomDoc {
            rows: p.rows().to_vec(),
        }),
    }
    .expect("model documents are plain data");
    let doc = json!({"kind": m.kind(), "version": FORMAT_VERSION, "payload": payload});
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Reads a `pom_table` from CSV with header `unit,treatment,outcome,x_1..x_k`.
pub fn parse_pom_csv(text: &str) -> Result<PomTable, InterfaceError> {
    let err = |message: String| InterfaceError::Invalid {
        kind: "pom_table",
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    let k = header.len().saturating_sub(3);
    let expected: Vec<String> = ["unit", "treatment", "outcome"]
        .iter()
        .map(|s| s.to_string())
        .chain((1..=k).map(|i| format!("x_{i}")))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>()
    {
        return Err(err(format!(
            "header must be {}, got {}",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let at = |what: &str| err(format!("data row {}: bad {what}", line + 1));
        let treatment = match &rec[1] {
            "0" => 0,
            "1" => 1,
            _ => return Err(at("treatment")),
        };
        let outcome: f64 = rec[2].parse().map_err(|_| at("outcome"))?;
        rows.push(PomRow {
            unit: rec[0].to_owned(),
            covariates: (3..rec.len())
                .map(|i| Covariate::Category(rec[i].to_owned()))
                .collect(),
            treatment,
            outcome,
        });
    }
    PomTable::new(rows).map_err(|e| err(e.to_string()))
}

/// Loads a model from a `.json` document or a `.csv` potential-outcome table.
pub fn load_model(path: &FsPath) -> Result<Model, InterfaceError> {
    let text = read(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        parse_pom_csv(&text).map(Model::PomTable)
    } else {
        parse_model(&text)
    }
}

fn read(path: &FsPath) -> Result<String, InterfaceError> {
    std::fs::read_to_string(path).map_err(|e| InterfaceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchKind {
    Exact,
    Caliper,
}

/// Command line: global flags plus one query.
#[derive(Debug, Parser)]
#[command(
    name = "counterfact",
    version,
    about = "Interventional and counterfactual queries on causal models"
)]
pub struct Invocation {
    /// Model document (.json) or potential-outcome table (.csv).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub output: OutputFormat,
    #[command(subcommand)]
    pub query: Query,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Query {
    /// Parse the model and report its shape.
    Validate,
    /// Is X d-separated from Y given Z?
    Dsep {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "")]
        given: String,
    },
    /// Back-door check of an adjustment set, or the default set when none is given.
    Backdoor {
        #[arg(long)]
        treatment: String,
        #[arg(long)]
        outcome: String,
        #[arg(long)]
        adjust: Option<String>,
    },
    /// Symbolic expression for P(target | do(sources)).
    Identify {
        #[arg(long = "do")]
        sources: String,
        #[arg(long)]
        target: String,
    },
    /// Numeric interventional distribution (CPT models) or means (linear models).
    Do {
        #[arg(long = "do")]
        assignments: String,
        #[arg(long)]
        target: Option<String>,
    },
    /// Unit-level counterfactual on a linear model.
    Counterfactual {
        #[arg(long)]
        observe: String,
        #[arg(long = "do")]
        assignments: String,
        #[arg(long)]
        target: Option<String>,
    },
    /// Draw samples from the model.
    Simulate {
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Unroll a lag template over a horizon.
    Unroll {
        #[arg(long)]
        horizon: usize,
    },
    /// Interventional query on an unrolled template.
    StbnQuery {
        /// CPT model over the unrolled graph.
        #[arg(long)]
        cpts: PathBuf,
        /// Target as `name@t`.
        #[arg(long)]
        target: String,
        /// Schedule as `name@t=value,...`.
        #[arg(long = "do")]
        schedule: String,
    },
    /// Impute missing potential outcomes by matching.
    Match {
        #[arg(long, value_enum, default_value = "exact")]
        method: MatchKind,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Stratified effect estimate (tables) or adjusted expectations (CPT models).
    Ate {
        #[arg(long)]
        treatment: Option<String>,
        #[arg(long)]
        outcome: Option<String>,
        #[arg(long, default_value = "")]
        adjust: String,
    },
    /// Three-regression mediation analysis.
    Mediate {
        #[arg(long)]
        treatment: String,
        #[arg(long)]
        mediator: String,
        #[arg(long)]
        outcome: String,
        /// CSV with a header naming the three columns; otherwise the model is sampled.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
}

impl Query {
    pub fn name(&self) -> &'static str {
        match self {
            Query::Validate => "validate",
            Query::Dsep { .. } => "dsep",
            Query::Backdoor { .. } => "backdoor",
            Query::Identify { .. } => "identify",
            Query::Do { .. } => "do",
            Query::Counterfactual { .. } => "counterfactual",
            Query::Simulate { .. } => "simulate",
            Query::Unroll { .. } => "unroll",
            Query::StbnQuery { .. } => "stbn-query",
            Query::Match { .. } => "match",
            Query::Ate { .. } => "ate",
            Query::Mediate { .. } => "mediate",
        }
    }
}

/// Splits a command line on whitespace, honouring single and double quotes.
pub fn tokenize(line: &str) -> Result<Vec<String>, InterfaceError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut started = false;
    let mut quote: Option<char> = None;
    for ch in line.chars() {
        match quote {
            Some(q) if ch == q => quote = None,
            Some(_) => cur.push(ch),
            None if ch == '"' || ch == '\'' => {
                quote = Some(ch);
                started = true;
            }
            None if ch.is_whitespace() => {
                if started {
                    out.push(std::mem::take(&mut cur));
                    started = false;
                }
            }
            None => {
                cur.push(ch);
                started = true;
            }
        }
    }
    if quote.is_some() {
        return Err(InterfaceError::Usage("unterminated quote".into()));
    }
    if started {
        out.push(cur);
    }
    Ok(out)
}

/// Runs a query given in command-line form, e.g. `dsep --x A --y B --given ""`.
pub fn run_query(model: Option<&Model>, query: &str) -> Result<Value, InterfaceError> {
    let args = std::iter::once("counterfact".to_owned()).chain(tokenize(query)?);
    let inv = Invocation::try_parse_from(args).map_err(|e| InterfaceError::Usage(e.to_string()))?;
    execute(model, &inv.query, inv.seed).map(round_floats)
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect()
}

fn node_set(s: &str) -> NodeSet {
    split_list(s).into_iter().map(NodeId::from).collect()
}

fn pairs(s: &str) -> Result<Vec<(&str, &str)>, InterfaceError> {
    split_list(s)
        .into_iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| InterfaceError::Usage(format!("expected NAME=VALUE, got `{p}`")))
        })
        .collect()
}

fn real_pairs(s: &str) -> Result<RealAssignment, InterfaceError> {
    pairs(s)?
        .into_iter()
        .map(|(k, v)| {
            v.parse()
                .map(|x| (NodeId::from(k), x))
                .map_err(|_| InterfaceError::Usage(format!("`{v}` is not a number")))
        })
        .collect()
}

fn label_pairs(s: &str) -> Result<BTreeMap<NodeId, String>, InterfaceError> {
    Ok(pairs(s)?
        .into_iter()
        .map(|(k, v)| (NodeId::from(k), v.to_owned()))
        .collect())
}

fn composite(s: &str) -> Result<(NodeId, usize), InterfaceError> {
    let (v, t) = s
        .rsplit_once('@')
        .ok_or_else(|| InterfaceError::Usage(format!("expected name@time, got `{s}`")))?;
    let t = t
        .parse()
        .map_err(|_| InterfaceError::Usage(format!("bad timestamp in `{s}`")))?;
    Ok((NodeId::from(v), t))
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data")
}

/// Executes a parsed query.
pub fn execute(model: Option<&Model>, query: &Query, seed: u64) -> Result<Value, InterfaceError> {
    let name = query.name();
    let mismatch = |m: &Model| InterfaceError::KindMismatch {
        query: name.to_owned(),
        kind: m.kind().to_owned(),
    };
    if let Query::Mediate {
        treatment,
        mediator,
        outcome,
        data: Some(path),
        alpha,
        ..
    } = query
    {
        let rows = mediation_csv(&read(path)?, treatment, mediator, outcome)?;
        return mediation_report(&rows, *alpha);
    }
    let m = model.ok_or_else(|| InterfaceError::MissingModel(name.to_owned()))?;
    let graph = || m.graph().ok_or_else(|| mismatch(m));
    match query {
        Query::Validate => {
            let mut out = json!({"kind": m.kind(), "valid": true});
            if let Some(g) = m.graph() {
                out["nodes"] = json!(g.len());
                out["edges"] = json!(g.edge_count());
                out["topological_order"] = to_json(&g.topological_order());
            }
            match m {
                Model::StbnTemplate(t) => {
                    out["variables"] = to_json(&t.variables());
                    out["max_lag"] = json!(t.max_lag());
                    out["lagged_edges"] = json!(t.edges().len());
                }
                Model::PomTable(p) => {
                    out["units"] = json!(p.len());
                    out["covariates"] = json!(p.covariate_count());
                }
                _ => {}
            }
            Ok(out)
        }
        Query::Dsep { x, y, given } => {
            let sep = d_separated(graph()?, &node_set(x), &node_set(y), &node_set(given))
                .map_err(query_err)?;
            Ok(json!({"d_separated": sep}))
        }
        Query::Backdoor {
            treatment,
            outcome,
            adjust,
        } => {
            let g = graph()?;
            let t = node_set(treatment);
            let mut paths = BTreeMap::new();
            for ti in &t {
                let ps: Vec<String> = backdoor_paths(g, ti.as_str(), outcome)
                    .map_err(query_err)?
                    .iter()
                    .map(|p| p.to_string())
                    .collect();
                paths.insert(ti.to_string(), ps);
            }
            let (w, ok) = match adjust {
                Some(a) => {
                    let w = node_set(a);
                    let ok = check_backdoor(g, &t, outcome, &w).map_err(query_err)?;
                    (w, ok)
                }
                None => (
                    default_adjustment_set(g, &t, outcome).map_err(query_err)?,
                    true,
                ),
            };
            Ok(json!({"adjustment": to_json(&w), "satisfied": ok, "backdoor_paths": paths}))
        }
        Query::Identify { sources, target } => {
            let g = graph()?;
            let q = QuerySpec::new(target.as_str(), split_list(sources));
            let id = fci(g, &q).map_err(identify_err)?;
            Ok(json!({
                "expression": render_expression(&id.expression),
                "tree": to_json(&*id.expression),
                "size": id.expression.size(),
                "dropped": to_json(&id.dropped),
            }))
        }
        Query::Do {
            assignments,
            target,
        } => match m {
            Model::CptModel(c) => {
                let target = target.as_deref().ok_or_else(|| {
                    InterfaceError::Usage("`do` on a cpt_model needs --target".into())
                })?;
                let values = label_pairs(assignments)?;
                let id = fci(c.graph(), &QuerySpec::with_values(target, values.clone()))
                    .map_err(identify_err)?;
                let d = evaluate_expression(&id.expression, c, &values).map_err(identify_err)?;
                Ok(json!({
                    "target": target,
                    "distribution": d.as_map(),
                    "expression": render_expression(&id.expression),
                    "dropped": to_json(&id.dropped),
                }))
            }
            Model::LinearScm(s) => {
                let means = s
                    .interventional_mean(&real_pairs(assignments)?)
                    .map_err(query_err)?;
                Ok(restrict(to_json(&means), target.as_deref())?)
            }
            other => Err(mismatch(other)),
        },
        Query::Counterfactual {
            observe,
            assignments,
            target,
        } => match m {
            Model::LinearScm(s) => {
                let cf = s
                    .counterfactual(&real_pairs(observe)?, &real_pairs(assignments)?)
                    .map_err(query_err)?;
                restrict(to_json(&cf), target.as_deref())
            }
            Model::CptModel(c) => {
                let e = c
                    .counterfactual(&label_pairs(observe)?, &label_pairs(assignments)?)
                    .unwrap_err();
                Err(query_err(e))
            }
            other => Err(mismatch(other)),
        },
        Query::Simulate { n } => match m {
            Model::LinearScm(s) => Ok(json!({"rows": s.simulate(*n, seed).map_err(query_err)?})),
            Model::CptModel(c) => Ok(json!({"rows": c.simulate(*n, seed).map_err(query_err)?})),
            other => Err(mismatch(other)),
        },
        Query::Unroll { horizon } => match m {
            Model::StbnTemplate(t) => {
                let u = unroll(t, *horizon).map_err(query_err)?;
                let edges: Vec<[&NodeId; 2]> = u.dag().edges().map(|(a, b)| [a, b]).collect();
                Ok(json!({"horizon": horizon, "nodes": u.dag().nodes(), "edges": edges}))
            }
            other => Err(mismatch(other)),
        },
        Query::StbnQuery {
            cpts,
            target,
            schedule,
        } => match m {
            Model::StbnTemplate(t) => {
                let cpts = match parse_model(&read(cpts)?)? {
                    Model::CptModel(c) => c,
                    other => {
                        return Err(InterfaceError::Usage(format!(
                            "--cpts must be a cpt_model document, got {}",
                            other.kind()
                        )))
                    }
                };
                let vars = t.variables().len().max(1);
                let horizon = cpts.graph().len() / vars;
                let u = unroll(t, horizon).map_err(query_err)?;
                let (tv, tt) = composite(target)?;
                let mut plan = BTreeMap::new();
                for (k, v) in pairs(schedule)? {
                    plan.insert(composite(k)?, v.to_owned());
                }
                let (id, d) =
                    stbn_query(&u, &cpts, (tv.as_str(), tt), &plan).map_err(|e| match e {
                        crate::stbn::StbnError::Identify(i) => identify_err(i),
                        other => query_err(other),
                    })?;
                Ok(json!({
                    "target": target,
                    "distribution": d.as_map(),
                    "expression": render_expression(&id.expression),
                    "dropped": to_json(&id.dropped),
                }))
            }
            other => Err(mismatch(other)),
        },
        Query::Match { method, radius } => match m {
            Model::PomTable(p) => {
                let report = match method {
                    MatchKind::Exact => exact_match_impute(p),
                    MatchKind::Caliper => {
                        let r = radius.ok_or_else(|| {
                            InterfaceError::Usage("caliper matching needs --radius".into())
                        })?;
                        caliper_match_impute(&as_real(p)?, r)
                    }
                }
                .map_err(query_err)?;
                let mut out = to_json(&report);
                out["att"] = to_json(&report.att());
                Ok(out)
            }
            other => Err(mismatch(other)),
        },
        Query::Ate {
            treatment,
            outcome,
            adjust,
        } => match m {
            Model::PomTable(p) => Ok(to_json(&ate(p).map_err(query_err)?)),
            Model::CptModel(c) => {
                let need = |v: &Option<String>, flag: &str| {
                    v.clone().ok_or_else(|| {
                        InterfaceError::Usage(format!("`ate` on a cpt_model needs --{flag}"))
                    })
                };
                let (t, y) = (need(treatment, "treatment")?, need(outcome, "outcome")?);
                let x = node_set(adjust);
                let e1 = adjusted_expectation(c, &t, &y, &x, "1").map_err(query_err)?;
                let e0 = adjusted_expectation(c, &t, &y, &x, "0").map_err(query_err)?;
                Ok(json!({"e_y1": e1, "e_y0": e0, "ate": e1 - e0, "adjustment": to_json(&x)}))
            }
            other => Err(mismatch(other)),
        },
        Query::Mediate {
            treatment,
            mediator,
            outcome,
            n,
            alpha,
            ..
        } => match m {
            Model::LinearScm(s) => {
                let rows: Vec<(f64, f64, f64)> = s
                    .simulate(*n, seed)
                    .map_err(query_err)?
                    .iter()
                    .map(|r| {
                        let get = |v: &str| {
                            r.get(v)
                                .copied()
                                .ok_or_else(|| query_err(format!("unknown node `{v}`")))
                        };
                        Ok((get(treatment)?, get(mediator)?, get(outcome)?))
                    })
                    .collect::<Result<_, InterfaceError>>()?;
                mediation_report(&rows, *alpha)
            }
            other => Err(mismatch(other)),
        },
    }
}

fn restrict(v: Value, target: Option<&str>) -> Result<Value, InterfaceError> {
    let Some(t) = target else { return Ok(v) };
    let x = v
        .get(t)
        .cloned()
        .ok_or_else(|| query_err(format!("unknown node `{t}`")))?;
    Ok(json!({ t: x }))
}

fn as_real(p: &PomTable) -> Result<PomTable, InterfaceError> {
    let rows = p
        .rows()
        .iter()
        .map(|r| {
            let covariates = r
                .covariates
                .iter()
                .map(|c| match c {
                    Covariate::Real(x) => Ok(Covariate::Real(*x)),
                    Covariate::Category(s) => s.parse().map(Covariate::Real).map_err(|_| {
                        query_err(format!("unit `{}`: covariate `{s}` is not numeric", r.unit))
                    }),
                })
                .collect::<Result<_, _>>()?;
            Ok(PomRow {
                covariates,
                ..r.clone()
            })
        })
        .collect::<Result<_, InterfaceError>>()?;
    PomTable::new(rows).map_err(query_err)
}

fn mediation_csv(
    text: &str,
    t: &str,
    m: &str,
    y: &str,
) -> Result<Vec<(f64, f64, f64)>, InterfaceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(query_err)?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| query_err(format!("column `{name}` not in data header")))
    };
    let (ti, mi, yi) = (col(t)?, col(m)?, col(y)?);
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(query_err)?;
            let num = |j: usize| {
                rec[j].parse::<f64>().map_err(|_| {
                    query_err(format!("data row {}: `{}` is not a number", i + 1, &rec[j]))
                })
            };
            Ok((num(ti)?, num(mi)?, num(yi)?))
        })
        .collect()
}

fn mediation_report(rows: &[(f64, f64, f64)], alpha: f64) -> Result<Value, InterfaceError> {
    let fit = fit_mediation(rows).map_err(query_err)?;
    let steps = causal_steps(&fit, alpha).map_err(query_err)?;
    Ok(json!({
        "fit": to_json(&fit),
        "indirect": fit.indirect(),
        "causal_steps": to_json(&steps),
        "sobel": to_json(&sobel_test(&fit)),
        "difference": to_json(&difference_test(&fit)),
    }))
}

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// Applies [`round_sig`] to every float in `v`; integers are left alone.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect())
        }
        other => other,
    }
}

/// Renders a result in the requested format, newline-terminated.
pub fn render_output(v: &Value, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(v).expect("serializable");
            s.push('\n');
            s
        }
        OutputFormat::Table => {
            let mut lines = Vec::new();
            flatten("", v, &mut lines);
            let width = lines
                .iter()
                .map(|(k, _)| k.chars().count())
                .max()
                .unwrap_or(0);
            let mut s = String::new();
            for (k, val) in lines {
                let _ = writeln!(s, "{k:<width$}  {val}");
            }
            s
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(o) if !o.is_empty() => {
            for (k, x) in o {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) if !a.is_empty() => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_owned(), s.clone())),
        other => out.push((prefix.to_owned(), other.to_string())),
    }
}
