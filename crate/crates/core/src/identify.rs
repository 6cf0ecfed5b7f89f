//! Forward identification of `P(target | do(sources))`.
//!
//! [`fci`] walks forward from the intervened sources toward the target:
//!
//! 1. Sources whose every directed path to the target is intercepted by
//!    another source (or who have none) are dropped.
//! 2. If every remaining source is a parent of the target the answer is the
//!    conditional `P(target | sources)`, or, when a back-door path is open,
//!    the adjusted sum `Σ_w P(target | sources, W=w) P(W=w)` with `W` the
//!    parents of the sources.
//! 3. Otherwise the first mediators (ancestors of the target whose parents
//!    are all current sources) are summed out:
//!    `Σ_m P(target | do(sources, M=m)) ∏_k P(M_k=m_k | do(Pa(M_k)))`,
//!    and every `do` factor is solved recursively.
//!
//! Each step binds at least one new node that lies strictly between the
//! sources and the target, so the recursion terminates. Identical sub-queries
//! are shared, which keeps the expression DAG-shaped.
//!
//! # Rendering grammar
//!
//! [`render_expression`] produces:
//!
//! ```text
//! expr     := sum | product
//! sum      := "Σ_{" var ("," var)* "} " product
//! product  := factor (" " factor)*
//! factor   := "P(" slots ("|" slots)? ")" | "[" sum "]"
//! slots    := slot ("," slot)*
//! slot     := LABEL | LABEL "=" var
//! var      := lowercase(LABEL)
//! ```
//!
//! A slot is written `LABEL=var` when an enclosing sum binds it and bare
//! otherwise (the target and the intervened sources).

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::dseparation::{backdoor_holds, parents_adjustment};
use crate::graph::{Dag, GraphError, NodeId, Path};
use crate::oracle::{enumerate_joint, Distribution, Joint, OracleError};
use crate::scm::{CptModel, InterventionSet, ScmError};

/// Tolerance on the normalization of evaluated distributions.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentifyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error("target `{0}` is also a source")]
    TargetAmongSources(String),
    #[error("at least one source is required")]
    NoSources,
    #[error("no directed path of length two or more from `{0}` to `{1}`")]
    NoQualifyingPath(String, String),
    #[error("slot `{0}` is free in the expression but has no binding")]
    UnboundSlot(String),
    #[error("conditioning event {0} has probability zero")]
    ZeroProbability(String),
    #[error("evaluated distribution sums to {0}")]
    NotNormalized(f64),
}

/// Symbolic distribution formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expression {
    /// `P(target | given)`
    Conditional {
        target: NodeId,
        given: Vec<NodeId>,
    },
    /// `P(nodes)`
    Marginal {
        nodes: Vec<NodeId>,
    },
    /// Sum of `body` over the joint domain of `bound`.
    SumOver {
        bound: Vec<NodeId>,
        body: Arc<Expression>,
    },
    Product {
        factors: Vec<Arc<Expression>>,
    },
}

impl Expression {
    /// The node whose distribution this expression describes.
    pub fn target(&self) -> &NodeId {
        match self {
            Expression::Conditional { target, .. } => target,
            Expression::Marginal { nodes } => &nodes[0],
            Expression::SumOver { body, .. } => body.target(),
            Expression::Product { factors } => factors[0].target(),
        }
    }

    /// Nodes referenced but not bound by an enclosing sum.
    pub fn free_nodes(&self) -> BTreeSet<NodeId> {
        match self {
            Expression::Conditional { target, given } => {
                std::iter::once(target).chain(given).cloned().collect()
            }
            Expression::Marginal { nodes } => nodes.iter().cloned().collect(),
            Expression::SumOver { bound, body } => {
                let mut f = body.free_nodes();
                for b in bound {
                    f.remove(b);
                }
                f
            }
            Expression::Product { factors } => {
                factors.iter().flat_map(|f| f.free_nodes()).collect()
            }
        }
    }

    /// Number of nodes in the expanded tree.
    pub fn size(&self) -> usize {
        match self {
            Expression::Conditional { .. } | Expression::Marginal { .. } => 1,
            Expression::SumOver { body, .. } => 1 + body.size(),
            Expression::Product { factors } => 1 + factors.iter().map(|f| f.size()).sum::<usize>(),
        }
    }

    /// Every bound node occurs in its body and no node is bound twice on a
    /// root-to-leaf branch.
    pub fn is_well_formed(&self) -> bool {
        fn walk(e: &Expression, scope: &mut Vec<NodeId>) -> bool {
            match e {
                Expression::Conditional { .. } | Expression::Marginal { .. } => true,
                Expression::Product { factors } => factors.iter().all(|f| walk(f, scope)),
                Expression::SumOver { bound, body } => {
                    let free = body.free_nodes();
                    if bound.iter().any(|b| scope.contains(b) || !free.contains(b)) {
                        return false;
                    }
                    let mark = scope.len();
                    scope.extend(bound.iter().cloned());
                    let ok = walk(body, scope);
                    scope.truncate(mark);
                    ok
                }
            }
        }
        walk(self, &mut Vec::new())
    }
}

/// One target and an ordered set of intervened sources.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    pub target: NodeId,
    pub sources: Vec<NodeId>,
    pub source_values: Option<InterventionSet<String>>,
}

impl QuerySpec {
    pub fn new(
        target: impl Into<NodeId>,
        sources: impl IntoIterator<Item = impl Into<NodeId>>,
    ) -> Self {
        QuerySpec {
            target: target.into(),
            sources: sources.into_iter().map(Into::into).collect(),
            source_values: None,
        }
    }

    /// Query whose sources are the keys of `values`.
    pub fn with_values(target: impl Into<NodeId>, values: InterventionSet<String>) -> Self {
        QuerySpec {
            target: target.into(),
            sources: values.keys().cloned().collect(),
            source_values: Some(values),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// No directed path to the target at all; the source is independent of it.
    NoDirectedPath,
    /// Every directed path to the target passes through another source.
    Screened,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedSource {
    pub node: NodeId,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Identification {
    pub expression: Arc<Expression>,
    pub dropped: Vec<DroppedSource>,
}

/// All simple directed paths from each source to `target`, sorted by label sequence.
pub fn causal_pathways(
    g: &Dag,
    sources: &BTreeSet<NodeId>,
    target: &str,
) -> Result<Vec<Path>, IdentifyError> {
    if sources.iter().any(|s| s.as_str() == target) {
        return Err(IdentifyError::TargetAmongSources(target.to_owned()));
    }
    g.require(target)?;
    let mut out = Vec::new();
    for s in sources {
        out.extend(g.directed_paths(s.as_str(), target, &BTreeSet::new())?);
    }
    out.sort_by(|a, b| a.nodes().cmp(b.nodes()));
    Ok(out)
}

/// Children of `source` that lie on a directed path to `target`, excluding
/// the target itself.
pub fn first_mediators(
    g: &Dag,
    source: &str,
    target: &str,
) -> Result<BTreeSet<NodeId>, IdentifyError> {
    let s = g.require(source)?;
    let t = g.require(target)?;
    if s == t {
        return Err(IdentifyError::TargetAmongSources(target.to_owned()));
    }
    let anc = g.ancestors_mask(&[t]);
    let out: BTreeSet<NodeId> = g
        .children_idx(s)
        .iter()
        .filter(|&&c| c != t && anc[c])
        .map(|&c| g.label(c).clone())
        .collect();
    if out.is_empty() {
        return Err(IdentifyError::NoQualifyingPath(
            source.to_owned(),
            target.to_owned(),
        ));
    }
    Ok(out)
}

/// Symbolic identification of `P(q.target | do(q.sources))`.
///
/// The graph is taken to be causally sufficient.
pub fn fci(g: &Dag, q: &QuerySpec) -> Result<Identification, IdentifyError> {
    if q.sources.is_empty() {
        return Err(IdentifyError::NoSources);
    }
    if q.sources.contains(&q.target) {
        return Err(IdentifyError::TargetAmongSources(q.target.to_string()));
    }
    let target = g.require(q.target.as_str())?;
    let mut sources: Vec<usize> = q
        .sources
        .iter()
        .map(|s| g.require(s.as_str()))
        .collect::<Result<_, _>>()?;
    sources.sort_unstable();
    sources.dedup();

    let anc = g.ancestors_mask(&[target]);
    let relevant = forward_relevant(g, &sources, target);
    let dropped = sources
        .iter()
        .filter(|s| !relevant.contains(s))
        .map(|&s| {
            let reason = if anc[s] {
                DropReason::Screened
            } else {
                log::warn!(
                    "source `{}` has no directed path to `{}`; treated as independent",
                    g.label(s),
                    g.label(target)
                );
                DropReason::NoDirectedPath
            };
            DroppedSource {
                node: g.label(s).clone(),
                reason,
            }
        })
        .collect();
    let mut solver = Solver {
        g,
        memo: HashMap::new(),
    };
    Ok(Identification {
        expression: solver.solve(&sources, target),
        dropped,
    })
}

/// Sources with a directed path to `target` that avoids every other source.
fn forward_relevant(g: &Dag, sources: &[usize], target: usize) -> Vec<usize> {
    let (reached, _) = cut_ancestors(g, sources, target);
    sources.iter().copied().filter(|&s| reached[s]).collect()
}

/// Ancestors of `target` once the edges into `sources` are cut, and the
/// subset of those that are not sources (the target excluded).
fn cut_ancestors(g: &Dag, sources: &[usize], target: usize) -> (Vec<bool>, Vec<usize>) {
    let mut reached = vec![false; g.len()];
    reached[target] = true;
    let mut stack = vec![target];
    while let Some(v) = stack.pop() {
        if v != target && sources.contains(&v) {
            continue;
        }
        for &p in g.parents_idx(v) {
            if !reached[p] {
                reached[p] = true;
                stack.push(p);
            }
        }
    }
    let between = (0..g.len())
        .filter(|&v| reached[v] && v != target && !sources.contains(&v))
        .collect();
    (reached, between)
}

struct Solver<'g> {
    g: &'g Dag,
    memo: HashMap<(Vec<usize>, usize), Arc<Expression>>,
}

impl Solver<'_> {
    fn labels(&self, idx: &[usize]) -> Vec<NodeId> {
        idx.iter().map(|&i| self.g.label(i).clone()).collect()
    }

    fn by_topo(&self, mut idx: Vec<usize>) -> Vec<usize> {
        idx.sort_by_key(|&i| self.g.topo_position(i));
        idx
    }

    fn solve(&mut self, sources: &[usize], target: usize) -> Arc<Expression> {
        let g = self.g;
        let (reached, between) = cut_ancestors(g, sources, target);
        let relevant = self.by_topo(sources.iter().copied().filter(|&s| reached[s]).collect());
        let key = (relevant.clone(), target);
        if let Some(e) = self.memo.get(&key) {
            return Arc::clone(e);
        }
        let e = Arc::new(self.expand(&relevant, &between, target));
        self.memo.insert(key, Arc::clone(&e));
        e
    }

    fn expand(&mut self, sources: &[usize], between: &[usize], target: usize) -> Expression {
        let g = self.g;
        if sources.is_empty() {
            return Expression::Marginal {
                nodes: vec![g.label(target).clone()],
            };
        }
        let direct = sources.iter().all(|s| g.parents_idx(target).contains(s));
        if direct {
            if backdoor_holds(g, sources, target, &[]) {
                return Expression::Conditional {
                    target: g.label(target).clone(),
                    given: self.labels(sources),
                };
            }
            let w = parents_adjustment(g, sources);
            if !w.contains(&target) && backdoor_holds(g, sources, target, &w) {
                let given: Vec<usize> = sources.iter().chain(&w).copied().collect();
                return Expression::SumOver {
                    bound: self.labels(&w),
                    body: Arc::new(Expression::Product {
                        factors: vec![
                            Arc::new(Expression::Conditional {
                                target: g.label(target).clone(),
                                given: self.labels(&given),
                            }),
                            Arc::new(Expression::Marginal {
                                nodes: self.labels(&w),
                            }),
                        ],
                    }),
                };
            }
            log::debug!(
                "parents of {:?} fail the back-door check for `{}`; expanding forward",
                self.labels(sources),
                g.label(target)
            );
        }

        let frontier: Vec<usize> = between
            .iter()
            .copied()
            .filter(|&v| g.parents_idx(v).iter().all(|p| sources.contains(p)))
            .collect();
        let children: Vec<usize> = frontier
            .iter()
            .copied()
            .filter(|&v| !g.parents_idx(v).is_empty())
            .collect();
        let mediators = self.by_topo(if children.is_empty() {
            frontier
        } else {
            children
        });
        debug_assert!(
            !mediators.is_empty(),
            "forward expansion must make progress"
        );

        let mut next: Vec<usize> = sources.iter().chain(&mediators).copied().collect();
        next.sort_unstable();
        let mut factors = vec![self.solve(&next, target)];
        for &m in &mediators {
            let parents = g.parents_idx(m).to_vec();
            factors.push(self.solve(&parents, m));
        }
        Expression::SumOver {
            bound: self.labels(&mediators),
            body: Arc::new(Expression::Product { factors }),
        }
    }
}

/// Evaluates `e` against the exact joint of `m`, returning the distribution
/// of `e.target()`. Every other free slot must be bound.
pub fn evaluate_expression(
    e: &Expression,
    m: &CptModel,
    bindings: &InterventionSet<String>,
) -> Result<Distribution, IdentifyError> {
    let joint = enumerate_joint(m)?;
    evaluate_with_joint(e, m, &joint, bindings)
}

/// As [`evaluate_expression`], reusing an already enumerated joint of `m`.
pub fn evaluate_with_joint(
    e: &Expression,
    m: &CptModel,
    joint: &Joint,
    bindings: &InterventionSet<String>,
) -> Result<Distribution, IdentifyError> {
    let g = m.graph();
    let target = g.require(e.target().as_str())?;
    let mut env: Vec<Option<usize>> = vec![None; g.len()];
    for v in e.free_nodes() {
        if v == *e.target() {
            continue;
        }
        let value = bindings
            .get(&v)
            .ok_or_else(|| IdentifyError::UnboundSlot(v.to_string()))?;
        let i = g.require(v.as_str())?;
        env[i] = Some(m.value_index(v.as_str(), value)?);
    }
    let mut ev = Evaluator {
        g,
        joint,
        marginals: HashMap::new(),
        cache: HashMap::new(),
        free: HashMap::new(),
    };
    let domain = m
        .domain(e.target().as_str())
        .expect("target in model")
        .to_vec();
    let mut probs = Vec::with_capacity(domain.len());
    for k in 0..domain.len() {
        env[target] = Some(k);
        probs.push(ev.eval(e, &mut env)?);
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL || probs.iter().any(|p| *p < -NORMALIZATION_TOL) {
        return Err(IdentifyError::NotNormalized(total));
    }
    Ok(Distribution {
        node: e.target().clone(),
        values: domain,
        probs,
    })
}

struct Evaluator<'a> {
    g: &'a Dag,
    joint: &'a Joint,
    marginals: HashMap<Vec<usize>, Vec<f64>>,
    cache: HashMap<(usize, Vec<usize>), f64>,
    free: HashMap<usize, Vec<usize>>,
}

impl Evaluator<'_> {
    fn idx(&self, v: &NodeId) -> usize {
        self.g
            .index_of(v.as_str())
            .expect("expression nodes belong to the model")
    }

    fn table(&mut self, vars: &[usize]) -> &[f64] {
        let joint = self.joint;
        self.marginals
            .entry(vars.to_vec())
            .or_insert_with(|| joint.marginal(vars))
    }

    fn offset(&self, vars: &[usize], env: &[Option<usize>]) -> usize {
        vars.iter().fold(0, |acc, &v| {
            acc * self.joint.domains()[v].len() + env[v].expect("bound")
        })
    }

    fn eval(&mut self, e: &Expression, env: &mut Vec<Option<usize>>) -> Result<f64, IdentifyError> {
        match e {
            Expression::Marginal { nodes } => {
                let vars: Vec<usize> = nodes.iter().map(|n| self.idx(n)).collect();
                let off = self.offset(&vars, env);
                Ok(self.table(&vars)[off])
            }
            Expression::Conditional { target, given } => {
                let t = self.idx(target);
                let mut vars: Vec<usize> = given.iter().map(|n| self.idx(n)).collect();
                let base = self.offset(&vars, env);
                let card = self.joint.domains()[t].len();
                vars.push(t);
                let tv = env[t].expect("bound");
                let row = &self.table(&vars)[base * card..(base + 1) * card];
                let den: f64 = row.iter().sum();
                if den <= 0.0 {
                    let event = given
                        .iter()
                        .map(|n| {
                            let i = self.idx(n);
                            format!("{}={}", n, self.joint.domains()[i][env[i].expect("bound")])
                        })
                        .collect::<Vec<_>>()
                        .join(",");
                    return Err(IdentifyError::ZeroProbability(event));
                }
                Ok(row[tv] / den)
            }
            Expression::Product { factors } => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= self.eval(f, env)?;
                    if acc == 0.0 {
                        break;
                    }
                }
                Ok(acc)
            }
            Expression::SumOver { bound, body } => {
                let ptr = e as *const Expression as usize;
                let free = match self.free.get(&ptr) {
                    Some(f) => f.clone(),
                    None => {
                        let f: Vec<usize> = e.free_nodes().iter().map(|n| self.idx(n)).collect();
                        self.free.insert(ptr, f.clone());
                        f
                    }
                };
                let key = (ptr, free.iter().map(|&v| env[v].expect("bound")).collect());
                if let Some(&v) = self.cache.get(&key) {
                    return Ok(v);
                }
                let vars: Vec<usize> = bound.iter().map(|n| self.idx(n)).collect();
                let cards: Vec<usize> = vars
                    .iter()
                    .map(|&v| self.joint.domains()[v].len())
                    .collect();
                let saved: Vec<Option<usize>> = vars.iter().map(|&v| env[v]).collect();
                let mut x = vec![0usize; vars.len()];
                let mut total = 0.0;
                loop {
                    for (&v, &k) in vars.iter().zip(&x) {
                        env[v] = Some(k);
                    }
                    total += self.eval(body, env)?;
                    let mut i = x.len();
                    loop {
                        if i == 0 {
                            break;
                        }
                        i -= 1;
                        x[i] += 1;
                        if x[i] < cards[i] {
                            break;
                        }
                        x[i] = 0;
                    }
                    if x.iter().all(|&k| k == 0) {
                        break;
                    }
                }
                for (&v, k) in vars.iter().zip(saved) {
                    env[v] = k;
                }
                self.cache.insert(key, total);
                Ok(total)
            }
        }
    }
}

/// Probability-notation rendering; see the module docs for the grammar.
pub fn render_expression(e: &Expression) -> String {
    let mut out = String::new();
    render(e, &mut Vec::new(), false, &mut out);
    out
}

fn slot(n: &NodeId, bound: &[NodeId], out: &mut String) {
    if bound.contains(n) {
        let _ = write!(out, "{}={}", n, n.as_str().to_lowercase());
    } else {
        out.push_str(n.as_str());
    }
}

fn slots(ns: &[NodeId], bound: &[NodeId], out: &mut String) {
    for (i, n) in ns.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        slot(n, bound, out);
    }
}

fn render(e: &Expression, bound: &mut Vec<NodeId>, nested: bool, out: &mut String) {
    match e {
        Expression::Conditional { target, given } => {
            out.push_str("P(");
            slot(target, bound, out);
            if !given.is_empty() {
                out.push('|');
                slots(given, bound, out);
            }
            out.push(')');
        }
        Expression::Marginal { nodes } => {
            out.push_str("P(");
            slots(nodes, bound, out);
            out.push(')');
        }
        Expression::Product { factors } => {
            for (i, f) in factors.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                render(f, bound, true, out);
            }
        }
        Expression::SumOver { bound: vars, body } => {
            if nested {
                out.push('[');
            }
            out.push_str("Σ_{");
            let names: Vec<String> = vars.iter().map(|v| v.as_str().to_lowercase()).collect();
            out.push_str(&names.join(","));
            out.push_str("} ");
            let mark = bound.len();
            bound.extend(vars.iter().cloned());
            render(body, bound, false, out);
            bound.truncate(mark);
            if nested {
                out.push(']');
            }
        }
    }
}
