//! Interventional and counterfactual inference over directed acyclic
//! graphical models.
//!
//! Queries can be answered three ways:
//!
//! - symbolically, by recursively factorizing `P(Y | do(S))` into
//!   observational conditionals ([`identify`]);
//! - structurally, through abduction, action and prediction on a
//!   structural causal model ([`scm`]);
//! - statistically, through potential-outcome matching and stratification
//!   ([`pom`], [`mediation`]).
//!
//! Every numeric answer over finite models can be checked against the exact
//! enumeration referee in [`oracle`]. The [`stbn`] module extends the same
//! machinery to lag-indexed templates unrolled over a finite horizon.

pub mod dseparation;
pub mod fixtures;
pub mod graph;
pub mod identify;
pub mod interface;
pub mod mediation;
mod ols;
pub mod oracle;
pub mod pom;
pub mod scm;
pub mod stbn;

pub use graph::{Dag, Direction, NodeId, Path, Relatives};
pub use identify::{Expression, QuerySpec};
pub use oracle::{Distribution, Joint};
pub use scm::{CptModel, LinearScm, NodeTable};
pub use stbn::{StbnTemplate, UnrolledStbn};
