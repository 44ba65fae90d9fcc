//! Capacity-aware assignment of mediation cases to mediators.
//!
//! The crate estimates per-mediator value added (VA) from historical case
//! outcomes, maintains Gaussian beliefs over VA that update as new outcomes
//! arrive, and assigns incoming cases by solving a small quadratic program
//! that trades resolution probability against projected overload. A
//! discrete-event simulator benchmarks the QP policy against load-based and
//! greedy baselines, and a reporting layer aggregates runs into comparison
//! tables and figures.

pub mod belief;
pub mod corpus;
pub mod domain;
pub mod error;
pub mod policy;
pub mod qp;
pub mod report;
pub mod sim;
pub mod svg;
pub mod va;

pub use error::{Error, Result};
