//! Two-way greedy algorithms over binary allocation set systems, their
//! extensive-form implementation trees, OSP-graph cycle-monotonicity checks
//! with shortest-path payments, and exhaustive approximation-ratio analysis.

pub mod analysis;
pub mod error;
pub mod greedy;
pub mod instances;
pub mod ospgraph;
pub mod rational;
pub mod tree;

pub use error::{Error, Result};
pub use rational::Rational;
