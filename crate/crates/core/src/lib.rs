//! Greedy open-set indicator decompositions of nonnegative continuous
//! functions.
//!
//! Given `f: Ω → [0, ∞)` and a positive vanishing sequence `(a_j)` with
//! divergent sum, the greedy recursion `G_n = {f > a_n + Σ_{j<n} a_j 1_{G_j}}`
//! yields partial sums `S_n = Σ_{j≤n} a_j 1_{G_j}` that increase to `f`
//! uniformly. This crate builds that decomposition on sampled domains,
//! audits the topology of the level sets exactly over the rationals,
//! compares against the dyadic textbook approximation, and places smooth
//! bump minorants inside the certified-open parts of each level.

pub mod baseline;
pub mod coefficients;
pub mod decomposition;
pub mod domain;
pub mod dsl;
pub mod rational;
pub mod scalar;
pub mod semicontinuity;
pub mod smooth;

pub use coefficients::{CoefficientSequence, Continuation};
pub use decomposition::{decompose, error_report, verify_invariants, Decomposition, ErrorReport};
pub use domain::SampledDomain;
pub use dsl::{parse, FunctionAst};
pub use rational::Rational;
