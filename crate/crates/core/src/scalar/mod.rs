//! Scalar calculus of the greedy recursion: pointwise traces, exact level
//! sets `U_n` with `G_n = f⁻¹(U_n)`, and their openness audit.

pub mod audit;
pub mod expand;
pub mod interval;
pub mod levels;
pub mod table;

pub use audit::{audit, AuditError, AuditOptions, OpennessAuditReport};
pub use expand::{derived_bound, expand_point, expand_with, right_limit_bits, ExpansionTrace};
pub use interval::{check_openness, Interval, OpennessCheck, OpennessVerdict, RationalIntervalSet};
pub use levels::{level_sets, level_sets_with_cap, LevelSet, LevelSetError, LevelSets, PiecewiseConstantProfile};
pub use table::{LevelTable, ValueExpansion};
