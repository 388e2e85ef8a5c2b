//! Solvers: an exact enumeration oracle for micro instances, constructive
//! initial schedules, first-improvement local search, fix-and-optimize large
//! neighborhood search, exact battery dispatch by dynamic programming, and
//! the two-stage peak-cap strategy.
//!
//! All solvers are deterministic given their seed and parameters, only ever
//! return schedules that pass the evaluator with zero violations, and report
//! objectives re-derived through the evaluator.

pub mod battery;
pub mod construct;
pub mod exact;
pub mod fix_opt;
pub mod local_search;
pub mod report;
pub mod state;
pub mod two_stage;

pub use battery::{induced_load, optimize_battery, optimize_battery_total};
pub use construct::{construct_initial, construct_initial_with, topological_order, ConstructParams};
pub use exact::{solve_exact, DEFAULT_LEAF_CAP};
pub use fix_opt::{fix_and_optimize, FixOptParams};
pub use local_search::{local_search, LocalSearchParams};
pub use report::{Objective, SolveReport, TerminationReason};
pub use two_stage::{peak_lower_bound, two_stage_peak_cap, TwoStageOutcome, TwoStageParams};
