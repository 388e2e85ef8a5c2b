//! Benchmark toolkit for a campus-microgrid scheduling problem: timetable
//! recurring and once-off activities across buildings and dispatch batteries
//! so the month's energy bill (wholesale energy + peak demand charge - once-off
//! profits) is minimized.
//!
//! The crate provides:
//!
//! - a data model for instances and schedules ([`model`]),
//! - a bit-exact evaluator for feasibility and cost ([`evaluator`]),
//! - a competition-style instance generator ([`generator`]),
//! - seasonal-median forecasting, quantile scenarios and forecast metrics
//!   ([`forecast`]),
//! - a solver-agnostic MILP builder with MPS/LP export ([`mip`]),
//! - exact and heuristic solvers ([`heuristics`]).
//!
//! Cost arithmetic is generic over [`scalar::Scalar`]; the aliases below fix
//! the production `f64` instantiation, while tests replay the same formulas
//! over exact rationals ([`scalar::Exact`]).

pub mod error;
pub mod evaluator;
pub mod forecast;
pub mod generator;
pub mod heuristics;
pub mod io;
pub mod mip;
pub mod model;
pub mod scalar;

pub use model::{
    Activity, ActivityId, ActivityKind, Battery, BatteryAction, BatteryId, Building, BuildingId,
    Instance, Schedule, TimeGrid,
};

/// Cost breakdown in production (`f64`) arithmetic.
pub type CostBreakdown = evaluator::CostBreakdownOf<f64>;
/// Cost breakdown in exact rational arithmetic.
pub type ExactCostBreakdown = evaluator::CostBreakdownOf<scalar::Exact>;
