//! Common solver reporting types and the objective the solvers optimize.

use std::time::Duration;

use crate::error::SolveError;
use crate::evaluator::{objective_cost, saa_cost, SaaMode};
use crate::model::{Instance, Schedule};

/// What the solver minimizes: the deterministic objective or a
/// scenario-aggregated one.
#[derive(Debug, Clone)]
pub enum Objective {
    Deterministic,
    Saa {
        scenarios: Vec<Vec<f64>>,
        mode: SaaMode,
    },
}

impl Objective {
    pub fn cost(&self, instance: &Instance, schedule: &Schedule) -> Result<f64, SolveError> {
        Ok(match self {
            Objective::Deterministic => objective_cost(instance, schedule).total,
            Objective::Saa { scenarios, mode } => {
                saa_cost(instance, schedule, scenarios, *mode)?
            }
        })
    }

    /// Validates scenario shapes once up front.
    pub fn validate(&self, instance: &Instance) -> Result<(), SolveError> {
        if let Objective::Saa { scenarios, .. } = self {
            if scenarios.is_empty() {
                return Err(SolveError::Eval(crate::error::EvalError::EmptyScenarioSet));
            }
            let t = instance.grid.total_slots();
            for (index, s) in scenarios.iter().enumerate() {
                if s.len() != t {
                    return Err(SolveError::Eval(
                        crate::error::EvalError::ScenarioLengthMismatch {
                            index,
                            len: s.len(),
                            expected: t,
                        },
                    ));
                }
            }
        }
        Ok(())
    }

    /// Base-load series the objective evaluates against (one per scenario).
    pub fn base_loads<'a>(&'a self, instance: &'a Instance) -> Vec<&'a [f64]> {
        match self {
            Objective::Deterministic => vec![&instance.net_base_load_kw],
            Objective::Saa { scenarios, .. } => scenarios.iter().map(|s| s.as_slice()).collect(),
        }
    }

    pub fn mode(&self) -> Option<SaaMode> {
        match self {
            Objective::Deterministic => None,
            Objective::Saa { mode, .. } => Some(*mode),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// Exhaustive search finished.
    Completed,
    /// Iteration limit hit.
    MaxIter,
    /// No accepted improvement for `patience` iterations.
    Patience,
    /// Evaluation budget exhausted.
    Budget,
    /// No improving move exists.
    LocalOptimum,
}

/// Outcome of a solver run. `objective` is always re-derived through the
/// evaluator on the returned schedule.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub schedule: Schedule,
    pub objective: f64,
    /// Incumbent objective per iteration (nonincreasing at accepted steps).
    pub trace: Vec<f64>,
    pub wall_time: Duration,
    pub termination: TerminationReason,
}
