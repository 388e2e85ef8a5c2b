//! Fix-and-optimize large neighborhood search: each iteration frees a
//! sampled handful of activities (battery variables stay free throughout),
//! optimizes the freed subset, and accepts only improvements beyond a
//! relative tolerance.
//!
//! The control flow mirrors the matheuristic it comes from; the sub-solver
//! is native (exhaustive enumeration when the freed space is small enough,
//! first-improvement local search otherwise, then an exact battery DP)
//! instead of a warm-started commercial MIP solver.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SolveError;
use crate::mip::activity_domains;
use crate::model::{ActivityKind, Instance, Schedule};

use super::battery::{optimize_battery, optimize_battery_total};
use super::local_search::{run_passes, LocalSearchParams};
use super::report::{Objective, SolveReport, TerminationReason};
use super::state::SearchState;

#[derive(Debug, Clone, Copy)]
pub struct FixOptParams {
    /// Recurring activities sampled per iteration (`r#`).
    pub recurring_sample: usize,
    /// Once-off activities sampled per iteration (`a#`).
    pub onceoff_sample: usize,
    pub max_iter: usize,
    pub patience: usize,
    /// Relative improvement needed to accept (0.001% = 1e-5).
    pub tol: f64,
    /// Per-iteration effort: enumeration leaves or local-search evaluations.
    pub effort: u64,
    /// Peak-cap candidates tried by the battery re-optimization.
    pub battery_sweep: usize,
    pub seed: u64,
}

impl Default for FixOptParams {
    fn default() -> Self {
        FixOptParams {
            recurring_sample: 10,
            onceoff_sample: 5,
            max_iter: 150,
            patience: 15,
            tol: 1e-5,
            effort: 20_000,
            battery_sweep: 12,
            seed: 0,
        }
    }
}

impl FixOptParams {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.recurring_sample == 0 && self.onceoff_sample == 0 {
            return Err(SolveError::BadParams(
                "recurring and once-off sample sizes cannot both be zero".into(),
            ));
        }
        if self.tol < 0.0 {
            return Err(SolveError::BadParams("tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

pub fn fix_and_optimize(
    instance: &Instance,
    init: &Schedule,
    params: FixOptParams,
    objective: &Objective,
) -> Result<SolveReport, SolveError> {
    fix_and_optimize_capped(instance, init, params, objective, None)
}

/// Fix-and-optimize with an optional hard peak cap (used by the two-stage
/// strategy). Under a cap the battery step minimizes energy below the cap;
/// otherwise it sweeps caps to minimize total cost.
pub(super) fn fix_and_optimize_capped(
    instance: &Instance,
    init: &Schedule,
    params: FixOptParams,
    objective: &Objective,
    peak_cap: Option<f64>,
) -> Result<SolveReport, SolveError> {
    params.validate()?;
    let started = Instant::now();
    let domains = activity_domains(instance);
    let mut state = SearchState::new(instance, &domains, objective, init.clone(), peak_cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let recurring_pool: Vec<usize> = (0..instance.activities.len())
        .filter(|i| instance.activities[*i].kind == ActivityKind::Recurring)
        .collect();
    let onceoff_pool: Vec<usize> = (0..instance.activities.len())
        .filter(|i| instance.activities[*i].kind == ActivityKind::OnceOff)
        .collect();

    let mut best_value = state.cost();
    let mut best_schedule = state.schedule.clone();
    let mut trace = vec![best_value];
    let mut count = 0usize;
    let mut iter = 0usize;
    while iter <= params.max_iter && count <= params.patience {
        // Sample r# recurring and a# once-off activities without
        // replacement; the freed subset is optimized, the rest stays fixed.
        let mut free: Vec<usize> = Vec::new();
        let mut pool = recurring_pool.clone();
        let (sampled, _) = pool.partial_shuffle(&mut rng, params.recurring_sample);
        free.extend_from_slice(sampled);
        let mut pool = onceoff_pool.clone();
        let (sampled, _) = pool.partial_shuffle(&mut rng, params.onceoff_sample);
        free.extend_from_slice(sampled);
        free.sort_unstable();

        let snapshot = state.schedule.clone();
        if state.subset_space(&free) <= params.effort as f64 {
            state.enumerate_subset(&free, params.effort);
        } else {
            let free_set: HashSet<usize> = free.iter().copied().collect();
            let mut budget = params.effort;
            let ls_params = LocalSearchParams {
                budget: params.effort,
                seed: params.seed ^ iter as u64,
                battery_flips: false,
                onceoff_samples: 64,
            };
            let mut subtrace = Vec::new();
            run_passes(
                &mut state,
                &mut rng,
                &mut budget,
                ls_params,
                Some(&free_set),
                &mut subtrace,
            );
        }
        // Storage stays free every iteration: re-dispatch exactly.
        let plans = match peak_cap {
            Some(cap) => optimize_battery(instance, &state.schedule, Some(cap))?,
            None => {
                optimize_battery_total(instance, &state.schedule, objective, params.battery_sweep)?
            }
        };
        state.set_battery_plans(plans);

        let new_value = state.cost();
        if (best_value - new_value) / best_value >= params.tol {
            best_value = new_value;
            best_schedule = state.schedule.clone();
            count = 0;
        } else {
            count += 1;
            state.restore(snapshot);
        }
        iter += 1;
        trace.push(best_value);
    }

    let termination = if count > params.patience {
        TerminationReason::Patience
    } else {
        TerminationReason::MaxIter
    };
    let objective_value = objective.cost(instance, &best_schedule)?;
    Ok(SolveReport {
        schedule: best_schedule,
        objective: objective_value,
        trace,
        wall_time: started.elapsed(),
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::check_feasibility;
    use crate::generator::{
        default_grid, generate_instance, synthetic_series, GeneratorParams, InstanceSize,
    };
    use crate::heuristics::construct::construct_initial;

    #[test]
    fn zero_patience_without_improvement_stops_after_one_iteration() {
        let grid = default_grid();
        let series = synthetic_series(51, &grid, 4);
        let gparams = GeneratorParams::new(InstanceSize::Small, 51);
        let (instance, tentative) = generate_instance(&gparams, &series, &grid).unwrap();
        let params = FixOptParams {
            recurring_sample: 1,
            onceoff_sample: 0,
            max_iter: 100,
            patience: 0,
            tol: f64::INFINITY, // nothing can be accepted
            effort: 10,
            battery_sweep: 0,
            seed: 3,
        };
        let report =
            fix_and_optimize(&instance, &tentative, params, &Objective::Deterministic).unwrap();
        assert_eq!(report.termination, TerminationReason::Patience);
        assert_eq!(report.schedule, tentative);
        // iter 0 ran, then count(1) > patience(0).
        assert_eq!(report.trace.len(), 2);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(FixOptParams {
            recurring_sample: 0,
            onceoff_sample: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(FixOptParams {
            tol: -0.5,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn lns_improves_over_the_initial_solution() {
        let grid = default_grid();
        let series = synthetic_series(52, &grid, 4);
        let gparams = GeneratorParams::new(InstanceSize::Small, 52);
        let (instance, _) = generate_instance(&gparams, &series, &grid).unwrap();
        let init = construct_initial(&instance).unwrap();
        let init_cost = Objective::Deterministic.cost(&instance, &init).unwrap();
        let params = FixOptParams {
            max_iter: 12,
            patience: 6,
            effort: 3_000,
            battery_sweep: 6,
            seed: 9,
            ..Default::default()
        };
        let report =
            fix_and_optimize(&instance, &init, params, &Objective::Deterministic).unwrap();
        assert!(report.objective < init_cost);
        assert!(check_feasibility(&instance, &report.schedule).is_empty());
        for w in report.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }
}
