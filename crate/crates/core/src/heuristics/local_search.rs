//! First-improvement hill climbing over placement and battery moves.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SolveError;
use crate::mip::activity_domains;
use crate::model::{ActivityKind, BatteryAction, Instance, Schedule};

use super::report::{Objective, SolveReport, TerminationReason};
use super::state::{Move, SearchState};

/// Accept a move only when it improves by more than this (guards against
/// float dust cycling).
const MIN_IMPROVEMENT: f64 = 1e-9;

/// When a once-off has more placement options than this, each pass samples
/// a subset instead of enumerating them all.
const ONCEOFF_ENUMERATION_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct LocalSearchParams {
    /// Candidate-evaluation budget (0 returns the input unchanged).
    pub budget: u64,
    pub seed: u64,
    /// Include single-slot battery flips in the neighborhood.
    pub battery_flips: bool,
    /// Sampled (start, building) pairs per once-off per pass when the full
    /// set is too large.
    pub onceoff_samples: usize,
}

impl Default for LocalSearchParams {
    fn default() -> Self {
        LocalSearchParams {
            budget: 200_000,
            seed: 0,
            battery_flips: true,
            onceoff_samples: 64,
        }
    }
}

/// Hill climbing from a feasible schedule: every accepted move keeps
/// feasibility and strictly decreases the objective.
pub fn local_search(
    instance: &Instance,
    schedule: &Schedule,
    params: LocalSearchParams,
    objective: &Objective,
) -> Result<SolveReport, SolveError> {
    let started = Instant::now();
    let domains = activity_domains(instance);
    let mut state = SearchState::new(
        instance,
        &domains,
        objective,
        schedule.clone(),
        None,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut budget = params.budget;
    let mut trace = vec![state.cost()];
    let termination = run_passes(&mut state, &mut rng, &mut budget, params, None, &mut trace);
    let objective_value = objective.cost(instance, &state.schedule)?;
    Ok(SolveReport {
        schedule: state.schedule,
        objective: objective_value,
        trace,
        wall_time: started.elapsed(),
        termination,
    })
}

/// Shared pass loop; `free` restricts moves to a subset of activities (the
/// fix-and-optimize neighborhoods).
pub(super) fn run_passes(
    state: &mut SearchState<'_>,
    rng: &mut ChaCha8Rng,
    budget: &mut u64,
    params: LocalSearchParams,
    free: Option<&HashSet<usize>>,
    trace: &mut Vec<f64>,
) -> TerminationReason {
    loop {
        if *budget == 0 {
            return TerminationReason::Budget;
        }
        let mut moves = candidate_moves(state, rng, params, free);
        moves.shuffle(rng);
        let mut improved = false;
        for mv in moves {
            if *budget == 0 {
                return TerminationReason::Budget;
            }
            *budget -= 1;
            if let Some(new_cost) = state.try_move(mv) {
                if new_cost < state.cost() - MIN_IMPROVEMENT {
                    state.apply_move(mv);
                    improved = true;
                }
            }
        }
        trace.push(state.cost());
        if !improved {
            return TerminationReason::LocalOptimum;
        }
    }
}

fn candidate_moves(
    state: &SearchState<'_>,
    rng: &mut ChaCha8Rng,
    params: LocalSearchParams,
    free: Option<&HashSet<usize>>,
) -> Vec<Move> {
    let instance = state.instance;
    let mut moves = Vec::new();
    for idx in 0..instance.activities.len() {
        if let Some(set) = free {
            if !set.contains(&idx) {
                continue;
            }
        }
        let activity = &instance.activities[idx];
        let buildings = state.fitting_buildings(idx);
        match activity.kind {
            ActivityKind::Recurring => {
                let (cur_start, cur_building) = state.placement(idx).expect("recurring placed");
                for &start in &state.domains[idx].starts {
                    if start != cur_start {
                        moves.push(Move::RecurringShift {
                            idx,
                            start,
                            building: cur_building,
                        });
                    }
                }
                for &b in &buildings {
                    if b != cur_building {
                        moves.push(Move::RecurringShift {
                            idx,
                            start: cur_start,
                            building: b,
                        });
                    }
                }
            }
            ActivityKind::OnceOff => {
                let starts = &state.domains[idx].starts;
                let full = starts.len() * buildings.len();
                let placement = state.placement(idx);
                if placement.is_some() {
                    moves.push(Move::OnceOffUnschedule { idx });
                }
                if buildings.is_empty() || starts.is_empty() {
                    continue;
                }
                if full <= ONCEOFF_ENUMERATION_LIMIT {
                    for &start in starts {
                        for &b in &buildings {
                            if placement != Some((start, b)) {
                                moves.push(Move::OnceOffPlace {
                                    idx,
                                    start,
                                    building: b,
                                });
                            }
                        }
                    }
                } else {
                    for _ in 0..params.onceoff_samples {
                        let start = starts[rng.gen_range(0..starts.len())];
                        let b = buildings[rng.gen_range(0..buildings.len())];
                        moves.push(Move::OnceOffPlace {
                            idx,
                            start,
                            building: b,
                        });
                    }
                }
            }
        }
    }
    if params.battery_flips {
        let t = instance.grid.total_slots();
        for b_idx in 0..state.battery_count() {
            let id = instance.batteries[b_idx].id;
            for slot in 0..t {
                let current = state.schedule.batteries[&id][slot];
                for action in BatteryAction::ALL {
                    if action != current {
                        moves.push(Move::BatteryFlip {
                            b_idx,
                            slot,
                            action,
                        });
                    }
                }
            }
        }
    }
    moves
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
    fn zero_budget_returns_the_input() {
        let grid = default_grid();
        let series = synthetic_series(41, &grid, 4);
        let params = GeneratorParams::new(InstanceSize::Small, 41);
        let (instance, tentative) = generate_instance(&params, &series, &grid).unwrap();
        let report = local_search(
            &instance,
            &tentative,
            LocalSearchParams {
                budget: 0,
                ..Default::default()
            },
            &Objective::Deterministic,
        )
        .unwrap();
        assert_eq!(report.schedule, tentative);
        assert_eq!(report.termination, TerminationReason::Budget);
    }

    #[test]
    fn search_improves_and_stays_feasible() {
        let grid = default_grid();
        let series = synthetic_series(42, &grid, 4);
        let params = GeneratorParams::new(InstanceSize::Small, 42);
        let (instance, _) = generate_instance(&params, &series, &grid).unwrap();
        let init = construct_initial(&instance).unwrap();
        let init_cost = Objective::Deterministic.cost(&instance, &init).unwrap();
        let report = local_search(
            &instance,
            &init,
            LocalSearchParams {
                budget: 30_000,
                seed: 1,
                battery_flips: true,
                onceoff_samples: 16,
            },
            &Objective::Deterministic,
        )
        .unwrap();
        assert!(report.objective <= init_cost + 1e-9);
        assert!(check_feasibility(&instance, &report.schedule).is_empty());
        for w in report.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn infeasible_input_is_rejected() {
        let grid = default_grid();
        let series = synthetic_series(43, &grid, 4);
        let params = GeneratorParams::new(InstanceSize::Small, 43);
        let (instance, tentative) = generate_instance(&params, &series, &grid).unwrap();
        let mut broken = tentative.clone();
        let first = *broken.recurring.keys().next().unwrap();
        broken.recurring.get_mut(&first).unwrap().start = 0; // Monday 00:00
        assert!(matches!(
            local_search(
                &instance,
                &broken,
                LocalSearchParams::default(),
                &Objective::Deterministic
            ),
            Err(SolveError::InfeasibleInput(_))
        ));
    }
}
