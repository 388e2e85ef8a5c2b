//! Two-stage strategy: bound the monthly peak first, then minimize energy
//! cost under `alpha` times that peak, which removes the quadratic demand
//! term from the search objective.

use std::collections::HashMap;

use crate::error::SolveError;
use crate::evaluator::objective_cost;
use crate::mip::activity_domains;
use crate::model::{ActivityKind, Instance, RecurringPlacement, Schedule};

use super::battery::{induced_load, optimize_battery};
use super::construct::topological_order;
use super::fix_opt::{fix_and_optimize_capped, FixOptParams};
use super::report::{Objective, SolveReport};

#[derive(Debug, Clone, Copy)]
pub struct TwoStageParams {
    /// Peak-cap multiplier (1.10 and 1.15 are the usual settings);
    /// `f64::INFINITY` disables the cap.
    pub alpha: f64,
    pub fixopt: FixOptParams,
}

impl Default for TwoStageParams {
    fn default() -> Self {
        TwoStageParams {
            alpha: 1.10,
            fixopt: FixOptParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoStageOutcome {
    pub report: SolveReport,
    /// Combinatorial lower bound on any feasible schedule's peak.
    pub peak_lower_bound: f64,
    /// Peak achieved by the stage-1 min-peak heuristic schedule.
    pub stage1_peak: f64,
    /// Hard cap used by stage 2 (`INFINITY` when the search fell back).
    pub cap: f64,
}

/// Lower bound on the peak of any feasible schedule: the base-load peak and
/// an office-hours averaging argument over the unavoidable recurring load,
/// both relieved by the largest possible joint battery discharge.
pub fn peak_lower_bound(instance: &Instance) -> f64 {
    let grid = &instance.grid;
    let t = grid.total_slots();
    let inject_total: f64 = instance
        .batteries
        .iter()
        .map(|b| b.discharge_inject_kw())
        .sum();
    let base_max = instance
        .net_base_load_kw
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let point_bound = base_max - inject_total;

    let office: Vec<usize> = (0..t).filter(|s| grid.is_office_slot(*s)).collect();
    let mut avg_bound = f64::NEG_INFINITY;
    if !office.is_empty() {
        let office_base: f64 = office.iter().map(|s| instance.net_base_load_kw[*s]).sum();
        let domains = activity_domains(instance);
        let mut unavoidable = 0.0;
        for (activity, domain) in instance.activities.iter().zip(&domains) {
            if activity.kind != ActivityKind::Recurring || domain.starts.is_empty() {
                continue;
            }
            let min_occurrences = domain
                .starts
                .iter()
                .map(|s| grid.recurring_occurrence_starts(*s, activity.duration).len())
                .min()
                .unwrap_or(0);
            unavoidable += activity.load_kw() * (activity.duration * min_occurrences) as f64;
        }
        avg_bound = (office_base + unavoidable) / office.len() as f64 - inject_total;
    }
    point_bound.max(avg_bound).max(0.0)
}

/// Greedy min-peak placement of the recurring activities: each activity
/// takes the (start, building) that minimizes the running peak; earliest
/// wins ties. Once-offs stay unscheduled, batteries hold.
fn min_peak_schedule(instance: &Instance) -> Result<Schedule, SolveError> {
    let domains = activity_domains(instance);
    let order = topological_order(instance)?;
    let grid = &instance.grid;
    let t = grid.total_slots();
    let nb = instance.buildings.len();
    let mut usage_small = vec![0u32; nb * t];
    let mut usage_large = vec![0u32; nb * t];
    let mut profile = instance.net_base_load_kw.clone();
    let mut global_peak = profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut schedule = Schedule::all_hold(instance);
    let position: HashMap<_, _> = instance
        .activities
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id, i))
        .collect();

    for idx in order {
        let activity = &instance.activities[idx];
        if activity.kind != ActivityKind::Recurring {
            continue;
        }
        let min_day = activity
            .prerequisites
            .iter()
            .map(|p| schedule.recurring[&instance.activities[position[p]].id].start / grid.steps_per_day() + 1)
            .max()
            .unwrap_or(0);
        let load = activity.load_kw();
        let mut best: Option<(f64, usize, usize)> = None; // (peak, start, building index)
        for &start in &domains[idx].starts {
            if start / grid.steps_per_day() < min_day {
                continue;
            }
            let slots: Vec<usize> = grid
                .recurring_occurrence_starts(start, activity.duration)
                .into_iter()
                .flat_map(|s| s..s + activity.duration)
                .collect();
            let local_max = slots
                .iter()
                .map(|&s| profile[s] + load)
                .fold(f64::NEG_INFINITY, f64::max);
            let candidate_peak = global_peak.max(local_max);
            if let Some((best_peak, _, _)) = best {
                if candidate_peak >= best_peak {
                    continue;
                }
            }
            for (bi, building) in instance.buildings.iter().enumerate() {
                let fits = activity.small_rooms <= building.small_rooms
                    && activity.large_rooms <= building.large_rooms
                    && slots.iter().all(|&s| {
                        usage_small[bi * t + s] + activity.small_rooms as u32
                            <= building.small_rooms as u32
                            && usage_large[bi * t + s] + activity.large_rooms as u32
                                <= building.large_rooms as u32
                    });
                if fits {
                    best = Some((candidate_peak, start, bi));
                    break;
                }
            }
        }
        let Some((peak, start, bi)) = best else {
            return Err(SolveError::NoFeasiblePlacement {
                id: activity.id.0,
            });
        };
        global_peak = peak;
        for occ in grid.recurring_occurrence_starts(start, activity.duration) {
            for slot in occ..occ + activity.duration {
                usage_small[bi * t + slot] += activity.small_rooms as u32;
                usage_large[bi * t + slot] += activity.large_rooms as u32;
                profile[slot] += load;
            }
        }
        schedule.recurring.insert(
            activity.id,
            RecurringPlacement {
                start,
                building: instance.buildings[bi].id,
            },
        );
    }
    Ok(schedule)
}

/// Smallest feasible peak cap for the battery, by bisection over the
/// achievable net-load lattice, and the resulting plan.
fn shave_peak(instance: &Instance, schedule: &Schedule) -> Result<(Schedule, f64), SolveError> {
    let induced = induced_load(instance, schedule);
    let mut levels: Vec<f64> = vec![0.0];
    for b in &instance.batteries {
        let mut next = Vec::with_capacity(levels.len() * 3);
        for l in &levels {
            next.push(*l);
            next.push(l + b.charge_draw_kw());
            next.push(l - b.discharge_inject_kw());
        }
        levels = next;
    }
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let mut caps: Vec<f64> = induced
        .iter()
        .flat_map(|l| levels.iter().map(move |lev| l + lev))
        .collect();
    caps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    caps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    // Feasibility is monotone in the cap.
    let feasible = |cap: f64| optimize_battery(instance, schedule, Some(cap)).ok();
    let mut lo = 0usize;
    let mut hi = caps.len() - 1;
    let mut best = feasible(caps[hi]).map(|p| (caps[hi], p));
    if best.is_none() {
        // Even the loosest lattice cap fails; run uncapped.
        let plans = optimize_battery(instance, schedule, None)?;
        let mut out = schedule.clone();
        out.batteries = plans;
        let peak = crate::evaluator::objective_cost(instance, &out).peak_load;
        return Ok((out, peak));
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feasible(caps[mid]) {
            Some(plan) => {
                best = Some((caps[mid], plan));
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let (_, plans) = best.unwrap();
    let mut out = schedule.clone();
    out.batteries = plans;
    let peak = objective_cost(instance, &out).peak_load;
    Ok((out, peak))
}

pub fn two_stage_peak_cap(
    instance: &Instance,
    params: TwoStageParams,
    objective: &Objective,
) -> Result<TwoStageOutcome, SolveError> {
    objective.validate(instance)?;
    let lb = peak_lower_bound(instance);
    let stage1 = min_peak_schedule(instance)?;
    let (stage1_shaved, stage1_peak) = shave_peak(instance, &stage1)?;

    if !params.alpha.is_finite() {
        let report =
            fix_and_optimize_capped(instance, &stage1_shaved, params.fixopt, objective, None)?;
        return Ok(TwoStageOutcome {
            report,
            peak_lower_bound: lb,
            stage1_peak,
            cap: f64::INFINITY,
        });
    }

    // Prefer the cap from the lower bound; when the stage-1 schedule cannot
    // meet it, widen to the achieved stage-1 peak.
    let mut cap = params.alpha * lb;
    if stage1_peak > cap + 1e-9 {
        cap = params.alpha * stage1_peak;
    }
    match fix_and_optimize_capped(instance, &stage1_shaved, params.fixopt, objective, Some(cap)) {
        Ok(report) => Ok(TwoStageOutcome {
            report,
            peak_lower_bound: lb,
            stage1_peak,
            cap,
        }),
        // Infeasible cap: fall back to the uncapped search.
        Err(SolveError::InfeasiblePeakCap { .. }) | Err(SolveError::InfeasibleInput(_)) => {
            let report =
                fix_and_optimize_capped(instance, &stage1_shaved, params.fixopt, objective, None)?;
            Ok(TwoStageOutcome {
                report,
                peak_lower_bound: lb,
                stage1_peak,
                cap: f64::INFINITY,
            })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::check_feasibility;
    use crate::generator::{
        default_grid, generate_instance, synthetic_series, GeneratorParams, InstanceSize,
    };
    use crate::heuristics::construct::construct_initial;

    fn small(seed: u64) -> Instance {
        let grid = default_grid();
        let series = synthetic_series(seed, &grid, 4);
        let params = GeneratorParams::new(InstanceSize::Small, seed);
        generate_instance(&params, &series, &grid).unwrap().0
    }

    #[test]
    fn lower_bound_is_below_any_feasible_peak() {
        let instance = small(61);
        let lb = peak_lower_bound(&instance);
        let schedule = construct_initial(&instance).unwrap();
        let peak = objective_cost(&instance, &schedule).peak_load;
        assert!(lb <= peak + 1e-9, "lb {lb} vs peak {peak}");
    }

    #[test]
    fn capped_run_beats_or_meets_the_initial_construction() {
        let instance = small(62);
        let init_cost = objective_cost(&instance, &construct_initial(&instance).unwrap()).total;
        let params = TwoStageParams {
            alpha: 1.10,
            fixopt: FixOptParams {
                max_iter: 8,
                patience: 4,
                effort: 2_000,
                battery_sweep: 4,
                seed: 5,
                ..Default::default()
            },
        };
        let outcome =
            two_stage_peak_cap(&instance, params, &Objective::Deterministic).unwrap();
        assert!(outcome.report.objective <= init_cost + 1e-9);
        assert!(check_feasibility(&instance, &outcome.report.schedule).is_empty());
    }

    #[test]
    fn infinite_alpha_reduces_to_plain_search() {
        let instance = small(63);
        let params = TwoStageParams {
            alpha: f64::INFINITY,
            fixopt: FixOptParams {
                max_iter: 3,
                patience: 2,
                effort: 500,
                battery_sweep: 2,
                seed: 1,
                ..Default::default()
            },
        };
        let outcome =
            two_stage_peak_cap(&instance, params, &Objective::Deterministic).unwrap();
        assert_eq!(outcome.cap, f64::INFINITY);
        assert!(check_feasibility(&instance, &outcome.report.schedule).is_empty());
    }

    #[test]
    fn no_activity_instance_shaves_only_when_profitable() {
        let mut instance = small(64);
        instance.activities.clear();
        let params = TwoStageParams {
            alpha: 1.10,
            fixopt: FixOptParams {
                recurring_sample: 1,
                onceoff_sample: 0,
                max_iter: 2,
                patience: 1,
                effort: 100,
                battery_sweep: 4,
                seed: 2,
                ..Default::default()
            },
        };
        let outcome =
            two_stage_peak_cap(&instance, params, &Objective::Deterministic).unwrap();
        let hold = objective_cost(&instance, &Schedule::all_hold(&instance)).total;
        assert!(outcome.report.objective <= hold + 1e-9);
    }
}
