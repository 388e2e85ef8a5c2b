//! Constructive initial solution: recurring activities placed earliest-fit
//! in precedence order, no once-offs, batteries holding.

use std::collections::HashMap;

use crate::error::SolveError;
use crate::mip::{activity_domains, ActivityDomain};
use crate::model::{ActivityKind, BuildingId, Instance, RecurringPlacement, Schedule};

#[derive(Debug, Clone, Copy)]
pub struct ConstructParams {
    /// Restrict starts to even slot indices (a coarser grid some teams used
    /// to shrink phase-one models).
    pub even_slots_only: bool,
}

impl Default for ConstructParams {
    fn default() -> Self {
        ConstructParams {
            even_slots_only: false,
        }
    }
}

/// Feasible schedule satisfying the hard constraints only: every recurring
/// activity earliest-fit (day, slot, building) in topological order, all
/// once-offs unscheduled, all batteries holding.
pub fn construct_initial(instance: &Instance) -> Result<Schedule, SolveError> {
    construct_initial_with(instance, ConstructParams::default())
}

pub fn construct_initial_with(
    instance: &Instance,
    params: ConstructParams,
) -> Result<Schedule, SolveError> {
    let domains = activity_domains(instance);
    let order = topological_order(instance)?;
    let grid = &instance.grid;
    let t = grid.total_slots();
    let nb = instance.buildings.len();
    let mut usage_small = vec![0u32; nb * t];
    let mut usage_large = vec![0u32; nb * t];
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
            .map(|p| {
                let p_idx = position[p];
                schedule.recurring[&instance.activities[p_idx].id].start / grid.steps_per_day()
                    + 1
            })
            .max()
            .unwrap_or(0);
        let placement = place_earliest(
            instance,
            &domains[idx],
            idx,
            min_day,
            params.even_slots_only,
            &usage_small,
            &usage_large,
        );
        let Some((start, building)) = placement else {
            return Err(SolveError::NoFeasiblePlacement {
                id: activity.id.0,
            });
        };
        let bi = instance
            .buildings
            .iter()
            .position(|b| b.id == building)
            .unwrap();
        for occ in grid.recurring_occurrence_starts(start, activity.duration) {
            for slot in occ..occ + activity.duration {
                usage_small[bi * t + slot] += activity.small_rooms as u32;
                usage_large[bi * t + slot] += activity.large_rooms as u32;
            }
        }
        schedule
            .recurring
            .insert(activity.id, RecurringPlacement { start, building });
    }
    Ok(schedule)
}

fn place_earliest(
    instance: &Instance,
    domain: &ActivityDomain,
    idx: usize,
    min_day: usize,
    even_only: bool,
    usage_small: &[u32],
    usage_large: &[u32],
) -> Option<(usize, BuildingId)> {
    let grid = &instance.grid;
    let t = grid.total_slots();
    let activity = &instance.activities[idx];
    for &start in &domain.starts {
        if start / grid.steps_per_day() < min_day {
            continue;
        }
        if even_only && start % 2 != 0 {
            continue;
        }
        for (bi, building) in instance.buildings.iter().enumerate() {
            if activity.small_rooms > building.small_rooms
                || activity.large_rooms > building.large_rooms
            {
                continue;
            }
            let fits = grid
                .recurring_occurrence_starts(start, activity.duration)
                .into_iter()
                .flat_map(|occ| occ..occ + activity.duration)
                .all(|slot| {
                    usage_small[bi * t + slot] + activity.small_rooms as u32
                        <= building.small_rooms as u32
                        && usage_large[bi * t + slot] + activity.large_rooms as u32
                            <= building.large_rooms as u32
                });
            if fits {
                return Some((start, building.id));
            }
        }
    }
    None
}

/// Kahn topological order over prerequisite edges, smallest id first.
pub fn topological_order(instance: &Instance) -> Result<Vec<usize>, SolveError> {
    let position: HashMap<_, _> = instance
        .activities
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id, i))
        .collect();
    let n = instance.activities.len();
    let mut indegree = vec![0usize; n];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, a) in instance.activities.iter().enumerate() {
        for p in &a.prerequisites {
            indegree[i] += 1;
            dependents[position[p]].push(i);
        }
    }
    let mut ready: std::collections::BTreeSet<(crate::model::ActivityId, usize)> = indegree
        .iter()
        .enumerate()
        .filter(|(_, d)| **d == 0)
        .map(|(i, _)| (instance.activities[i].id, i))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&(id, i)) = ready.iter().next() {
        ready.remove(&(id, i));
        order.push(i);
        for &j in &dependents[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.insert((instance.activities[j].id, j));
            }
        }
    }
    if order.len() != n {
        let id = indegree
            .iter()
            .position(|d| *d > 0)
            .map(|i| instance.activities[i].id.0)
            .unwrap_or(0);
        return Err(SolveError::Model(
            crate::error::ModelError::PrerequisiteCycle { id },
        ));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{check_feasibility, objective_cost};
    use crate::generator::{
        default_grid, generate_instance, synthetic_series, GeneratorParams, InstanceSize,
    };
    use crate::model::{Activity, ActivityId};

    #[test]
    fn generated_instances_admit_an_initial_schedule() {
        let grid = default_grid();
        let series = synthetic_series(31, &grid, 6);
        let params = GeneratorParams::new(InstanceSize::Small, 31);
        let (instance, _) = generate_instance(&params, &series, &grid).unwrap();
        let schedule = construct_initial(&instance).unwrap();
        assert!(check_feasibility(&instance, &schedule).is_empty());
        assert!(schedule.once_off.is_empty());
    }

    #[test]
    fn precedence_chain_gets_increasing_days() {
        let grid = default_grid();
        let series = synthetic_series(32, &grid, 6);
        let params = GeneratorParams::new(InstanceSize::Small, 32);
        let (mut instance, _) = generate_instance(&params, &series, &grid).unwrap();
        // Overwrite with a 5-chain.
        instance.activities = (0..5)
            .map(|i| Activity {
                id: ActivityId(i),
                kind: ActivityKind::Recurring,
                duration: 4,
                small_rooms: 1,
                large_rooms: 0,
                power_per_room: 10.0,
                value: 0.0,
                penalty: 0.0,
                prerequisites: if i == 0 {
                    vec![]
                } else {
                    vec![ActivityId(i - 1)]
                },
            })
            .collect();
        let schedule = construct_initial(&instance).unwrap();
        let days: Vec<usize> = (0..5)
            .map(|i| schedule.recurring[&ActivityId(i)].start / 96)
            .collect();
        for w in days.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn six_chain_cannot_fit_five_weekdays() {
        let grid = default_grid();
        let series = synthetic_series(33, &grid, 6);
        let params = GeneratorParams::new(InstanceSize::Small, 33);
        let (mut instance, _) = generate_instance(&params, &series, &grid).unwrap();
        instance.activities = (0..6)
            .map(|i| Activity {
                id: ActivityId(i),
                kind: ActivityKind::Recurring,
                duration: 4,
                small_rooms: 1,
                large_rooms: 0,
                power_per_room: 10.0,
                value: 0.0,
                penalty: 0.0,
                prerequisites: if i == 0 {
                    vec![]
                } else {
                    vec![ActivityId(i - 1)]
                },
            })
            .collect();
        assert!(matches!(
            construct_initial(&instance),
            Err(SolveError::NoFeasiblePlacement { .. })
        ));
    }

    #[test]
    fn empty_activity_set_costs_the_base_load() {
        let grid = default_grid();
        let series = synthetic_series(34, &grid, 6);
        let params = GeneratorParams::new(InstanceSize::Small, 34);
        let (mut instance, _) = generate_instance(&params, &series, &grid).unwrap();
        instance.activities.clear();
        let schedule = construct_initial(&instance).unwrap();
        let cost = objective_cost(&instance, &schedule);
        let empty = objective_cost(&instance, &Schedule::all_hold(&instance));
        assert_eq!(cost.total, empty.total);
    }
}
