//! Pruned start-time sets per activity, shared by the model builder and the
//! native solvers.
//!
//! Recurring activities get week-relative starts restricted to weekday
//! office windows with the whole duration inside the window. Once-off
//! activities get absolute starts anywhere in the grid, with after-hours
//! starts dropped entirely when value minus penalty is nonpositive (an
//! optimal solution never uses them).

use std::collections::BTreeSet;

use crate::evaluator::is_after_hours;
use crate::model::{ActivityId, ActivityKind, Instance};

#[derive(Debug, Clone)]
pub struct ActivityDomain {
    pub activity: ActivityId,
    pub kind: ActivityKind,
    pub duration: usize,
    /// Sorted feasible starts: week-relative (recurring) or absolute
    /// (once-off).
    pub starts: Vec<usize>,
    /// Sorted union of slots any start can occupy.
    pub active_slots: Vec<usize>,
    /// Starts that incur the after-hours penalty (once-off only, sorted).
    pub penalty_starts: Vec<usize>,
}

impl ActivityDomain {
    pub fn is_penalty_start(&self, start: usize) -> bool {
        self.penalty_starts.binary_search(&start).is_ok()
    }
}

/// Domains for every activity, in `instance.activities` order.
pub fn activity_domains(instance: &Instance) -> Vec<ActivityDomain> {
    let grid = &instance.grid;
    let total = grid.total_slots();
    instance
        .activities
        .iter()
        .map(|activity| {
            let mut starts = Vec::new();
            let mut penalty_starts = Vec::new();
            match activity.kind {
                ActivityKind::Recurring => {
                    let offset_day = grid.first_monday_offset() / grid.steps_per_day();
                    for day in 0..7 {
                        if !grid.is_weekday(offset_day + day) {
                            continue;
                        }
                        if grid.office_end() < activity.duration {
                            continue;
                        }
                        for sid in grid.office_start()..=grid.office_end() - activity.duration {
                            let rel = day * grid.steps_per_day() + sid;
                            // The first occurrence must fit the grid.
                            if grid.first_monday_offset() + rel + activity.duration <= total {
                                starts.push(rel);
                            }
                        }
                    }
                }
                ActivityKind::OnceOff => {
                    let prune_penalty = activity.value <= activity.penalty;
                    for start in 0..total.saturating_sub(activity.duration - 1) {
                        if start + activity.duration > total {
                            break;
                        }
                        if is_after_hours(instance, start, activity.duration) {
                            if prune_penalty {
                                continue;
                            }
                            penalty_starts.push(start);
                        }
                        starts.push(start);
                    }
                }
            }
            let mut active: BTreeSet<usize> = BTreeSet::new();
            for &s in &starts {
                for slot in s..s + activity.duration {
                    active.insert(slot);
                }
            }
            ActivityDomain {
                activity: activity.id,
                kind: activity.kind,
                duration: activity.duration,
                starts,
                active_slots: active.into_iter().collect(),
                penalty_starts,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activity, Building, BuildingId, TimeGrid};
    use chrono::NaiveDate;

    fn instance_with(activities: Vec<Activity>) -> Instance {
        let grid = TimeGrid::new(NaiveDate::from_ymd_opt(2020, 10, 1).unwrap(), 31).unwrap();
        let t = grid.total_slots();
        Instance {
            grid,
            buildings: vec![Building {
                id: BuildingId(0),
                small_rooms: 5,
                large_rooms: 5,
                base_load_series_id: String::new(),
                solar_series_id: String::new(),
            }],
            activities,
            batteries: vec![],
            price_mwh: vec![40.0; t],
            net_base_load_kw: vec![100.0; t],
        }
    }

    fn activity(kind: ActivityKind, duration: usize, value: f64, penalty: f64) -> Activity {
        Activity {
            id: ActivityId(0),
            kind,
            duration,
            small_rooms: 1,
            large_rooms: 0,
            power_per_room: 10.0,
            value,
            penalty,
            prerequisites: vec![],
        }
    }

    #[test]
    fn recurring_starts_cover_five_office_days() {
        let inst = instance_with(vec![activity(ActivityKind::Recurring, 2, 0.0, 0.0)]);
        let domains = activity_domains(&inst);
        // 5 weekdays, starts from 09:00 through 16:30 (duration 2).
        assert_eq!(domains[0].starts.len(), 5 * 31);
        for &s in &domains[0].starts {
            let day = s / 96;
            let sid = s % 96;
            assert!(day < 5);
            assert!((36..=66).contains(&sid));
        }
    }

    #[test]
    fn worthless_afterhours_onceoff_is_pruned() {
        let inst = instance_with(vec![activity(ActivityKind::OnceOff, 2, 10.0, 10.0)]);
        let domains = activity_domains(&inst);
        assert!(domains[0].penalty_starts.is_empty());
        for &s in &domains[0].starts {
            assert!(!is_after_hours(&inst, s, 2));
        }
    }

    #[test]
    fn profitable_afterhours_onceoff_keeps_penalty_starts() {
        let inst = instance_with(vec![activity(ActivityKind::OnceOff, 2, 100.0, 10.0)]);
        let domains = activity_domains(&inst);
        assert!(!domains[0].penalty_starts.is_empty());
        // Every start up to T - duration is present.
        assert_eq!(domains[0].starts.len(), 2976 - 1);
    }
}
