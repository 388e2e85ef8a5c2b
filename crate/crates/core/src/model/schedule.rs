//! Candidate solutions: activity placements plus per-slot battery actions.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::ModelError;
use crate::model::grid::TimeGrid;
use crate::model::instance::{Activity, ActivityId, ActivityKind, BatteryId, BuildingId, Instance};

/// Battery state transition over one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryAction {
    Charge,
    Hold,
    Discharge,
}

impl BatteryAction {
    pub const ALL: [BatteryAction; 3] =
        [BatteryAction::Charge, BatteryAction::Hold, BatteryAction::Discharge];

    pub fn to_char(self) -> char {
        match self {
            BatteryAction::Charge => 'c',
            BatteryAction::Hold => 'h',
            BatteryAction::Discharge => 'd',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'c' => Some(BatteryAction::Charge),
            'h' => Some(BatteryAction::Hold),
            'd' => Some(BatteryAction::Discharge),
            _ => None,
        }
    }

    /// Signed state-of-charge direction: +1 charge, 0 hold, -1 discharge.
    pub fn soc_sign(self) -> f64 {
        match self {
            BatteryAction::Charge => 1.0,
            BatteryAction::Hold => 0.0,
            BatteryAction::Discharge => -1.0,
        }
    }
}

/// Placement of a recurring activity: a start inside the first-Monday week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurringPlacement {
    /// Slot relative to the first Monday, `0..week_slots`.
    pub start: usize,
    pub building: BuildingId,
}

/// Placement of a once-off activity at an absolute slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnceOffPlacement {
    pub start: usize,
    pub building: BuildingId,
    /// True when any occupied slot falls outside weekday office hours.
    /// Informational: the evaluator recomputes this from the slots.
    #[serde(default)]
    pub after_hours: bool,
}

/// A candidate solution. Structural validity (ids resolve, battery traces
/// have full length, every recurring activity placed) is checked by
/// [`Schedule::validate`]; feasibility is the evaluator's job.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub recurring: BTreeMap<ActivityId, RecurringPlacement>,
    pub once_off: BTreeMap<ActivityId, OnceOffPlacement>,
    pub batteries: BTreeMap<BatteryId, Vec<BatteryAction>>,
}

/// One contiguous run of occupied slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occurrence {
    pub start: usize,
    pub end: usize,
}

impl Occurrence {
    pub fn slots(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl Schedule {
    /// An empty schedule with every battery holding.
    pub fn all_hold(instance: &Instance) -> Self {
        let t = instance.grid.total_slots();
        Schedule {
            recurring: BTreeMap::new(),
            once_off: BTreeMap::new(),
            batteries: instance
                .batteries
                .iter()
                .map(|b| (b.id, vec![BatteryAction::Hold; t]))
                .collect(),
        }
    }

    /// Is the activity scheduled at all?
    pub fn is_scheduled(&self, activity: &Activity) -> bool {
        match activity.kind {
            ActivityKind::Recurring => self.recurring.contains_key(&activity.id),
            ActivityKind::OnceOff => self.once_off.contains_key(&activity.id),
        }
    }

    /// Building assigned to a scheduled activity.
    pub fn building_of(&self, activity: &Activity) -> Option<BuildingId> {
        match activity.kind {
            ActivityKind::Recurring => self.recurring.get(&activity.id).map(|p| p.building),
            ActivityKind::OnceOff => self.once_off.get(&activity.id).map(|p| p.building),
        }
    }

    /// Structural check: ids resolve, kinds match, every recurring activity
    /// has an entry, every battery has a full-length action trace.
    pub fn validate(&self, instance: &Instance) -> Result<(), ModelError> {
        let t = instance.grid.total_slots();
        for a in instance.recurring_activities() {
            if !self.recurring.contains_key(&a.id) {
                return Err(ModelError::MissingRecurringEntry { id: a.id.0 });
            }
        }
        for (id, p) in &self.recurring {
            let act = instance.activity(*id).ok_or(ModelError::UnknownId {
                kind: "activity",
                id: id.0,
            })?;
            if act.kind != ActivityKind::Recurring {
                return Err(ModelError::KindMismatch { id: id.0 });
            }
            if instance.building(p.building).is_none() {
                return Err(ModelError::UnknownId {
                    kind: "building",
                    id: p.building.0,
                });
            }
        }
        for (id, p) in &self.once_off {
            let act = instance.activity(*id).ok_or(ModelError::UnknownId {
                kind: "activity",
                id: id.0,
            })?;
            if act.kind != ActivityKind::OnceOff {
                return Err(ModelError::KindMismatch { id: id.0 });
            }
            if instance.building(p.building).is_none() {
                return Err(ModelError::UnknownId {
                    kind: "building",
                    id: p.building.0,
                });
            }
        }
        for b in &instance.batteries {
            let actions = self
                .batteries
                .get(&b.id)
                .ok_or(ModelError::UnknownId {
                    kind: "battery",
                    id: b.id.0,
                })?;
            if actions.len() != t {
                return Err(ModelError::ActionLengthMismatch {
                    id: b.id.0,
                    len: actions.len(),
                    expected: t,
                });
            }
        }
        for id in self.batteries.keys() {
            if instance.battery(*id).is_none() {
                return Err(ModelError::UnknownId {
                    kind: "battery",
                    id: id.0,
                });
            }
        }
        Ok(())
    }
}

/// Absolute slot intervals occupied by a scheduled activity.
///
/// Recurring activities yield one interval per week whose whole duration
/// fits inside the grid; slots before the first Monday carry no occurrence.
/// Once-off activities yield a single interval, with an error when it would
/// overrun the grid.
pub fn occurrence_slots(
    grid: &TimeGrid,
    activity: &Activity,
    schedule: &Schedule,
) -> Result<Vec<Occurrence>, ModelError> {
    match activity.kind {
        ActivityKind::Recurring => {
            let p = schedule
                .recurring
                .get(&activity.id)
                .ok_or(ModelError::MissingRecurringEntry { id: activity.id.0 })?;
            Ok(grid
                .recurring_occurrence_starts(p.start, activity.duration)
                .into_iter()
                .map(|s| Occurrence {
                    start: s,
                    end: s + activity.duration,
                })
                .collect())
        }
        ActivityKind::OnceOff => {
            let p = match schedule.once_off.get(&activity.id) {
                Some(p) => p,
                None => return Ok(Vec::new()),
            };
            let end = p.start + activity.duration;
            if end > grid.total_slots() {
                return Err(ModelError::IntervalOutOfRange {
                    start: p.start,
                    end,
                    total: grid.total_slots(),
                });
            }
            Ok(vec![Occurrence {
                start: p.start,
                end,
            }])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn october_grid() -> TimeGrid {
        TimeGrid::new(NaiveDate::from_ymd_opt(2020, 10, 1).unwrap(), 31).unwrap()
    }

    fn recurring_activity(duration: usize) -> Activity {
        Activity {
            id: ActivityId(0),
            kind: ActivityKind::Recurring,
            duration,
            small_rooms: 1,
            large_rooms: 0,
            power_per_room: 10.0,
            value: 0.0,
            penalty: 0.0,
            prerequisites: vec![],
        }
    }

    #[test]
    fn recurring_occurrences_are_weekly_and_disjoint() {
        let grid = october_grid();
        let act = recurring_activity(2);
        let mut sched = Schedule::default();
        sched.recurring.insert(
            ActivityId(0),
            RecurringPlacement {
                start: 0,
                building: BuildingId(0),
            },
        );
        let occ = occurrence_slots(&grid, &act, &sched).unwrap();
        assert_eq!(occ.len(), 4);
        for w in occ.windows(2) {
            assert!(w[0].end <= w[1].start);
            assert_eq!(w[1].start - w[0].start, 672);
        }
    }

    #[test]
    fn onceoff_single_interval() {
        let grid = october_grid();
        let mut act = recurring_activity(2);
        act.kind = ActivityKind::OnceOff;
        let mut sched = Schedule::default();
        sched.once_off.insert(
            ActivityId(0),
            OnceOffPlacement {
                start: 10,
                building: BuildingId(0),
                after_hours: false,
            },
        );
        let occ = occurrence_slots(&grid, &act, &sched).unwrap();
        assert_eq!(occ, vec![Occurrence { start: 10, end: 12 }]);
    }

    #[test]
    fn onceoff_overflow_is_an_error() {
        let grid = october_grid();
        let mut act = recurring_activity(2);
        act.kind = ActivityKind::OnceOff;
        let mut sched = Schedule::default();
        sched.once_off.insert(
            ActivityId(0),
            OnceOffPlacement {
                start: 2975,
                building: BuildingId(0),
                after_hours: false,
            },
        );
        assert!(matches!(
            occurrence_slots(&grid, &act, &sched),
            Err(ModelError::IntervalOutOfRange { .. })
        ));
    }

    #[test]
    fn action_char_roundtrip() {
        for a in BatteryAction::ALL {
            assert_eq!(BatteryAction::from_char(a.to_char()), Some(a));
        }
        assert_eq!(BatteryAction::from_char('x'), None);
    }
}
