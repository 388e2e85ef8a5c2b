//! Problem data: activities, batteries, buildings and the priced horizon.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::ModelError;
use crate::model::grid::{TimeGrid, SLOT_HOURS};

macro_rules! id_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(
    /// Identifier of an activity.
    ActivityId
);
id_newtype!(
    /// Identifier of a battery.
    BatteryId
);
id_newtype!(
    /// Identifier of a building.
    BuildingId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    /// Scheduled once in the first-Monday week, repeated weekly.
    Recurring,
    /// Optional; schedulable anywhere in the month, earns a value.
    OnceOff,
}

/// A lecture-like task with a rectangular load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub id: ActivityId,
    pub kind: ActivityKind,
    /// Duration in slots.
    pub duration: usize,
    /// Small rooms required.
    pub small_rooms: usize,
    /// Large rooms required.
    pub large_rooms: usize,
    /// Power draw per room, kW.
    pub power_per_room: f64,
    /// Revenue when scheduled (once-off only).
    #[serde(default)]
    pub value: f64,
    /// Penalty when any slot falls outside weekday office hours (once-off only).
    #[serde(default)]
    pub penalty: f64,
    /// Same-kind activities that must start on a strictly earlier day.
    #[serde(default)]
    pub prerequisites: Vec<ActivityId>,
}

impl Activity {
    pub fn total_rooms(&self) -> usize {
        self.small_rooms + self.large_rooms
    }

    /// Total power draw while running, kW.
    pub fn load_kw(&self) -> f64 {
        self.power_per_room * self.total_rooms() as f64
    }

    /// Energy of one occurrence, MWh.
    pub fn occurrence_energy_mwh(&self) -> f64 {
        self.load_kw() * SLOT_HOURS * self.duration as f64 / 1000.0
    }
}

/// Grid-connected storage with symmetric round-trip losses: charging draws
/// `m/sqrt(e)` from the grid, discharging delivers `m*sqrt(e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub id: BatteryId,
    pub capacity_kwh: f64,
    pub initial_kwh: f64,
    pub max_power_kw: f64,
    pub efficiency: f64,
}

impl Battery {
    /// Grid draw while charging, kW.
    pub fn charge_draw_kw(&self) -> f64 {
        self.max_power_kw / self.efficiency.sqrt()
    }

    /// Grid injection while discharging, kW.
    pub fn discharge_inject_kw(&self) -> f64 {
        self.max_power_kw * self.efficiency.sqrt()
    }

    /// State-of-charge change per charge/discharge slot, kWh.
    pub fn soc_step_kwh(&self) -> f64 {
        SLOT_HOURS * self.max_power_kw
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub id: BuildingId,
    pub small_rooms: usize,
    pub large_rooms: usize,
    /// Name of the demand series this building's base load came from.
    #[serde(default)]
    pub base_load_series_id: String,
    /// Name of the solar series assigned to this building.
    #[serde(default)]
    pub solar_series_id: String,
}

/// A full scheduling problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub grid: TimeGrid,
    pub buildings: Vec<Building>,
    pub activities: Vec<Activity>,
    pub batteries: Vec<Battery>,
    /// Wholesale price per slot, $/MWh.
    pub price_mwh: Vec<f64>,
    /// Aggregate building base load minus solar, kW per slot.
    pub net_base_load_kw: Vec<f64>,
}

impl Instance {
    /// Total small rooms `S` across buildings.
    pub fn total_small_rooms(&self) -> usize {
        self.buildings.iter().map(|b| b.small_rooms).sum()
    }

    /// Total large rooms `L` across buildings.
    pub fn total_large_rooms(&self) -> usize {
        self.buildings.iter().map(|b| b.large_rooms).sum()
    }

    pub fn activity(&self, id: ActivityId) -> Option<&Activity> {
        self.activities.iter().find(|a| a.id == id)
    }

    pub fn battery(&self, id: BatteryId) -> Option<&Battery> {
        self.batteries.iter().find(|b| b.id == id)
    }

    pub fn building(&self, id: BuildingId) -> Option<&Building> {
        self.buildings.iter().find(|b| b.id == id)
    }

    pub fn recurring_activities(&self) -> impl Iterator<Item = &Activity> {
        self.activities
            .iter()
            .filter(|a| a.kind == ActivityKind::Recurring)
    }

    pub fn onceoff_activities(&self) -> impl Iterator<Item = &Activity> {
        self.activities
            .iter()
            .filter(|a| a.kind == ActivityKind::OnceOff)
    }

    /// Checks every structural invariant of the data model.
    pub fn validate(&self) -> Result<(), ModelError> {
        let t = self.grid.total_slots();
        for (name, len) in [
            ("price_mwh", self.price_mwh.len()),
            ("net_base_load_kw", self.net_base_load_kw.len()),
        ] {
            if len != t {
                return Err(ModelError::SeriesLengthMismatch {
                    name: name.to_string(),
                    len,
                    expected: t,
                });
            }
        }
        let mut seen = HashSet::new();
        for b in &self.buildings {
            if !seen.insert(b.id) {
                return Err(ModelError::DuplicateId {
                    kind: "building",
                    id: b.id.0,
                });
            }
        }
        let mut seen = HashSet::new();
        for b in &self.batteries {
            if !seen.insert(b.id) {
                return Err(ModelError::DuplicateId {
                    kind: "battery",
                    id: b.id.0,
                });
            }
            if !(b.efficiency > 0.0 && b.efficiency <= 1.0) {
                return Err(ModelError::BadBattery {
                    id: b.id.0,
                    reason: format!("efficiency {} outside (0, 1]", b.efficiency),
                });
            }
            if b.max_power_kw <= 0.0 {
                return Err(ModelError::BadBattery {
                    id: b.id.0,
                    reason: "max power must be positive".into(),
                });
            }
            if !(0.0 <= b.initial_kwh && b.initial_kwh <= b.capacity_kwh) {
                return Err(ModelError::BadBattery {
                    id: b.id.0,
                    reason: format!(
                        "initial charge {} outside [0, {}]",
                        b.initial_kwh, b.capacity_kwh
                    ),
                });
            }
        }
        let mut seen = HashSet::new();
        for a in &self.activities {
            if !seen.insert(a.id) {
                return Err(ModelError::DuplicateId {
                    kind: "activity",
                    id: a.id.0,
                });
            }
            if a.duration == 0 {
                return Err(ModelError::BadActivity {
                    id: a.id.0,
                    reason: "duration must be at least 1 slot".into(),
                });
            }
            if a.total_rooms() == 0 {
                return Err(ModelError::BadActivity {
                    id: a.id.0,
                    reason: "needs at least one room".into(),
                });
            }
            if a.power_per_room < 0.0 || a.value < 0.0 || a.penalty < 0.0 {
                return Err(ModelError::BadActivity {
                    id: a.id.0,
                    reason: "power, value and penalty must be nonnegative".into(),
                });
            }
            for p in &a.prerequisites {
                let prereq = self
                    .activity(*p)
                    .ok_or(ModelError::UnknownId {
                        kind: "activity",
                        id: p.0,
                    })?;
                if prereq.kind != a.kind {
                    return Err(ModelError::BadActivity {
                        id: a.id.0,
                        reason: format!("prerequisite {} has a different kind", p.0),
                    });
                }
            }
        }
        self.check_prerequisites_acyclic()?;
        Ok(())
    }

    fn check_prerequisites_acyclic(&self) -> Result<(), ModelError> {
        // Kahn's algorithm over prerequisite edges.
        let index: std::collections::HashMap<ActivityId, usize> = self
            .activities
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id, i))
            .collect();
        let mut indegree = vec![0usize; self.activities.len()];
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); self.activities.len()];
        for (i, a) in self.activities.iter().enumerate() {
            for p in &a.prerequisites {
                indegree[i] += 1;
                dependents[index[p]].push(i);
            }
        }
        let mut queue: Vec<usize> = indegree
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 0)
            .map(|(i, _)| i)
            .collect();
        let mut removed = 0;
        while let Some(i) = queue.pop() {
            removed += 1;
            for &j in &dependents[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push(j);
                }
            }
        }
        if removed != self.activities.len() {
            let id = indegree
                .iter()
                .position(|d| *d > 0)
                .map(|i| self.activities[i].id.0)
                .unwrap_or(0);
            return Err(ModelError::PrerequisiteCycle { id });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn tiny_instance() -> Instance {
        let grid = TimeGrid::custom(
            NaiveDate::from_ymd_opt(2020, 10, 5).unwrap(),
            1,
            4,
            0,
            4,
        )
        .unwrap();
        Instance {
            grid,
            buildings: vec![Building {
                id: BuildingId(0),
                small_rooms: 1,
                large_rooms: 0,
                base_load_series_id: String::new(),
                solar_series_id: String::new(),
            }],
            activities: vec![],
            batteries: vec![],
            price_mwh: vec![40.0; 4],
            net_base_load_kw: vec![100.0; 4],
        }
    }

    #[test]
    fn battery_rates_follow_sqrt_efficiency() {
        let b = Battery {
            id: BatteryId(0),
            capacity_kwh: 300.0,
            initial_kwh: 0.0,
            max_power_kw: 150.0,
            efficiency: 0.81,
        };
        assert!((b.charge_draw_kw() - 150.0 / 0.9).abs() < 1e-12);
        assert!((b.discharge_inject_kw() - 135.0).abs() < 1e-12);
        assert_eq!(b.soc_step_kwh(), 37.5);
    }

    #[test]
    fn validate_accepts_tiny_instance() {
        tiny_instance().validate().unwrap();
    }

    #[test]
    fn validate_rejects_series_mismatch() {
        let mut inst = tiny_instance();
        inst.price_mwh.pop();
        assert!(matches!(
            inst.validate(),
            Err(ModelError::SeriesLengthMismatch { .. })
        ));
    }

    #[test]
    fn validate_rejects_prerequisite_cycle() {
        let mut inst = tiny_instance();
        inst.activities = vec![
            Activity {
                id: ActivityId(0),
                kind: ActivityKind::Recurring,
                duration: 1,
                small_rooms: 1,
                large_rooms: 0,
                power_per_room: 1.0,
                value: 0.0,
                penalty: 0.0,
                prerequisites: vec![ActivityId(1)],
            },
            Activity {
                id: ActivityId(1),
                kind: ActivityKind::Recurring,
                duration: 1,
                small_rooms: 1,
                large_rooms: 0,
                power_per_room: 1.0,
                value: 0.0,
                penalty: 0.0,
                prerequisites: vec![ActivityId(0)],
            },
        ];
        assert!(matches!(
            inst.validate(),
            Err(ModelError::PrerequisiteCycle { .. })
        ));
    }

    #[test]
    fn validate_rejects_cross_kind_prerequisite() {
        let mut inst = tiny_instance();
        inst.activities = vec![
            Activity {
                id: ActivityId(0),
                kind: ActivityKind::Recurring,
                duration: 1,
                small_rooms: 1,
                large_rooms: 0,
                power_per_room: 1.0,
                value: 0.0,
                penalty: 0.0,
                prerequisites: vec![],
            },
            Activity {
                id: ActivityId(1),
                kind: ActivityKind::OnceOff,
                duration: 1,
                small_rooms: 1,
                large_rooms: 0,
                power_per_room: 1.0,
                value: 5.0,
                penalty: 1.0,
                prerequisites: vec![ActivityId(0)],
            },
        ];
        assert!(matches!(inst.validate(), Err(ModelError::BadActivity { .. })));
    }
}
