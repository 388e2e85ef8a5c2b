//! Reading and writing instance and schedule files (JSON documents whose
//! schemas are documented in `docs/formats.md`).

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::ModelError;
use crate::model::{
    ActivityId, BatteryAction, BatteryId, BuildingId, Instance, OnceOffPlacement,
    RecurringPlacement, Schedule,
};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("battery {id}: bad action character `{ch}` at slot {slot}")]
    BadActionChar { id: usize, ch: char, slot: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn instance_to_json(instance: &Instance) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(instance)?)
}

pub fn instance_from_json(text: &str) -> Result<Instance, IoError> {
    let instance: Instance = serde_json::from_str(text)?;
    instance.validate()?;
    Ok(instance)
}

#[derive(Serialize, Deserialize)]
struct RecurringEntry {
    activity: ActivityId,
    start: usize,
    building: BuildingId,
}

#[derive(Serialize, Deserialize)]
struct OnceOffEntry {
    activity: ActivityId,
    start: usize,
    building: BuildingId,
    #[serde(default)]
    after_hours: bool,
}

#[derive(Serialize, Deserialize)]
struct BatteryEntry {
    battery: BatteryId,
    /// One character per slot: `c` charge, `h` hold, `d` discharge.
    actions: String,
}

/// File mirror of [`Schedule`] with the three documented sections.
#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    recurring: Vec<RecurringEntry>,
    once_off: Vec<OnceOffEntry>,
    batteries: Vec<BatteryEntry>,
}

pub fn schedule_to_json(schedule: &Schedule) -> Result<String, IoError> {
    let file = ScheduleFile {
        recurring: schedule
            .recurring
            .iter()
            .map(|(id, p)| RecurringEntry {
                activity: *id,
                start: p.start,
                building: p.building,
            })
            .collect(),
        once_off: schedule
            .once_off
            .iter()
            .map(|(id, p)| OnceOffEntry {
                activity: *id,
                start: p.start,
                building: p.building,
                after_hours: p.after_hours,
            })
            .collect(),
        batteries: schedule
            .batteries
            .iter()
            .map(|(id, actions)| BatteryEntry {
                battery: *id,
                actions: actions.iter().map(|a| a.to_char()).collect(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn schedule_from_json(text: &str) -> Result<Schedule, IoError> {
    let file: ScheduleFile = serde_json::from_str(text)?;
    let mut schedule = Schedule::default();
    for e in file.recurring {
        schedule.recurring.insert(
            e.activity,
            RecurringPlacement {
                start: e.start,
                building: e.building,
            },
        );
    }
    for e in file.once_off {
        schedule.once_off.insert(
            e.activity,
            OnceOffPlacement {
                start: e.start,
                building: e.building,
                after_hours: e.after_hours,
            },
        );
    }
    let mut batteries = BTreeMap::new();
    for e in file.batteries {
        let mut actions = Vec::with_capacity(e.actions.len());
        for (slot, ch) in e.actions.chars().enumerate() {
            let action = BatteryAction::from_char(ch).ok_or(IoError::BadActionChar {
                id: e.battery.0,
                ch,
                slot,
            })?;
            actions.push(action);
        }
        batteries.insert(e.battery, actions);
    }
    schedule.batteries = batteries;
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Battery, Building, TimeGrid};
    use chrono::NaiveDate;

    fn sample_instance() -> Instance {
        let grid = TimeGrid::new(NaiveDate::from_ymd_opt(2020, 10, 1).unwrap(), 31).unwrap();
        let t = grid.total_slots();
        Instance {
            grid,
            buildings: vec![Building {
                id: BuildingId(0),
                small_rooms: 3,
                large_rooms: 1,
                base_load_series_id: "Building0".into(),
                solar_series_id: "Solar0".into(),
            }],
            activities: vec![],
            batteries: vec![Battery {
                id: BatteryId(0),
                capacity_kwh: 300.0,
                initial_kwh: 0.0,
                max_power_kw: 150.0,
                efficiency: 0.81,
            }],
            price_mwh: vec![40.25; t],
            net_base_load_kw: vec![123.456; t],
        }
    }

    #[test]
    fn instance_roundtrip_is_exact() {
        let instance = sample_instance();
        let json = instance_to_json(&instance).unwrap();
        let back = instance_from_json(&json).unwrap();
        assert_eq!(back, instance);
    }

    #[test]
    fn schedule_roundtrip_is_exact() {
        let instance = sample_instance();
        let mut schedule = Schedule::all_hold(&instance);
        schedule.batteries.get_mut(&BatteryId(0)).unwrap()[0] = BatteryAction::Charge;
        schedule.batteries.get_mut(&BatteryId(0)).unwrap()[1] = BatteryAction::Discharge;
        schedule.recurring.insert(
            ActivityId(3),
            RecurringPlacement {
                start: 36,
                building: BuildingId(0),
            },
        );
        schedule.once_off.insert(
            ActivityId(9),
            OnceOffPlacement {
                start: 100,
                building: BuildingId(0),
                after_hours: true,
            },
        );
        let json = schedule_to_json(&schedule).unwrap();
        let back = schedule_from_json(&json).unwrap();
        assert_eq!(back, schedule);
    }

    #[test]
    fn bad_action_char_is_rejected() {
        let text = r#"{"recurring":[],"once_off":[],"batteries":[{"battery":0,"actions":"chx"}]}"#;
        assert!(matches!(
            schedule_from_json(text),
            Err(IoError::BadActionChar { ch: 'x', slot: 2, .. })
        ));
    }
}
