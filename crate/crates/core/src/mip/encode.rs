//! Schedule <-> assignment bridging: encodes a schedule into a variable
//! assignment consistent with the evaluator's traces, and checks assignments
//! against the model constraints.

use std::collections::BTreeMap;

use crate::error::MipError;
use crate::evaluator::{battery_soc_trace, schedule_load_delta_in};
use crate::model::{ActivityKind, BatteryAction, Instance, Schedule};

use super::domains::activity_domains;
use super::model::{MipModel, Sense, VarEntity, VarKind};

/// A point in variable space, keyed by variable name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub values: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }
}

/// Encodes a structurally valid schedule into values for every model
/// variable. The peak-level selector is set one-hot at `ceil(eta)`.
pub fn encode_schedule(
    model: &MipModel,
    instance: &Instance,
    schedule: &Schedule,
) -> Result<Assignment, MipError> {
    let grid = &instance.grid;
    let t = grid.total_slots();
    let domains = activity_domains(instance);
    let position: std::collections::HashMap<_, _> = instance
        .activities
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id, i))
        .collect();

    // Per-activity start (week-relative for recurring, absolute for
    // once-off), validated against the pruned domain.
    let mut starts: Vec<Option<usize>> = vec![None; instance.activities.len()];
    for (idx, activity) in instance.activities.iter().enumerate() {
        let start = match activity.kind {
            ActivityKind::Recurring => schedule.recurring.get(&activity.id).map(|p| p.start),
            ActivityKind::OnceOff => schedule.once_off.get(&activity.id).map(|p| p.start),
        };
        if let Some(s) = start {
            if domains[idx].starts.binary_search(&s).is_err() {
                return Err(MipError::PrunedStart {
                    id: activity.id.0,
                    start: s,
                });
            }
        }
        starts[idx] = start;
    }

    let mut soc_traces: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for battery in &instance.batteries {
        let trace = battery_soc_trace(instance, schedule, battery.id)
            .map_err(|_| MipError::Model(crate::error::ModelError::UnknownId {
                kind: "battery",
                id: battery.id.0,
            }))?;
        soc_traces.insert(battery.id.0, trace);
    }

    let delta = schedule_load_delta_in::<f64>(instance, schedule);
    let n_scen = model.scenario_loads.len();
    let scen_count = n_scen.max(1);
    let mut net: Vec<Vec<f64>> = Vec::with_capacity(scen_count);
    let mut peaks: Vec<f64> = Vec::with_capacity(scen_count);
    for s in 0..scen_count {
        let base = if n_scen == 0 {
            &instance.net_base_load_kw
        } else {
            &model.scenario_loads[s]
        };
        if base.len() != t {
            return Err(MipError::ScenarioLengthMismatch {
                index: s,
                len: base.len(),
                expected: t,
            });
        }
        let profile: Vec<f64> = delta.iter().zip(base).map(|(d, b)| d + b).collect();
        let peak = profile.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        net.push(profile);
        peaks.push(peak);
    }

    let mut assignment = Assignment::default();
    for variable in model.variables() {
        let value = match variable.entity {
            VarEntity::BatteryCharge { battery, slot } => schedule
                .batteries
                .get(&battery)
                .map_or(0.0, |a| (a[slot] == BatteryAction::Charge) as usize as f64),
            VarEntity::BatteryDischarge { battery, slot } => schedule
                .batteries
                .get(&battery)
                .map_or(0.0, |a| (a[slot] == BatteryAction::Discharge) as usize as f64),
            VarEntity::BatterySoc { battery, slot } => soc_traces[&battery.0][slot],
            VarEntity::ActivityStart { activity, slot } => {
                (starts[position[&activity]] == Some(slot)) as usize as f64
            }
            VarEntity::ActivityActive { activity, slot } => {
                let idx = position[&activity];
                match starts[idx] {
                    Some(s) => {
                        (slot >= s && slot < s + instance.activities[idx].duration) as usize as f64
                    }
                    None => 0.0,
                }
            }
            VarEntity::Scheduled { activity } => {
                starts[position[&activity]].is_some() as usize as f64
            }
            VarEntity::AfterHours { activity } => {
                let idx = position[&activity];
                match starts[idx] {
                    Some(s) => domains[idx].is_penalty_start(s) as usize as f64,
                    None => 0.0,
                }
            }
            VarEntity::StartDay { activity } => {
                let idx = position[&activity];
                match starts[idx] {
                    Some(s) => (s / grid.steps_per_day()) as f64,
                    None => model.day_sentinel as f64,
                }
            }
            VarEntity::NetLoad { slot, scenario } => net[scenario.unwrap_or(0)][slot],
            VarEntity::PeakAbs { scenario } => peaks[scenario.unwrap_or(0)],
            VarEntity::PeakLevel { level, scenario } => {
                let eta = peaks[scenario.unwrap_or(0)];
                if eta <= 0.0 {
                    0.0
                } else {
                    let target = (eta.ceil() as usize).clamp(1, model.peak_bound);
                    (level == target) as usize as f64
                }
            }
        };
        assignment.set(variable.name.clone(), value);
    }
    Ok(assignment)
}

/// Outcome of a point check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub feasible: bool,
    pub objective: f64,
    /// Names of violated constraints and bound/integrality breaches.
    pub violated: Vec<String>,
}

/// Absolute tolerance for constraint and bound checks.
pub const CHECK_TOLERANCE: f64 = 1e-6;

/// Evaluates every constraint, bound and integrality condition at a point.
/// Peak-level variables are continuous in exports but checked here under the
/// one-hot integral reading.
pub fn check_assignment(model: &MipModel, assignment: &Assignment) -> Result<CheckReport, MipError> {
    let mut values = Vec::with_capacity(model.variables().len());
    for variable in model.variables() {
        let value = assignment
            .get(&variable.name)
            .ok_or_else(|| MipError::MissingVariable(variable.name.clone()))?;
        values.push(value);
    }
    let mut violated = Vec::new();
    for (variable, &value) in model.variables().iter().zip(&values) {
        if value < variable.lower - CHECK_TOLERANCE || value > variable.upper + CHECK_TOLERANCE {
            violated.push(format!("bound:{}", variable.name));
            continue;
        }
        let must_be_integral = matches!(variable.kind, VarKind::Binary | VarKind::Integer)
            || matches!(variable.entity, VarEntity::PeakLevel { .. });
        if must_be_integral && (value - value.round()).abs() > CHECK_TOLERANCE {
            violated.push(format!("integrality:{}", variable.name));
        }
    }
    for constraint in model.constraints() {
        let lhs: f64 = constraint
            .terms
            .iter()
            .map(|(idx, coef)| coef * values[*idx])
            .sum();
        let ok = match constraint.sense {
            Sense::Le => lhs <= constraint.rhs + CHECK_TOLERANCE,
            Sense::Ge => lhs >= constraint.rhs - CHECK_TOLERANCE,
            Sense::Eq => (lhs - constraint.rhs).abs() <= CHECK_TOLERANCE,
        };
        if !ok {
            violated.push(constraint.name.clone());
        }
    }
    Ok(CheckReport {
        feasible: violated.is_empty(),
        objective: model.objective_value(&values),
        violated,
    })
}
