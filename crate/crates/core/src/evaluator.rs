//! Feasibility checking and cost computation — the ground truth every solver
//! is validated against.
//!
//! Feasibility and price are separate calls: infeasible schedules are still
//! priced so searches can use cost as a diagnostic. The cost arithmetic is
//! generic over [`Scalar`] so tests can replay it over exact rationals.

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::model::{
    occurrence_slots, ActivityId, ActivityKind, BatteryAction, BatteryId, BuildingId, Instance,
    Schedule,
};
use crate::scalar::Scalar;

/// Absolute slack for battery state-of-charge bound checks.
const SOC_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// Recurring start lies outside the first-Monday week (start >= week slots).
    RecStartOutsideFirstWeek,
    /// Recurring start is not inside a weekday office window.
    StartBefore9,
    /// Recurring occurrence runs past 17:00 of its start day.
    EndAfter17,
    /// Recurring occurrence crosses the weekly boundary.
    CrossesWeekBoundary,
    /// Prerequisite does not start on a strictly earlier day.
    PrecedenceViolated,
    /// Scheduled once-off whose prerequisite is unscheduled.
    PrereqUnscheduled,
    /// Per-building, per-slot room demand exceeds capacity for a size class.
    RoomOverbooked,
    /// Battery state of charge below zero.
    BatterySoCUnder,
    /// Battery state of charge above capacity.
    BatterySoCOver,
    /// Once-off interval overruns the grid.
    OnceOffOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Activity(ActivityId),
    Battery(BatteryId),
    Building(BuildingId),
}

impl std::fmt::Display for Subject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subject::Activity(id) => write!(f, "activity {id}"),
            Subject::Battery(id) => write!(f, "battery {id}"),
            Subject::Building(id) => write!(f, "building {id}"),
        }
    }
}

/// One broken checklist rule. The evaluator returns every violation, not
/// just the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: Subject,
    pub slot: usize,
}

/// The objective, broken into its three terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdownOf<S> {
    pub energy_cost: S,
    pub demand_charge: S,
    pub onceoff_profit: S,
    /// `energy_cost + demand_charge - onceoff_profit`.
    pub total: S,
    /// Peak of the net load profile, kW.
    pub peak_load: S,
    /// Net load per slot, kW.
    pub net_load: Vec<S>,
    /// Slots where the net load went negative (the model assumes no feed-in;
    /// this is a warning, not a violation).
    pub negative_load_slots: Vec<usize>,
}

/// Aggregation rule for scenario costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaaMode {
    Average,
    WorstCase,
}

/// Every violation of the feasibility checklist; empty means feasible.
///
/// The schedule must already be structurally valid for the instance
/// (see [`Schedule::validate`]).
pub fn check_feasibility(instance: &Instance, schedule: &Schedule) -> Vec<Violation> {
    let grid = &instance.grid;
    let mut violations = Vec::new();

    for activity in &instance.activities {
        match activity.kind {
            ActivityKind::Recurring => {
                let p = match schedule.recurring.get(&activity.id) {
                    Some(p) => *p,
                    None => continue,
                };
                let subject = Subject::Activity(activity.id);
                if p.start >= grid.week_slots() {
                    violations.push(Violation {
                        kind: ViolationKind::RecStartOutsideFirstWeek,
                        subject,
                        slot: p.start,
                    });
                    continue;
                }
                if p.start + activity.duration > grid.week_slots() {
                    violations.push(Violation {
                        kind: ViolationKind::CrossesWeekBoundary,
                        subject,
                        slot: p.start,
                    });
                }
                let day = p.start / grid.steps_per_day();
                let slot_in_day = p.start % grid.steps_per_day();
                let first_day = grid.first_monday_offset() / grid.steps_per_day() + day;
                let weekday = day < 7 && grid.is_weekday(first_day);
                if !weekday
                    || slot_in_day < grid.office_start()
                    || slot_in_day >= grid.office_end()
                {
                    violations.push(Violation {
                        kind: ViolationKind::StartBefore9,
                        subject,
                        slot: p.start,
                    });
                } else if slot_in_day + activity.duration > grid.office_end() {
                    violations.push(Violation {
                        kind: ViolationKind::EndAfter17,
                        subject,
                        slot: p.start,
                    });
                }
            }
            ActivityKind::OnceOff => {
                let p = match schedule.once_off.get(&activity.id) {
                    Some(p) => *p,
                    None => continue,
                };
                if p.start + activity.duration > grid.total_slots() {
                    violations.push(Violation {
                        kind: ViolationKind::OnceOffOverflow,
                        subject: Subject::Activity(activity.id),
                        slot: p.start,
                    });
                }
            }
        }
    }

    // Precedence: prerequisite on a strictly earlier day. For recurring
    // activities the rule applies to the weekday inside the recurring week;
    // for once-offs to the absolute calendar day, and an unscheduled
    // prerequisite blocks its successor.
    for activity in &instance.activities {
        if !schedule.is_scheduled(activity) {
            continue;
        }
        for prereq_id in &activity.prerequisites {
            let prereq = match instance.activity(*prereq_id) {
                Some(a) => a,
                None => continue,
            };
            match activity.kind {
                ActivityKind::Recurring => {
                    let (a, p) = match (
                        schedule.recurring.get(&activity.id),
                        schedule.recurring.get(&prereq.id),
                    ) {
                        (Some(a), Some(p)) => (a, p),
                        _ => continue,
                    };
                    if a.start >= grid.week_slots() || p.start >= grid.week_slots() {
                        continue; // already reported as out-of-week
                    }
                    let day_a = a.start / grid.steps_per_day();
                    let day_p = p.start / grid.steps_per_day();
                    if day_p >= day_a {
                        violations.push(Violation {
                            kind: ViolationKind::PrecedenceViolated,
                            subject: Subject::Activity(activity.id),
                            slot: a.start,
                        });
                    }
                }
                ActivityKind::OnceOff => {
                    let a = schedule.once_off[&activity.id];
                    match schedule.once_off.get(&prereq.id) {
                        None => violations.push(Violation {
                            kind: ViolationKind::PrereqUnscheduled,
                            subject: Subject::Activity(activity.id),
                            slot: a.start,
                        }),
                        Some(p) => {
                            if grid.day_of(p.start) >= grid.day_of(a.start) {
                                violations.push(Violation {
                                    kind: ViolationKind::PrecedenceViolated,
                                    subject: Subject::Activity(activity.id),
                                    slot: a.start,
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    violations.extend(room_violations(instance, schedule));

    for battery in &instance.batteries {
        let trace = match battery_soc_trace(instance, schedule, battery.id) {
            Ok(t) => t,
            Err(_) => continue,
        };
        for (t, soc) in trace.iter().enumerate() {
            if *soc < -SOC_EPS {
                violations.push(Violation {
                    kind: ViolationKind::BatterySoCUnder,
                    subject: Subject::Battery(battery.id),
                    slot: t,
                });
            } else if *soc > battery.capacity_kwh + SOC_EPS {
                violations.push(Violation {
                    kind: ViolationKind::BatterySoCOver,
                    subject: Subject::Battery(battery.id),
                    slot: t,
                });
            }
        }
    }

    violations
}

fn room_violations(instance: &Instance, schedule: &Schedule) -> Vec<Violation> {
    let t = instance.grid.total_slots();
    let nb = instance.buildings.len();
    let mut small = vec![0usize; nb * t];
    let mut large = vec![0usize; nb * t];
    for activity in &instance.activities {
        if !schedule.is_scheduled(activity) {
            continue;
        }
        let building = schedule.building_of(activity).unwrap();
        let bi = match instance.buildings.iter().position(|b| b.id == building) {
            Some(i) => i,
            None => continue,
        };
        let occurrences = match occurrence_slots(&instance.grid, activity, schedule) {
            Ok(o) => o,
            Err(_) => continue, // overflow reported separately
        };
        for occ in occurrences {
            for slot in occ.slots() {
                if slot >= t {
                    break;
                }
                small[bi * t + slot] += activity.small_rooms;
                large[bi * t + slot] += activity.large_rooms;
            }
        }
    }
    let mut violations = Vec::new();
    for (bi, building) in instance.buildings.iter().enumerate() {
        for slot in 0..t {
            if small[bi * t + slot] > building.small_rooms
                || large[bi * t + slot] > building.large_rooms
            {
                violations.push(Violation {
                    kind: ViolationKind::RoomOverbooked,
                    subject: Subject::Building(building.id),
                    slot,
                });
            }
        }
    }
    violations
}

/// State of charge at the end of every slot, in the requested arithmetic.
pub fn battery_soc_trace_in<S: Scalar>(
    instance: &Instance,
    schedule: &Schedule,
    battery_id: BatteryId,
) -> Result<Vec<S>, EvalError> {
    let battery = instance
        .battery(battery_id)
        .ok_or(EvalError::UnknownBattery(battery_id.0))?;
    let actions = schedule
        .batteries
        .get(&battery_id)
        .ok_or(EvalError::UnknownBattery(battery_id.0))?;
    let step = S::from_f64(battery.soc_step_kwh());
    let mut soc = S::from_f64(battery.initial_kwh);
    let mut trace = Vec::with_capacity(actions.len());
    for action in actions {
        match action {
            BatteryAction::Charge => soc = soc + step.clone(),
            BatteryAction::Discharge => soc = soc - step.clone(),
            BatteryAction::Hold => {}
        }
        trace.push(soc.clone());
    }
    Ok(trace)
}

pub fn battery_soc_trace(
    instance: &Instance,
    schedule: &Schedule,
    battery_id: BatteryId,
) -> Result<Vec<f64>, EvalError> {
    battery_soc_trace_in::<f64>(instance, schedule, battery_id)
}

/// Activity plus battery load, kW per slot — everything the schedule adds on
/// top of the net base load.
pub fn schedule_load_delta_in<S: Scalar>(instance: &Instance, schedule: &Schedule) -> Vec<S> {
    let t = instance.grid.total_slots();
    let mut delta = vec![S::zero(); t];
    for activity in &instance.activities {
        if !schedule.is_scheduled(activity) {
            continue;
        }
        let load = S::from_f64(activity.load_kw());
        if let Ok(occurrences) = occurrence_slots(&instance.grid, activity, schedule) {
            for occ in occurrences {
                for slot in occ.slots() {
                    if slot < t {
                        delta[slot] = delta[slot].clone() + load.clone();
                    }
                }
            }
        }
    }
    for battery in &instance.batteries {
        let actions = match schedule.batteries.get(&battery.id) {
            Some(a) => a,
            None => continue,
        };
        let draw = S::from_f64(battery.charge_draw_kw());
        let inject = S::from_f64(battery.discharge_inject_kw());
        for (slot, action) in actions.iter().enumerate().take(t) {
            match action {
                BatteryAction::Charge => delta[slot] = delta[slot].clone() + draw.clone(),
                BatteryAction::Discharge => delta[slot] = delta[slot].clone() - inject.clone(),
                BatteryAction::Hold => {}
            }
        }
    }
    delta
}

/// Net load profile: base load plus scheduled activities plus battery grid
/// exchange.
pub fn net_load_profile_in<S: Scalar>(instance: &Instance, schedule: &Schedule) -> Vec<S> {
    let mut load = schedule_load_delta_in::<S>(instance, schedule);
    for (slot, base) in instance.net_base_load_kw.iter().enumerate() {
        load[slot] = load[slot].clone() + S::from_f64(*base);
    }
    load
}

pub fn net_load_profile(instance: &Instance, schedule: &Schedule) -> Vec<f64> {
    net_load_profile_in::<f64>(instance, schedule)
}

/// True when any occupied slot of the interval lies outside weekday office
/// hours (slots beyond the grid count as outside).
pub fn is_after_hours(instance: &Instance, start: usize, duration: usize) -> bool {
    let t = instance.grid.total_slots();
    (start..start + duration).any(|slot| slot >= t || !instance.grid.is_office_slot(slot))
}

fn cost_terms_in<S: Scalar>(instance: &Instance, net_load: &[S]) -> (S, S, S) {
    // 0.25/1000 converts kW per slot into MWh; both factors are exact in
    // rational arithmetic and round once in f64.
    let energy_factor = S::ratio(1, 4000);
    let demand_factor = S::ratio(5, 1000);
    let mut energy = S::zero();
    for (slot, load) in net_load.iter().enumerate() {
        energy = energy
            + energy_factor.clone() * load.clone() * S::from_f64(instance.price_mwh[slot]);
    }
    let peak = crate::scalar::fold_max(net_load.iter().cloned()).unwrap_or_else(S::zero);
    let demand = demand_factor * peak.clone() * peak.clone();
    (energy, demand, peak)
}

fn onceoff_profit_in<S: Scalar>(instance: &Instance, schedule: &Schedule) -> S {
    let mut profit = S::zero();
    for activity in instance.onceoff_activities() {
        if let Some(p) = schedule.once_off.get(&activity.id) {
            let after_hours = is_after_hours(instance, p.start, activity.duration);
            let mut gain = S::from_f64(activity.value);
            if after_hours {
                gain = gain - S::from_f64(activity.penalty);
            }
            profit = profit + gain;
        }
    }
    profit
}

/// Full cost breakdown in the requested arithmetic. Computes on infeasible
/// schedules too (feasibility is a separate call).
pub fn objective_cost_in<S: Scalar>(instance: &Instance, schedule: &Schedule) -> CostBreakdownOf<S> {
    let net_load = net_load_profile_in::<S>(instance, schedule);
    let (energy_cost, demand_charge, peak_load) = cost_terms_in(instance, &net_load);
    let onceoff_profit = onceoff_profit_in::<S>(instance, schedule);
    let total = energy_cost.clone() + demand_charge.clone() - onceoff_profit.clone();
    let negative_load_slots = net_load
        .iter()
        .enumerate()
        .filter(|(_, l)| **l < S::zero())
        .map(|(t, _)| t)
        .collect();
    CostBreakdownOf {
        energy_cost,
        demand_charge,
        onceoff_profit,
        total,
        peak_load,
        net_load,
        negative_load_slots,
    }
}

pub fn objective_cost(instance: &Instance, schedule: &Schedule) -> CostBreakdownOf<f64> {
    objective_cost_in::<f64>(instance, schedule)
}

/// Scenario-aggregated cost: the net base load is replaced per scenario, the
/// energy and demand terms are aggregated by mean or max, and the once-off
/// profit (scenario independent) is subtracted once.
pub fn saa_cost_in<S: Scalar>(
    instance: &Instance,
    schedule: &Schedule,
    scenarios: &[Vec<f64>],
    mode: SaaMode,
) -> Result<S, EvalError> {
    if scenarios.is_empty() {
        return Err(EvalError::EmptyScenarioSet);
    }
    let t = instance.grid.total_slots();
    for (index, s) in scenarios.iter().enumerate() {
        if s.len() != t {
            return Err(EvalError::ScenarioLengthMismatch {
                index,
                len: s.len(),
                expected: t,
            });
        }
    }
    let delta = schedule_load_delta_in::<S>(instance, schedule);
    let mut aggregated: Option<S> = None;
    for scenario in scenarios {
        let net: Vec<S> = delta
            .iter()
            .zip(scenario)
            .map(|(d, base)| d.clone() + S::from_f64(*base))
            .collect();
        let (energy, demand, _) = cost_terms_in(instance, &net);
        let cost = energy + demand;
        aggregated = Some(match (aggregated, mode) {
            (None, _) => cost,
            (Some(acc), SaaMode::Average) => acc + cost,
            (Some(acc), SaaMode::WorstCase) => {
                if cost > acc {
                    cost
                } else {
                    acc
                }
            }
        });
    }
    let mut cost = aggregated.unwrap();
    if mode == SaaMode::Average {
        cost = cost / S::from_f64(scenarios.len() as f64);
    }
    Ok(cost - onceoff_profit_in::<S>(instance, schedule))
}

pub fn saa_cost(
    instance: &Instance,
    schedule: &Schedule,
    scenarios: &[Vec<f64>],
    mode: SaaMode,
) -> Result<f64, EvalError> {
    saa_cost_in::<f64>(instance, schedule, scenarios, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Activity, Battery, Building, OnceOffPlacement, RecurringPlacement, TimeGrid,
    };
    use crate::scalar::Exact;
    use chrono::NaiveDate;

    fn october_instance() -> Instance {
        let grid = TimeGrid::new(NaiveDate::from_ymd_opt(2020, 10, 1).unwrap(), 31).unwrap();
        let t = grid.total_slots();
        Instance {
            grid,
            buildings: vec![
                Building {
                    id: BuildingId(0),
                    small_rooms: 2,
                    large_rooms: 1,
                    base_load_series_id: String::new(),
                    solar_series_id: String::new(),
                },
                Building {
                    id: BuildingId(1),
                    small_rooms: 2,
                    large_rooms: 1,
                    base_load_series_id: String::new(),
                    solar_series_id: String::new(),
                },
            ],
            activities: vec![],
            batteries: vec![],
            price_mwh: vec![40.0; t],
            net_base_load_kw: vec![0.0; t],
        }
    }

    fn recurring(id: usize, duration: usize) -> Activity {
        Activity {
            id: ActivityId(id),
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

    fn onceoff(id: usize, duration: usize) -> Activity {
        Activity {
            id: ActivityId(id),
            kind: ActivityKind::OnceOff,
            duration,
            small_rooms: 1,
            large_rooms: 0,
            power_per_room: 10.0,
            value: 120.0,
            penalty: 30.0,
            prerequisites: vec![],
        }
    }

    fn place_recurring(sched: &mut Schedule, id: usize, start: usize) {
        sched.recurring.insert(
            ActivityId(id),
            RecurringPlacement {
                start,
                building: BuildingId(0),
            },
        );
    }

    #[test]
    fn start_at_845_is_flagged() {
        let mut inst = october_instance();
        inst.activities.push(recurring(0, 2));
        let mut sched = Schedule::all_hold(&inst);
        place_recurring(&mut sched, 0, 35); // Monday 08:45
        let v = check_feasibility(&inst, &sched);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::StartBefore9);
    }

    #[test]
    fn office_boundaries_are_respected() {
        let mut inst = october_instance();
        inst.activities.push(recurring(0, 2));
        let mut sched = Schedule::all_hold(&inst);
        place_recurring(&mut sched, 0, 36); // Monday 09:00
        assert!(check_feasibility(&inst, &sched).is_empty());
        place_recurring(&mut sched, 0, 66); // ends exactly 17:00
        assert!(check_feasibility(&inst, &sched).is_empty());
        place_recurring(&mut sched, 0, 67); // would end 17:15
        let v = check_feasibility(&inst, &sched);
        assert_eq!(v[0].kind, ViolationKind::EndAfter17);
        place_recurring(&mut sched, 0, 5 * 96 + 40); // Saturday
        let v = check_feasibility(&inst, &sched);
        assert_eq!(v[0].kind, ViolationKind::StartBefore9);
    }

    #[test]
    fn week_boundary_crossing_is_flagged() {
        let mut inst = october_instance();
        inst.activities.push(recurring(0, 2));
        let mut sched = Schedule::all_hold(&inst);
        place_recurring(&mut sched, 0, 671);
        let v = check_feasibility(&inst, &sched);
        assert!(v.iter().any(|v| v.kind == ViolationKind::CrossesWeekBoundary));
    }

    #[test]
    fn onceoff_same_day_prerequisite_is_flagged() {
        let mut inst = october_instance();
        let mut b = onceoff(1, 2);
        b.prerequisites = vec![ActivityId(0)];
        inst.activities.push(onceoff(0, 2));
        inst.activities.push(b);
        let mut sched = Schedule::all_hold(&inst);
        sched.once_off.insert(
            ActivityId(0),
            OnceOffPlacement {
                start: 96 + 40,
                building: BuildingId(0),
                after_hours: false,
            },
        );
        sched.once_off.insert(
            ActivityId(1),
            OnceOffPlacement {
                start: 96 + 50,
                building: BuildingId(1),
                after_hours: false,
            },
        );
        let v = check_feasibility(&inst, &sched);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::PrecedenceViolated);

        // Next day is fine.
        sched.once_off.get_mut(&ActivityId(1)).unwrap().start = 2 * 96 + 50;
        assert!(check_feasibility(&inst, &sched).is_empty());

        // Unscheduled prerequisite blocks the successor.
        sched.once_off.remove(&ActivityId(0));
        let v = check_feasibility(&inst, &sched);
        assert_eq!(v[0].kind, ViolationKind::PrereqUnscheduled);
    }

    #[test]
    fn charging_from_full_overflows_immediately() {
        let mut inst = october_instance();
        inst.batteries.push(Battery {
            id: BatteryId(0),
            capacity_kwh: 300.0,
            initial_kwh: 300.0,
            max_power_kw: 150.0,
            efficiency: 0.81,
        });
        let mut sched = Schedule::all_hold(&inst);
        let t = inst.grid.total_slots();
        sched
            .batteries
            .insert(BatteryId(0), vec![BatteryAction::Charge; t]);
        let v = check_feasibility(&inst, &sched);
        assert_eq!(v[0].kind, ViolationKind::BatterySoCOver);
        assert_eq!(v[0].slot, 0);
    }

    #[test]
    fn soc_trace_examples() {
        let mut inst = october_instance();
        inst.grid = TimeGrid::custom(
            NaiveDate::from_ymd_opt(2020, 10, 5).unwrap(),
            1,
            2,
            0,
            2,
        )
        .unwrap();
        inst.price_mwh = vec![40.0; 2];
        inst.net_base_load_kw = vec![0.0; 2];
        inst.batteries.push(Battery {
            id: BatteryId(0),
            capacity_kwh: 300.0,
            initial_kwh: 0.0,
            max_power_kw: 150.0,
            efficiency: 0.81,
        });
        let mut sched = Schedule::all_hold(&inst);
        sched
            .batteries
            .insert(BatteryId(0), vec![BatteryAction::Charge; 2]);
        assert_eq!(
            battery_soc_trace(&inst, &sched, BatteryId(0)).unwrap(),
            vec![37.5, 75.0]
        );
        sched
            .batteries
            .insert(BatteryId(0), vec![BatteryAction::Hold; 2]);
        assert_eq!(
            battery_soc_trace(&inst, &sched, BatteryId(0)).unwrap(),
            vec![0.0, 0.0]
        );
        inst.batteries[0].initial_kwh = 37.5;
        sched.batteries.insert(
            BatteryId(0),
            vec![BatteryAction::Discharge, BatteryAction::Hold],
        );
        assert_eq!(
            battery_soc_trace(&inst, &sched, BatteryId(0)).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn battery_contributions_match_the_efficiency_split() {
        let mut inst = october_instance();
        inst.batteries.push(Battery {
            id: BatteryId(0),
            capacity_kwh: 300.0,
            initial_kwh: 150.0,
            max_power_kw: 150.0,
            efficiency: 0.81,
        });
        let mut sched = Schedule::all_hold(&inst);
        let t = inst.grid.total_slots();
        let mut actions = vec![BatteryAction::Hold; t];
        actions[0] = BatteryAction::Charge;
        actions[1] = BatteryAction::Discharge;
        sched.batteries.insert(BatteryId(0), actions);
        let load = net_load_profile(&inst, &sched);
        assert!((load[0] - 150.0 / 0.9).abs() < 1e-9);
        assert!((load[1] + 135.0).abs() < 1e-9);
        assert_eq!(load[2], 0.0);
    }

    #[test]
    fn activity_load_sums_rooms() {
        let mut inst = october_instance();
        let mut act = recurring(0, 2);
        act.small_rooms = 2;
        act.large_rooms = 1;
        inst.activities.push(act);
        let mut sched = Schedule::all_hold(&inst);
        place_recurring(&mut sched, 0, 36);
        let load = net_load_profile(&inst, &sched);
        let start = inst.grid.first_monday_offset() + 36;
        assert_eq!(load[start], 30.0);
        assert_eq!(load[start + 1], 30.0);
        assert_eq!(load[start + 2], 0.0);
    }

    #[test]
    fn objective_fixture_four_slots() {
        let grid = TimeGrid::custom(
            NaiveDate::from_ymd_opt(2020, 10, 5).unwrap(),
            1,
            4,
            0,
            4,
        )
        .unwrap();
        let inst = Instance {
            grid,
            buildings: vec![],
            activities: vec![],
            batteries: vec![],
            price_mwh: vec![40.0; 4],
            net_base_load_kw: vec![100.0; 4],
        };
        let sched = Schedule::default();
        let cost = objective_cost(&inst, &sched);
        assert!((cost.energy_cost - 4.0).abs() < 1e-9);
        assert!((cost.demand_charge - 50.0).abs() < 1e-9);
        assert!((cost.total - 54.0).abs() < 1e-9);

        // Exact arithmetic gives the values exactly.
        let exact = objective_cost_in::<Exact>(&inst, &sched);
        assert_eq!(exact.energy_cost, Exact::from_f64(4.0));
        assert_eq!(exact.demand_charge, Exact::from_f64(50.0));
        assert_eq!(exact.total, Exact::from_f64(54.0));
    }

    #[test]
    fn empty_schedule_on_zero_load_costs_nothing() {
        let inst = october_instance();
        let sched = Schedule::default();
        let cost = objective_cost(&inst, &sched);
        assert_eq!(cost.total, 0.0);
    }

    #[test]
    fn onceoff_profit_reduces_total() {
        let mut inst = october_instance();
        let mut act = onceoff(0, 2);
        act.power_per_room = 0.0;
        inst.activities.push(act);
        let mut sched = Schedule::all_hold(&inst);
        // Saturday evening: after hours.
        sched.once_off.insert(
            ActivityId(0),
            OnceOffPlacement {
                start: 2 * 96 + 80,
                building: BuildingId(0),
                after_hours: true,
            },
        );
        let cost = objective_cost(&inst, &sched);
        assert!((cost.onceoff_profit - 90.0).abs() < 1e-12);
        assert!((cost.total + 90.0).abs() < 1e-12);
    }

    #[test]
    fn saa_aggregation_rules() {
        let inst = october_instance();
        let sched = Schedule::default();
        let t = inst.grid.total_slots();
        let low = vec![50.0; t];
        let high = vec![100.0; t];

        let det_low = {
            let mut inst2 = inst.clone();
            inst2.net_base_load_kw = low.clone();
            objective_cost(&inst2, &sched).total
        };
        let det_high = {
            let mut inst2 = inst.clone();
            inst2.net_base_load_kw = high.clone();
            objective_cost(&inst2, &sched).total
        };

        let identical =
            saa_cost(&inst, &sched, &[low.clone(), low.clone()], SaaMode::Average).unwrap();
        assert!((identical - det_low).abs() < 1e-9);
        let identical_worst =
            saa_cost(&inst, &sched, &[low.clone(), low.clone()], SaaMode::WorstCase).unwrap();
        assert!((identical_worst - det_low).abs() < 1e-9);

        let avg = saa_cost(
            &inst,
            &sched,
            &[low.clone(), high.clone()],
            SaaMode::Average,
        )
        .unwrap();
        assert!((avg - (det_low + det_high) / 2.0).abs() < 1e-9);

        let worst =
            saa_cost(&inst, &sched, &[low.clone(), high.clone()], SaaMode::WorstCase).unwrap();
        assert!((worst - det_high).abs() < 1e-9);

        assert!(matches!(
            saa_cost(&inst, &sched, &[], SaaMode::Average),
            Err(EvalError::EmptyScenarioSet)
        ));
    }

    #[test]
    fn price_scaling_scales_energy_only() {
        let mut inst = october_instance();
        inst.net_base_load_kw = vec![120.0; inst.grid.total_slots()];
        let sched = Schedule::default();
        let base = objective_cost(&inst, &sched);
        inst.price_mwh.iter_mut().for_each(|p| *p *= 3.0);
        let scaled = objective_cost(&inst, &sched);
        assert!((scaled.energy_cost - 3.0 * base.energy_cost).abs() < 1e-6);
        assert_eq!(scaled.demand_charge, base.demand_charge);
    }

    #[test]
    fn battery_round_trip_draws_nonnegative_energy() {
        for e in [0.5f64, 0.81, 1.0] {
            let m = 150.0;
            let net = 0.25 * m * (1.0 / e.sqrt() - e.sqrt());
            assert!(net >= -1e-12);
            if e == 1.0 {
                assert!(net.abs() < 1e-12);
            }
        }
    }
}
