//! Builds the scheduling MILP: deterministic form and the scenario-averaged
//! (SAA) form. The quadratic demand charge is linearized through a one-hot
//! level selector over integer peak levels, and room capacities are modeled
//! at aggregate totals (per-building assignment is recovered afterwards by
//! room post-processing).

use crate::error::MipError;
use crate::model::{ActivityKind, Instance};

use super::domains::activity_domains;
use super::model::{MipModel, Sense, VarEntity, VarKind};

/// Integer upper bound on the absolute net load: base plus every activity
/// running plus every battery charging (and, on the negative side, every
/// battery discharging below the base minimum).
pub fn peak_bound(instance: &Instance, scenarios: &[Vec<f64>]) -> usize {
    let mut base_max = f64::NEG_INFINITY;
    let mut base_min = f64::INFINITY;
    let mut scan = |series: &[f64]| {
        for v in series {
            base_max = base_max.max(*v);
            base_min = base_min.min(*v);
        }
    };
    if scenarios.is_empty() {
        scan(&instance.net_base_load_kw);
    } else {
        for s in scenarios {
            scan(s);
        }
    }
    let activity_load: f64 = instance.activities.iter().map(|a| a.load_kw()).sum();
    let charge: f64 = instance.batteries.iter().map(|b| b.charge_draw_kw()).sum();
    let discharge: f64 = instance.batteries.iter().map(|b| b.discharge_inject_kw()).sum();
    let upper = base_max.max(0.0) + activity_load + charge;
    let lower = base_min.min(0.0) - discharge;
    let bound = upper.max(-lower).ceil();
    (bound as usize).max(1)
}

/// Deterministic model over the instance's net base load, Eqs. (1)-(19).
pub fn build_deterministic_model(instance: &Instance) -> Result<MipModel, MipError> {
    build_model(instance, &[])
}

/// Scenario-averaged model: scheduling and battery variables are shared,
/// net-load/peak variables and their constraints are replicated per
/// scenario, and the objective averages the per-scenario energy and demand
/// terms.
pub fn build_saa_model(instance: &Instance, scenarios: &[Vec<f64>]) -> Result<MipModel, MipError> {
    if scenarios.is_empty() {
        return Err(MipError::EmptyScenarioSet);
    }
    let t = instance.grid.total_slots();
    for (index, s) in scenarios.iter().enumerate() {
        if s.len() != t {
            return Err(MipError::ScenarioLengthMismatch {
                index,
                len: s.len(),
                expected: t,
            });
        }
    }
    build_model(instance, scenarios)
}

struct VarIds {
    charge: Vec<Vec<usize>>,    // [battery][t]
    discharge: Vec<Vec<usize>>, // [battery][t]
    soc: Vec<Vec<usize>>,       // [battery][t]
    // Sparse per activity: (slot, var index), sorted by slot.
    start: Vec<Vec<(usize, usize)>>,
    active: Vec<Vec<(usize, usize)>>,
    scheduled: Vec<usize>,
    after_hours: Vec<Option<usize>>,
    start_day: Vec<usize>,
    net_load: Vec<Vec<usize>>, // [scenario][t]
    peak: Vec<usize>,          // [scenario]
    levels: Vec<Vec<usize>>,   // [scenario][level-1]
}

fn scenario_tag(scenarios: usize, s: usize) -> String {
    if scenarios == 0 {
        String::new()
    } else {
        format!("_s{s}")
    }
}

fn build_model(instance: &Instance, scenarios: &[Vec<f64>]) -> Result<MipModel, MipError> {
    let grid = &instance.grid;
    let t = grid.total_slots();
    let steps = grid.steps_per_day();
    let domains = activity_domains(instance);

    // A recurring activity with an empty start domain makes constraint (18)
    // unsatisfiable; the office window is the only way that happens.
    for (activity, domain) in instance.activities.iter().zip(&domains) {
        if activity.kind == ActivityKind::Recurring && domain.starts.is_empty() {
            return Err(MipError::NoOfficeSlots);
        }
    }

    let m_bound = peak_bound(instance, scenarios);
    // ceil((T+1)/D), the day index assigned to unscheduled activities.
    let day_sentinel = (t + steps) / steps;
    let n_scen = scenarios.len();
    let scen_count = n_scen.max(1);

    let mut model = MipModel::new("gridsched");
    model.peak_bound = m_bound;
    model.day_sentinel = day_sentinel;
    model.scenario_loads = scenarios.to_vec();

    // Variables.
    let mut ids = VarIds {
        charge: Vec::new(),
        discharge: Vec::new(),
        soc: Vec::new(),
        start: Vec::new(),
        active: Vec::new(),
        scheduled: Vec::new(),
        after_hours: Vec::new(),
        start_day: Vec::new(),
        net_load: Vec::new(),
        peak: Vec::new(),
        levels: Vec::new(),
    };
    for battery in &instance.batteries {
        let b = battery.id.0;
        let mut charge = Vec::with_capacity(t);
        let mut discharge = Vec::with_capacity(t);
        let mut soc = Vec::with_capacity(t);
        for slot in 0..t {
            charge.push(model.add_variable(
                format!("x_b{b}_t{slot}"),
                VarKind::Binary,
                0.0,
                1.0,
                VarEntity::BatteryCharge {
                    battery: battery.id,
                    slot,
                },
            )?);
        }
        for slot in 0..t {
            discharge.push(model.add_variable(
                format!("y_b{b}_t{slot}"),
                VarKind::Binary,
                0.0,
                1.0,
                VarEntity::BatteryDischarge {
                    battery: battery.id,
                    slot,
                },
            )?);
        }
        for slot in 0..t {
            soc.push(model.add_variable(
                format!("s_b{b}_t{slot}"),
                VarKind::Continuous,
                0.0,
                battery.capacity_kwh,
                VarEntity::BatterySoc {
                    battery: battery.id,
                    slot,
                },
            )?);
        }
        ids.charge.push(charge);
        ids.discharge.push(discharge);
        ids.soc.push(soc);
    }
    for (activity, domain) in instance.activities.iter().zip(&domains) {
        let a = activity.id.0;
        let mut start = Vec::with_capacity(domain.starts.len());
        for &slot in &domain.starts {
            start.push((
                slot,
                model.add_variable(
                    format!("z_a{a}_t{slot}"),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarEntity::ActivityStart {
                        activity: activity.id,
                        slot,
                    },
                )?,
            ));
        }
        let mut active = Vec::with_capacity(domain.active_slots.len());
        for &slot in &domain.active_slots {
            active.push((
                slot,
                model.add_variable(
                    format!("v_a{a}_t{slot}"),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarEntity::ActivityActive {
                        activity: activity.id,
                        slot,
                    },
                )?,
            ));
        }
        ids.start.push(start);
        ids.active.push(active);
        ids.scheduled.push(model.add_variable(
            format!("w_a{a}"),
            VarKind::Binary,
            0.0,
            1.0,
            VarEntity::Scheduled {
                activity: activity.id,
            },
        )?);
        ids.after_hours.push(match activity.kind {
            ActivityKind::OnceOff => Some(model.add_variable(
                format!("u_a{a}"),
                VarKind::Binary,
                0.0,
                1.0,
                VarEntity::AfterHours {
                    activity: activity.id,
                },
            )?),
            ActivityKind::Recurring => None,
        });
        ids.start_day.push(model.add_variable(
            format!("d_a{a}"),
            VarKind::Continuous,
            0.0,
            day_sentinel as f64,
            VarEntity::StartDay {
                activity: activity.id,
            },
        )?);
    }
    for s in 0..scen_count {
        let scenario = if n_scen == 0 { None } else { Some(s) };
        let tag = scenario_tag(n_scen, s);
        let mut net = Vec::with_capacity(t);
        for slot in 0..t {
            net.push(model.add_variable(
                format!("l_t{slot}{tag}"),
                VarKind::Continuous,
                f64::NEG_INFINITY,
                f64::INFINITY,
                VarEntity::NetLoad { slot, scenario },
            )?);
        }
        ids.net_load.push(net);
        ids.peak.push(model.add_variable(
            format!("eta{tag}"),
            VarKind::Continuous,
            0.0,
            f64::INFINITY,
            VarEntity::PeakAbs { scenario },
        )?);
        let mut levels = Vec::with_capacity(m_bound);
        for level in 1..=m_bound {
            // Declared continuous; the point checker still enforces the
            // one-hot integral reading.
            levels.push(model.add_variable(
                format!("lam_{level}{tag}"),
                VarKind::Continuous,
                0.0,
                1.0,
                VarEntity::PeakLevel { level, scenario },
            )?);
        }
        ids.levels.push(levels);
    }

    // Objective.
    let energy_factor = 0.25 / 1000.0 / scen_count as f64;
    for s in 0..scen_count {
        for slot in 0..t {
            model.add_objective_term(
                ids.net_load[s][slot],
                energy_factor * instance.price_mwh[slot],
            );
        }
        for (level, &var) in ids.levels[s].iter().enumerate() {
            let i = (level + 1) as f64;
            model.add_objective_term(var, 0.005 * i * i / scen_count as f64);
        }
    }
    for (idx, activity) in instance.activities.iter().enumerate() {
        if activity.kind == ActivityKind::OnceOff {
            model.add_objective_term(ids.scheduled[idx], -activity.value);
            if let Some(u) = ids.after_hours[idx] {
                model.add_objective_term(u, activity.penalty);
            }
        }
    }

    // (1)-(5): start/progress coupling, scheduling indicators, day index.
    for (idx, activity) in instance.activities.iter().enumerate() {
        let a = activity.id.0;
        let domain = &domains[idx];
        for &(slot, v_var) in &ids.active[idx] {
            let mut terms: Vec<(usize, f64)> = ids.start[idx]
                .iter()
                .filter(|(s, _)| *s + activity.duration > slot && *s <= slot)
                .map(|(_, var)| (*var, 1.0))
                .collect();
            terms.push((v_var, -1.0));
            model.add_constraint(format!("c1_a{a}_t{slot}"), terms, Sense::Eq, 0.0);
        }
        let mut terms: Vec<(usize, f64)> =
            ids.active[idx].iter().map(|(_, var)| (*var, 1.0)).collect();
        terms.push((ids.scheduled[idx], -(activity.duration as f64)));
        model.add_constraint(format!("c2_a{a}"), terms, Sense::Eq, 0.0);

        let mut terms: Vec<(usize, f64)> =
            ids.start[idx].iter().map(|(_, var)| (*var, 1.0)).collect();
        terms.push((ids.scheduled[idx], -1.0));
        model.add_constraint(format!("c3_a{a}"), terms, Sense::Eq, 0.0);

        if let Some(u_var) = ids.after_hours[idx] {
            let mut terms: Vec<(usize, f64)> = ids.start[idx]
                .iter()
                .filter(|(s, _)| domain.is_penalty_start(*s))
                .map(|(_, var)| (*var, 1.0))
                .collect();
            terms.push((u_var, -1.0));
            model.add_constraint(format!("c4_a{a}"), terms, Sense::Eq, 0.0);
        }

        let mut terms: Vec<(usize, f64)> = ids.start[idx]
            .iter()
            .map(|(s, var)| (*var, (s / steps) as f64))
            .collect();
        terms.push((ids.scheduled[idx], -(day_sentinel as f64)));
        terms.push((ids.start_day[idx], -1.0));
        model.add_constraint(
            format!("c5_a{a}"),
            terms,
            Sense::Eq,
            -(day_sentinel as f64),
        );
    }

    // (6)-(7): precedence on strictly earlier days; prerequisites must be
    // scheduled before their dependents can be.
    let position: std::collections::HashMap<_, _> = instance
        .activities
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id, i))
        .collect();
    for (idx, activity) in instance.activities.iter().enumerate() {
        for prereq in &activity.prerequisites {
            let p_idx = position[prereq];
            let a = activity.id.0;
            let p = prereq.0;
            model.add_constraint(
                format!("c6_a{a}_p{p}"),
                vec![
                    (ids.start_day[p_idx], 1.0),
                    (ids.scheduled[p_idx], 1.0),
                    (ids.start_day[idx], -1.0),
                ],
                Sense::Le,
                0.0,
            );
            model.add_constraint(
                format!("c7_a{a}_p{p}"),
                vec![(ids.scheduled[idx], 1.0), (ids.scheduled[p_idx], -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }

    // (8)-(10): battery dynamics and charge/discharge exclusivity.
    for (b_idx, battery) in instance.batteries.iter().enumerate() {
        let b = battery.id.0;
        let step = battery.soc_step_kwh();
        model.add_constraint(
            format!("c8_b{b}"),
            vec![
                (ids.soc[b_idx][0], 1.0),
                (ids.charge[b_idx][0], -step),
                (ids.discharge[b_idx][0], step),
            ],
            Sense::Eq,
            battery.initial_kwh,
        );
        for slot in 1..t {
            model.add_constraint(
                format!("c9_b{b}_t{slot}"),
                vec![
                    (ids.soc[b_idx][slot], 1.0),
                    (ids.soc[b_idx][slot - 1], -1.0),
                    (ids.charge[b_idx][slot], -step),
                    (ids.discharge[b_idx][slot], step),
                ],
                Sense::Eq,
                0.0,
            );
        }
        for slot in 0..t {
            model.add_constraint(
                format!("c10_b{b}_t{slot}"),
                vec![
                    (ids.charge[b_idx][slot], 1.0),
                    (ids.discharge[b_idx][slot], 1.0),
                ],
                Sense::Le,
                1.0,
            );
        }
    }

    // Per-slot activity terms, shared by (11)-(13): recurring activities
    // contribute through the first-week mapping.
    let offset = grid.first_monday_offset();
    let week = grid.week_slots();
    let mut active_at: Vec<Vec<(usize, usize)>> = vec![Vec::new(); t];
    for (idx, activity) in instance.activities.iter().enumerate() {
        match activity.kind {
            ActivityKind::OnceOff => {
                for &(slot, var) in &ids.active[idx] {
                    active_at[slot].push((idx, var));
                }
            }
            ActivityKind::Recurring => {
                for &(rel, var) in &ids.active[idx] {
                    let mut abs = offset + rel;
                    while abs < t {
                        active_at[abs].push((idx, var));
                        abs += week;
                    }
                }
            }
        }
    }

    // (12)-(13): aggregate room capacities.
    let total_large = instance.total_large_rooms() as f64;
    let total_small = instance.total_small_rooms() as f64;
    for slot in 0..t {
        let large_terms: Vec<(usize, f64)> = active_at[slot]
            .iter()
            .filter(|(idx, _)| instance.activities[*idx].large_rooms > 0)
            .map(|(idx, var)| (*var, instance.activities[*idx].large_rooms as f64))
            .collect();
        if !large_terms.is_empty() {
            model.add_constraint(format!("c12_t{slot}"), large_terms, Sense::Le, total_large);
        }
        let small_terms: Vec<(usize, f64)> = active_at[slot]
            .iter()
            .filter(|(idx, _)| instance.activities[*idx].small_rooms > 0)
            .map(|(idx, var)| (*var, instance.activities[*idx].small_rooms as f64))
            .collect();
        if !small_terms.is_empty() {
            model.add_constraint(format!("c13_t{slot}"), small_terms, Sense::Le, total_small);
        }
    }

    // (11), (14)-(17): net load definition and peak linearization, per
    // scenario in the SAA form.
    for s in 0..scen_count {
        let tag = scenario_tag(n_scen, s);
        let base = if n_scen == 0 {
            &instance.net_base_load_kw
        } else {
            &scenarios[s]
        };
        for slot in 0..t {
            let mut terms = vec![(ids.net_load[s][slot], 1.0)];
            for (b_idx, battery) in instance.batteries.iter().enumerate() {
                terms.push((ids.charge[b_idx][slot], -battery.charge_draw_kw()));
                terms.push((ids.discharge[b_idx][slot], battery.discharge_inject_kw()));
            }
            for (idx, var) in &active_at[slot] {
                terms.push((*var, -instance.activities[*idx].load_kw()));
            }
            model.add_constraint(format!("c11_t{slot}{tag}"), terms, Sense::Eq, base[slot]);
        }
        let terms: Vec<(usize, f64)> = ids.levels[s].iter().map(|v| (*v, 1.0)).collect();
        model.add_constraint(format!("c14{tag}"), terms, Sense::Le, 1.0);
        let mut terms: Vec<(usize, f64)> = ids.levels[s]
            .iter()
            .enumerate()
            .map(|(level, v)| (*v, (level + 1) as f64))
            .collect();
        terms.push((ids.peak[s], -1.0));
        model.add_constraint(format!("c15{tag}"), terms, Sense::Ge, 0.0);
        for slot in 0..t {
            model.add_constraint(
                format!("c16_t{slot}{tag}"),
                vec![(ids.peak[s], 1.0), (ids.net_load[s][slot], -1.0)],
                Sense::Ge,
                0.0,
            );
            model.add_constraint(
                format!("c17_t{slot}{tag}"),
                vec![(ids.peak[s], 1.0), (ids.net_load[s][slot], 1.0)],
                Sense::Ge,
                0.0,
            );
        }
    }

    // (18): recurring activities are always scheduled.
    for (idx, activity) in instance.activities.iter().enumerate() {
        if activity.kind == ActivityKind::Recurring {
            model.add_constraint(
                format!("c18_a{}", activity.id.0),
                vec![(ids.scheduled[idx], 1.0)],
                Sense::Eq,
                1.0,
            );
        }
    }

    Ok(model)
}
