//! Exact battery dispatch by dynamic programming over the product
//! state-of-charge lattice (states move in 0.25*m_b steps).
//!
//! `optimize_battery` minimizes the wholesale energy cost of the induced net
//! load, optionally under a hard peak cap. `optimize_battery_total` folds the
//! demand charge back in by sweeping the cap over the achievable peak lattice
//! and keeping the cheapest total.

use std::collections::BTreeMap;

use crate::error::SolveError;
use crate::evaluator::schedule_load_delta_in;
use crate::model::{BatteryAction, BatteryId, Instance, Schedule};

use super::report::Objective;

const EPS: f64 = 1e-9;

pub(super) struct Lattice {
    pub(super) id: BatteryId,
    pub(super) draw_kw: f64,
    pub(super) inject_kw: f64,
    /// Offsets from the initial charge: soc = initial + k * step.
    pub(super) min_k: i64,
    pub(super) max_k: i64,
}

impl Lattice {
    pub(super) fn states(&self) -> usize {
        (self.max_k - self.min_k + 1) as usize
    }
}

pub(super) fn lattices(instance: &Instance) -> Vec<Lattice> {
    instance
        .batteries
        .iter()
        .map(|b| {
            let step = b.soc_step_kwh();
            Lattice {
                id: b.id,
                draw_kw: b.charge_draw_kw(),
                inject_kw: b.discharge_inject_kw(),
                min_k: -((b.initial_kwh + EPS) / step).floor() as i64,
                max_k: ((b.capacity_kwh - b.initial_kwh + EPS) / step).floor() as i64,
            }
        })
        .collect()
}

/// All joint actions in tie-break order: Hold before Charge before
/// Discharge, lexicographic over batteries.
pub(super) fn joint_actions(n: usize) -> Vec<Vec<BatteryAction>> {
    let order = [
        BatteryAction::Hold,
        BatteryAction::Charge,
        BatteryAction::Discharge,
    ];
    let mut combos = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(combos.len() * 3);
        for combo in &combos {
            for action in order {
                let mut c = combo.clone();
                c.push(action);
                next.push(c);
            }
        }
        combos = next;
    }
    combos
}

pub(super) fn contribution(lat: &Lattice, action: BatteryAction) -> f64 {
    match action {
        BatteryAction::Charge => lat.draw_kw,
        BatteryAction::Hold => 0.0,
        BatteryAction::Discharge => -lat.inject_kw,
    }
}

/// Activity-induced net load (base plus scheduled activities, batteries
/// excluded).
pub fn induced_load(instance: &Instance, schedule: &Schedule) -> Vec<f64> {
    let mut bare = schedule.clone();
    bare.batteries = instance
        .batteries
        .iter()
        .map(|b| (b.id, vec![BatteryAction::Hold; instance.grid.total_slots()]))
        .collect();
    let mut load = schedule_load_delta_in::<f64>(instance, &bare);
    for (slot, base) in instance.net_base_load_kw.iter().enumerate() {
        load[slot] += base;
    }
    load
}

/// Core DP. `room_for_battery[t]` is the largest allowed joint battery
/// contribution at slot `t` (`f64::INFINITY` when uncapped). Returns the
/// minimum added energy cost and the plan, or the slot where the cap made
/// every action infeasible.
fn battery_dp(
    instance: &Instance,
    room_for_battery: &[f64],
    cap_for_error: f64,
) -> Result<(f64, BTreeMap<BatteryId, Vec<BatteryAction>>), SolveError> {
    let t = instance.grid.total_slots();
    let lats = lattices(instance);
    if lats.is_empty() {
        return Ok((0.0, BTreeMap::new()));
    }
    let n_states: usize = lats.iter().map(Lattice::states).product();
    let combos = joint_actions(lats.len());
    let estimate = n_states as f64 * t as f64 * combos.len() as f64;
    if estimate > 5e8 {
        return Err(SolveError::SearchSpaceTooLarge {
            estimate,
            cap: 5e8,
        });
    }
    let radix: Vec<usize> = lats.iter().map(Lattice::states).collect();
    // Offsets of each state from the initial state index.
    let initial_state: usize = {
        let mut idx = 0;
        for (lat, r) in lats.iter().zip(&radix) {
            idx = idx * r + (-lat.min_k) as usize;
        }
        idx
    };
    // Per-combo: (state index delta applicability, contribution, per-slot energy factor).
    let energy_factor = 0.25 / 1000.0;

    let mut value = vec![f64::INFINITY; n_states];
    value[initial_state] = 0.0;
    let mut choice = vec![u16::MAX; t * n_states];

    // Decode helper: state -> per-battery offsets.
    let decode = |state: usize| -> Vec<i64> {
        let mut s = state;
        let mut ks = vec![0i64; lats.len()];
        for i in (0..lats.len()).rev() {
            ks[i] = (s % radix[i]) as i64 + lats[i].min_k;
            s /= radix[i];
        }
        ks
    };
    // Precompute per-combo contribution and per-battery k deltas.
    let combo_info: Vec<(f64, Vec<i64>)> = combos
        .iter()
        .map(|combo| {
            let contrib: f64 = combo
                .iter()
                .zip(&lats)
                .map(|(a, lat)| contribution(lat, *a))
                .sum();
            let deltas: Vec<i64> = combo
                .iter()
                .map(|a| match a {
                    BatteryAction::Charge => 1,
                    BatteryAction::Hold => 0,
                    BatteryAction::Discharge => -1,
                })
                .collect();
            (contrib, deltas)
        })
        .collect();
    // Transition table: state x combo -> next state, usize::MAX = invalid.
    let transition: Vec<usize> = (0..n_states)
        .flat_map(|state| {
            let ks = decode(state);
            combo_info
                .iter()
                .map(|(_, deltas)| {
                    let mut next_state = 0usize;
                    for ((k, d), (lat, r)) in
                        ks.iter().zip(deltas).zip(lats.iter().zip(&radix))
                    {
                        let nk = k + d;
                        if nk < lat.min_k || nk > lat.max_k {
                            return usize::MAX;
                        }
                        next_state = next_state * r + (nk - lat.min_k) as usize;
                    }
                    next_state
                })
                .collect::<Vec<usize>>()
        })
        .collect();
    let n_combos = combo_info.len();

    let mut next = vec![f64::INFINITY; n_states];
    for slot in 0..t {
        next.iter_mut().for_each(|v| *v = f64::INFINITY);
        let price = instance.price_mwh[slot];
        let room = room_for_battery[slot];
        let mut any = false;
        for state in 0..n_states {
            let cur = value[state];
            if !cur.is_finite() {
                continue;
            }
            for (ci, (contrib, _)) in combo_info.iter().enumerate() {
                if *contrib > room + EPS {
                    continue;
                }
                let next_state = transition[state * n_combos + ci];
                if next_state == usize::MAX {
                    continue;
                }
                let cand = cur + energy_factor * price * contrib;
                if cand < next[next_state] {
                    next[next_state] = cand;
                    choice[slot * n_states + next_state] = ci as u16;
                    any = true;
                }
            }
        }
        if !any {
            return Err(SolveError::InfeasiblePeakCap {
                cap: cap_for_error,
                load: f64::INFINITY,
                slot,
            });
        }
        std::mem::swap(&mut value, &mut next);
    }

    // Terminal: cheapest state, lowest index on ties.
    let (mut best_state, mut best_value) = (0usize, f64::INFINITY);
    for (state, v) in value.iter().enumerate() {
        if *v < best_value {
            best_value = *v;
            best_state = state;
        }
    }
    if !best_value.is_finite() {
        return Err(SolveError::InfeasiblePeakCap {
            cap: cap_for_error,
            load: f64::INFINITY,
            slot: t.saturating_sub(1),
        });
    }

    // Backtrack.
    let mut plans: BTreeMap<BatteryId, Vec<BatteryAction>> = lats
        .iter()
        .map(|l| (l.id, vec![BatteryAction::Hold; t]))
        .collect();
    let mut state = best_state;
    for slot in (0..t).rev() {
        let ci = choice[slot * n_states + state] as usize;
        let combo = &combos[ci];
        // Step back: previous state = state - deltas.
        let mut prev = 0usize;
        let ks = decode(state);
        for ((k, d), (lat, r)) in ks
            .iter()
            .zip(&combo_info[ci].1)
            .zip(lats.iter().zip(&radix))
        {
            let pk = k - d;
            prev = prev * r + (pk - lat.min_k) as usize;
        }
        for (lat, action) in lats.iter().zip(combo) {
            plans.get_mut(&lat.id).unwrap()[slot] = *action;
        }
        state = prev;
    }
    Ok((best_value, plans))
}

/// Minimum-energy battery plan for the activity-induced load, subject to the
/// peak cap when given. Ties break toward holding.
pub fn optimize_battery(
    instance: &Instance,
    schedule: &Schedule,
    peak_cap: Option<f64>,
) -> Result<BTreeMap<BatteryId, Vec<BatteryAction>>, SolveError> {
    let induced = induced_load(instance, schedule);
    let room: Vec<f64> = match peak_cap {
        Some(cap) => induced.iter().map(|l| cap - l).collect(),
        None => vec![f64::INFINITY; induced.len()],
    };
    battery_dp(instance, &room, peak_cap.unwrap_or(f64::INFINITY)).map(|(_, plans)| plans)
}

/// Minimum total cost (energy plus demand charge) battery plan: runs the
/// energy DP over a sweep of peak caps drawn from the achievable net-load
/// lattice and keeps the best evaluator-scored plan. Exact whenever the
/// candidate cap count fits the sweep budget (always true on micro
/// fixtures).
pub fn optimize_battery_total(
    instance: &Instance,
    schedule: &Schedule,
    objective: &Objective,
    sweep_budget: usize,
) -> Result<BTreeMap<BatteryId, Vec<BatteryAction>>, SolveError> {
    objective.validate(instance)?;
    let t = instance.grid.total_slots();
    let activity_delta = {
        let mut bare = schedule.clone();
        bare.batteries = instance
            .batteries
            .iter()
            .map(|b| (b.id, vec![BatteryAction::Hold; t]))
            .collect();
        schedule_load_delta_in::<f64>(instance, &bare)
    };
    // Cap room must hold in every scenario: bound by the largest induced
    // load per slot.
    let bases = objective.base_loads(instance);
    let induced_max: Vec<f64> = (0..t)
        .map(|slot| {
            bases
                .iter()
                .map(|b| b[slot] + activity_delta[slot])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let lats = lattices(instance);
    let mut levels: Vec<f64> = vec![0.0];
    for lat in &lats {
        let mut next = Vec::with_capacity(levels.len() * 3);
        for l in &levels {
            next.push(*l);
            next.push(l + lat.draw_kw);
            next.push(l - lat.inject_kw);
        }
        levels = next;
    }
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();

    let evaluate = |cap: Option<f64>| -> Result<Option<(f64, BTreeMap<_, _>)>, SolveError> {
        let room: Vec<f64> = match cap {
            Some(c) => induced_max.iter().map(|l| c - l).collect(),
            None => vec![f64::INFINITY; t],
        };
        match battery_dp(instance, &room, cap.unwrap_or(f64::INFINITY)) {
            Ok((_, plans)) => {
                let mut candidate = schedule.clone();
                candidate.batteries = plans.clone();
                let total = objective.cost(instance, &candidate)?;
                Ok(Some((total, plans)))
            }
            Err(SolveError::InfeasiblePeakCap { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let (mut best_cost, mut best_plan) = evaluate(None)?.expect("uncapped DP is feasible");

    // Candidate caps: every achievable net-load value (induced plus a joint
    // contribution level), deduplicated; evenly subsampled when over budget.
    let mut caps: Vec<f64> = Vec::new();
    for slot in 0..t {
        for level in &levels {
            caps.push(induced_max[slot] + level);
        }
    }
    caps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    caps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let selected: Vec<f64> = if caps.len() <= sweep_budget || sweep_budget == 0 {
        caps
    } else {
        let stride = (caps.len() - 1) as f64 / (sweep_budget - 1) as f64;
        (0..sweep_budget)
            .map(|i| caps[(i as f64 * stride).round() as usize])
            .collect()
    };
    for cap in selected {
        if let Some((cost, plan)) = evaluate(Some(cap))? {
            if cost < best_cost - 1e-12 {
                best_cost = cost;
                best_plan = plan;
            }
        }
    }
    Ok(best_plan)
}
