//! Exact solver for micro instances: depth-first enumeration over activity
//! placements, once-off include/exclude and per-slot battery actions, with
//! incumbent pruning from an exact battery value-to-go bound plus the
//! committed-peak demand charge.

use std::collections::HashMap;
use std::time::Instant;

use crate::error::SolveError;
use crate::evaluator::is_after_hours;
use crate::mip::activity_domains;
use crate::model::{
    ActivityKind, BatteryAction, BuildingId, Instance, OnceOffPlacement, RecurringPlacement,
    Schedule,
};

use super::battery::{contribution, joint_actions, lattices, Lattice};
use super::construct::topological_order;
use super::report::{Objective, SolveReport, TerminationReason};

/// Default refusal threshold on the search-space estimate.
pub const DEFAULT_LEAF_CAP: f64 = 1e7;

/// Pruning slack so near-ties are never cut by float dust.
const PRUNE_MARGIN: f64 = 1e-9;

/// Provably optimal schedule (under the aggregate-room model the MILP also
/// uses, but with per-building room feasibility enforced directly), or a
/// refusal when the search-space estimate exceeds `leaf_cap`.
pub fn solve_exact(
    instance: &Instance,
    objective: &Objective,
    leaf_cap: f64,
) -> Result<SolveReport, SolveError> {
    let started = Instant::now();
    objective.validate(instance)?;
    let domains = activity_domains(instance);
    let order = topological_order(instance)?;
    let grid = &instance.grid;
    let t = grid.total_slots();

    // Placement options in search order; `None` (unscheduled) first for
    // once-offs so that cost ties keep them out of the schedule.
    let mut options: Vec<Vec<Option<(usize, BuildingId)>>> = Vec::with_capacity(order.len());
    for &idx in &order {
        let activity = &instance.activities[idx];
        let mut opts = Vec::new();
        if activity.kind == ActivityKind::OnceOff {
            opts.push(None);
        }
        for &start in &domains[idx].starts {
            for building in &instance.buildings {
                if building.small_rooms >= activity.small_rooms
                    && building.large_rooms >= activity.large_rooms
                {
                    opts.push(Some((start, building.id)));
                }
            }
        }
        if activity.kind == ActivityKind::Recurring && opts.is_empty() {
            return Err(SolveError::NoFeasiblePlacement {
                id: activity.id.0,
            });
        }
        options.push(opts);
    }

    let lats = lattices(instance);
    let combos = joint_actions(lats.len());
    let mut estimate = combos.len() as f64;
    estimate = estimate.powi(t as i32);
    for opts in &options {
        estimate *= opts.len().max(1) as f64;
    }
    if !(estimate <= leaf_cap) {
        return Err(SolveError::SearchSpaceTooLarge {
            estimate,
            cap: leaf_cap,
        });
    }

    let bases = objective.base_loads(instance);
    let mode = objective.mode();
    let energy_factor = 0.25 / 1000.0;

    // Battery machinery shared across activity leaves.
    let n_states: usize = lats.iter().map(Lattice::states).product::<usize>().max(1);
    let radix: Vec<usize> = lats.iter().map(Lattice::states).collect();
    let decode = |state: usize| -> Vec<i64> {
        let mut s = state;
        let mut ks = vec![0i64; lats.len()];
        for i in (0..lats.len()).rev() {
            ks[i] = (s % radix[i]) as i64 + lats[i].min_k;
            s /= radix[i];
        }
        ks
    };
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
    let transition: Vec<usize> = (0..n_states)
        .flat_map(|state| {
            let ks = decode(state);
            combo_info
                .iter()
                .map(|(_, deltas)| {
                    let mut next_state = 0usize;
                    for ((k, d), (lat, r)) in ks.iter().zip(deltas).zip(lats.iter().zip(&radix)) {
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
    let initial_state: usize = {
        let mut idx = 0;
        for (lat, r) in lats.iter().zip(&radix) {
            idx = idx * r + (-lat.min_k) as usize;
        }
        idx
    };
    // Exact value-to-go of the battery energy term (uncapped), scenario
    // independent because prices are shared.
    let n_combos = combo_info.len().max(1);
    let mut vlb = vec![0.0f64; (t + 1) * n_states];
    for slot in (0..t).rev() {
        let price = instance.price_mwh[slot];
        for state in 0..n_states {
            let mut best = f64::INFINITY;
            for (ci, (contrib, _)) in combo_info.iter().enumerate() {
                let ns = transition[state * n_combos + ci];
                if ns == usize::MAX {
                    continue;
                }
                let v = energy_factor * price * contrib + vlb[(slot + 1) * n_states + ns];
                if v < best {
                    best = v;
                }
            }
            vlb[slot * n_states + state] = best;
        }
    }
    let total_inject: f64 = lats.iter().map(|l| l.inject_kw).sum();

    let mut search = ExactSearch {
        instance,
        order: &order,
        options: &options,
        bases: &bases,
        mode,
        usage_small: vec![0u32; instance.buildings.len() * t],
        usage_large: vec![0u32; instance.buildings.len() * t],
        chosen: vec![None; order.len()],
        position: instance
            .activities
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id, i))
            .collect(),
        chosen_by_activity: vec![None; instance.activities.len()],
        profit: 0.0,
        incumbent: f64::INFINITY,
        best: None,
        lats: &lats,
        combos: &combos,
        combo_info: &combo_info,
        transition: &transition,
        n_states,
        initial_state,
        vlb: &vlb,
        total_inject,
        energy_factor,
    };
    search.place(0);

    let Some((placements, plans, _)) = search.best else {
        return Err(SolveError::NoFeasiblePlacement {
            id: instance
                .activities
                .first()
                .map(|a| a.id.0)
                .unwrap_or(0),
        });
    };
    let mut schedule = Schedule::all_hold(instance);
    for (&idx, placement) in order.iter().zip(&placements) {
        let activity = &instance.activities[idx];
        if let Some((start, building)) = placement {
            match activity.kind {
                ActivityKind::Recurring => {
                    schedule.recurring.insert(
                        activity.id,
                        RecurringPlacement {
                            start: *start,
                            building: *building,
                        },
                    );
                }
                ActivityKind::OnceOff => {
                    schedule.once_off.insert(
                        activity.id,
                        OnceOffPlacement {
                            start: *start,
                            building: *building,
                            after_hours: is_after_hours(instance, *start, activity.duration),
                        },
                    );
                }
            }
        }
    }
    for (lat, plan) in lats.iter().zip(plans) {
        schedule.batteries.insert(lat.id, plan);
    }
    let objective_value = objective.cost(instance, &schedule)?;
    Ok(SolveReport {
        schedule,
        objective: objective_value,
        trace: vec![objective_value],
        wall_time: started.elapsed(),
        termination: TerminationReason::Completed,
    })
}

type Placement = Option<(usize, BuildingId)>;

struct ExactSearch<'a> {
    instance: &'a Instance,
    order: &'a [usize],
    options: &'a [Vec<Placement>],
    bases: &'a [&'a [f64]],
    mode: Option<crate::evaluator::SaaMode>,
    usage_small: Vec<u32>,
    usage_large: Vec<u32>,
    chosen: Vec<Placement>,
    position: HashMap<crate::model::ActivityId, usize>,
    chosen_by_activity: Vec<Option<Placement>>,
    profit: f64,
    incumbent: f64,
    best: Option<(Vec<Placement>, Vec<Vec<BatteryAction>>, f64)>,
    lats: &'a [Lattice],
    combos: &'a [Vec<BatteryAction>],
    combo_info: &'a [(f64, Vec<i64>)],
    transition: &'a [usize],
    n_states: usize,
    initial_state: usize,
    vlb: &'a [f64],
    total_inject: f64,
    energy_factor: f64,
}

impl ExactSearch<'_> {
    fn occupied_slots(&self, idx: usize, start: usize) -> Vec<usize> {
        let activity = &self.instance.activities[idx];
        match activity.kind {
            ActivityKind::Recurring => self
                .instance
                .grid
                .recurring_occurrence_starts(start, activity.duration)
                .into_iter()
                .flat_map(|s| s..s + activity.duration)
                .collect(),
            ActivityKind::OnceOff => (start..start + activity.duration).collect(),
        }
    }

    fn precedence_ok(&self, idx: usize, placement: Placement) -> bool {
        let steps = self.instance.grid.steps_per_day();
        let activity = &self.instance.activities[idx];
        match placement {
            None => true,
            Some((start, _)) => {
                let day = start / steps;
                for p in &activity.prerequisites {
                    let p_idx = self.position[p];
                    match self.chosen_by_activity[p_idx] {
                        Some(Some((p_start, _))) => {
                            if p_start / steps >= day {
                                return false;
                            }
                        }
                        // Unscheduled prerequisite blocks the successor.
                        Some(None) => return false,
                        None => unreachable!("topological order places prerequisites first"),
                    }
                }
                true
            }
        }
    }

    fn place(&mut self, depth: usize) {
        if depth == self.order.len() {
            self.battery_phase();
            return;
        }
        let idx = self.order[depth];
        let activity = &self.instance.activities[idx];
        let t = self.instance.grid.total_slots();
        for oi in 0..self.options[depth].len() {
            let placement = self.options[depth][oi];
            if !self.precedence_ok(idx, placement) {
                continue;
            }
            let mut profit_delta = 0.0;
            if let Some((start, building)) = placement {
                let bi = self
                    .instance
                    .buildings
                    .iter()
                    .position(|b| b.id == building)
                    .unwrap();
                let cap = &self.instance.buildings[bi];
                let slots = self.occupied_slots(idx, start);
                let fits = slots.iter().all(|&slot| {
                    self.usage_small[bi * t + slot] + activity.small_rooms as u32
                        <= cap.small_rooms as u32
                        && self.usage_large[bi * t + slot] + activity.large_rooms as u32
                            <= cap.large_rooms as u32
                });
                if !fits {
                    continue;
                }
                for &slot in &slots {
                    self.usage_small[bi * t + slot] += activity.small_rooms as u32;
                    self.usage_large[bi * t + slot] += activity.large_rooms as u32;
                }
                if activity.kind == ActivityKind::OnceOff {
                    profit_delta += activity.value;
                    if is_after_hours(self.instance, start, activity.duration) {
                        profit_delta -= activity.penalty;
                    }
                }
            }
            self.chosen[depth] = placement;
            self.chosen_by_activity[idx] = Some(placement);
            let saved_profit = self.profit;
            self.profit += profit_delta;
            self.place(depth + 1);
            self.profit = saved_profit;
            self.chosen_by_activity[idx] = None;
            if let Some((start, building)) = placement {
                let bi = self
                    .instance
                    .buildings
                    .iter()
                    .position(|b| b.id == building)
                    .unwrap();
                for slot in self.occupied_slots(idx, start) {
                    self.usage_small[bi * t + slot] -= activity.small_rooms as u32;
                    self.usage_large[bi * t + slot] -= activity.large_rooms as u32;
                }
            }
        }
        self.chosen[depth] = None;
    }

    /// Aggregates per-scenario values by the objective mode.
    fn aggregate(&self, values: &[f64]) -> f64 {
        match self.mode {
            None => values[0],
            Some(crate::evaluator::SaaMode::Average) => {
                values.iter().sum::<f64>() / values.len() as f64
            }
            Some(crate::evaluator::SaaMode::WorstCase) => {
                values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    fn battery_phase(&mut self) {
        let t = self.instance.grid.total_slots();
        let k = self.bases.len();
        // Induced load (base + chosen activities) per scenario, plus energy
        // prefix/suffix sums and future peak floors.
        let mut activity_load = vec![0.0f64; t];
        for (pos, &idx) in self.order.iter().enumerate() {
            if let Some((start, _)) = self.chosen[pos] {
                let load = self.instance.activities[idx].load_kw();
                for slot in self.occupied_slots(idx, start) {
                    activity_load[slot] += load;
                }
            }
        }
        let mut induced = vec![vec![0.0f64; t]; k];
        let mut suffix_energy = vec![vec![0.0f64; t + 1]; k];
        let mut peak_floor = vec![vec![f64::NEG_INFINITY; t + 1]; k];
        for s in 0..k {
            for slot in 0..t {
                induced[s][slot] = self.bases[s][slot] + activity_load[slot];
            }
            for slot in (0..t).rev() {
                suffix_energy[s][slot] = suffix_energy[s][slot + 1]
                    + self.energy_factor * self.instance.price_mwh[slot] * induced[s][slot];
                peak_floor[s][slot] =
                    peak_floor[s][slot + 1].max(induced[s][slot] - self.total_inject);
            }
        }
        let start_state = self.initial_state;
        let mut dfs = BatteryDfs {
            parent: self,
            t,
            induced: &induced,
            suffix_energy: &suffix_energy,
            peak_floor: &peak_floor,
            actions: vec![0u16; t],
            prefix_energy: vec![0.0; k],
            prefix_peak: vec![f64::NEG_INFINITY; k],
            scratch: vec![0.0; k],
        };
        dfs.run(0, start_state, 0.0);
    }
}

struct BatteryDfs<'a, 'b> {
    parent: &'b mut ExactSearch<'a>,
    t: usize,
    induced: &'b [Vec<f64>],
    suffix_energy: &'b [Vec<f64>],
    peak_floor: &'b [Vec<f64>],
    /// Combo index per slot along the current path.
    actions: Vec<u16>,
    prefix_energy: Vec<f64>,
    prefix_peak: Vec<f64>,
    scratch: Vec<f64>,
}

impl BatteryDfs<'_, '_> {
    fn run(&mut self, slot: usize, state: usize, battery_energy: f64) {
        let k = self.induced.len();
        if slot == self.t {
            for s in 0..k {
                let peak = self.prefix_peak[s];
                self.scratch[s] =
                    self.prefix_energy[s] + battery_energy + 0.005 * peak * peak;
            }
            let total = self.parent.aggregate(&self.scratch) - self.parent.profit;
            if total < self.parent.incumbent {
                self.parent.incumbent = total;
                let plans: Vec<Vec<BatteryAction>> = (0..self.parent.lats.len())
                    .map(|b| {
                        self.actions
                            .iter()
                            .map(|ci| self.parent.combos[*ci as usize][b])
                            .collect()
                    })
                    .collect();
                self.parent.best =
                    Some((self.parent.chosen.clone(), plans, total));
            }
            return;
        }
        // Lower bound with the battery value-to-go and the committed peak.
        for s in 0..k {
            let floor = self.prefix_peak[s].max(self.peak_floor[s][slot]);
            let demand_lb = 0.005 * floor.max(0.0) * floor.max(0.0);
            self.scratch[s] = self.prefix_energy[s]
                + self.suffix_energy[s][slot]
                + battery_energy
                + self.parent.vlb[slot * self.parent.n_states + state]
                + demand_lb;
        }
        let bound = self.parent.aggregate(&self.scratch) - self.parent.profit;
        if bound >= self.parent.incumbent + PRUNE_MARGIN {
            return;
        }
        let price = self.parent.instance.price_mwh[slot];
        let n_combos = self.parent.combo_info.len();
        // Induced energy at this slot is combo-independent: advance the
        // prefix once and restore the saved values afterwards (float adds
        // are not exactly reversible).
        let saved_peaks: Vec<f64> = self.prefix_peak.clone();
        let saved_energy: Vec<f64> = self.prefix_energy.clone();
        for s in 0..k {
            self.prefix_energy[s] += self.parent.energy_factor * price * self.induced[s][slot];
        }
        for ci in 0..n_combos {
            let next_state = self.parent.transition[state * n_combos + ci];
            if next_state == usize::MAX {
                continue;
            }
            let contrib = self.parent.combo_info[ci].0;
            for s in 0..k {
                let level = self.induced[s][slot] + contrib;
                self.prefix_peak[s] = saved_peaks[s].max(level);
            }
            self.actions[slot] = ci as u16;
            self.run(
                slot + 1,
                next_state,
                battery_energy + self.parent.energy_factor * price * contrib,
            );
        }
        self.prefix_peak.copy_from_slice(&saved_peaks);
        self.prefix_energy.copy_from_slice(&saved_energy);
    }
}
