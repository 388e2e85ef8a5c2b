//! Incremental search state: keeps room usage, load profile and battery
//! traces in sync with a schedule so moves can be costed without cloning or
//! re-checking the whole schedule. Every mutation keeps the schedule
//! feasible; candidate evaluation never mutates.

use std::collections::{BTreeMap, HashMap};

use crate::error::SolveError;
use crate::evaluator::{
    battery_soc_trace, check_feasibility, is_after_hours, schedule_load_delta_in,
};
use crate::mip::ActivityDomain;
use crate::model::{
    ActivityId, ActivityKind, BatteryAction, BatteryId, BuildingId, Instance, OnceOffPlacement,
    RecurringPlacement, Schedule,
};

use super::report::Objective;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Move {
    /// Move a recurring activity to a new week slot and/or building.
    RecurringShift {
        idx: usize,
        start: usize,
        building: BuildingId,
    },
    /// Schedule or relocate a once-off.
    OnceOffPlace {
        idx: usize,
        start: usize,
        building: BuildingId,
    },
    /// Remove a once-off from the schedule.
    OnceOffUnschedule { idx: usize },
    /// Change one battery action at one slot.
    BatteryFlip {
        b_idx: usize,
        slot: usize,
        action: BatteryAction,
    },
}

pub struct SearchState<'a> {
    pub instance: &'a Instance,
    pub domains: &'a [ActivityDomain],
    objective: &'a Objective,
    pub schedule: Schedule,
    pub peak_cap: Option<f64>,
    /// Per-building per-slot booked rooms, flattened `[building * t + slot]`.
    usage_small: Vec<u32>,
    usage_large: Vec<u32>,
    /// Activity plus battery load on top of the base (kW per slot).
    common_load: Vec<f64>,
    /// End-of-slot state of charge per battery (instance order).
    soc: Vec<Vec<f64>>,
    /// Suffix extrema of each soc trace, for O(1) flip bound checks.
    soc_suffix_min: Vec<Vec<f64>>,
    soc_suffix_max: Vec<Vec<f64>>,
    /// Once-off profit currently earned.
    profit: f64,
    cost: f64,
    position: HashMap<ActivityId, usize>,
    battery_position: HashMap<BatteryId, usize>,
    /// Reverse prerequisite edges (indices).
    dependents: Vec<Vec<usize>>,
}

impl<'a> SearchState<'a> {
    pub fn new(
        instance: &'a Instance,
        domains: &'a [ActivityDomain],
        objective: &'a Objective,
        schedule: Schedule,
        peak_cap: Option<f64>,
    ) -> Result<Self, SolveError> {
        objective.validate(instance)?;
        schedule.validate(instance)?;
        let violations = check_feasibility(instance, &schedule);
        if !violations.is_empty() {
            return Err(SolveError::InfeasibleInput(violations.len()));
        }
        let t = instance.grid.total_slots();
        let nb = instance.buildings.len();
        let position: HashMap<_, _> = instance
            .activities
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id, i))
            .collect();
        let battery_position: HashMap<_, _> = instance
            .batteries
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect();
        let mut dependents = vec![Vec::new(); instance.activities.len()];
        for (i, a) in instance.activities.iter().enumerate() {
            for p in &a.prerequisites {
                dependents[position[p]].push(i);
            }
        }
        let mut state = SearchState {
            instance,
            domains,
            objective,
            schedule,
            peak_cap,
            usage_small: vec![0; nb * t],
            usage_large: vec![0; nb * t],
            common_load: vec![0.0; t],
            soc: vec![Vec::new(); instance.batteries.len()],
            soc_suffix_min: vec![Vec::new(); instance.batteries.len()],
            soc_suffix_max: vec![Vec::new(); instance.batteries.len()],
            profit: 0.0,
            cost: 0.0,
            position,
            battery_position,
            dependents,
        };
        state.rebuild();
        Ok(state)
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Current peak over every scenario profile.
    pub fn peak(&self) -> f64 {
        let mut peak = f64::NEG_INFINITY;
        for base in self.objective.base_loads(self.instance) {
            for (slot, b) in base.iter().enumerate() {
                peak = peak.max(b + self.common_load[slot]);
            }
        }
        peak
    }

    /// Recomputes all derived data from the schedule.
    fn rebuild(&mut self) {
        let t = self.instance.grid.total_slots();
        let nb = self.instance.buildings.len();
        self.usage_small = vec![0; nb * t];
        self.usage_large = vec![0; nb * t];
        for (idx, activity) in self.instance.activities.iter().enumerate() {
            if let Some((start, building)) = self.placement(idx) {
                let bi = self.building_index(building);
                for slot in self.occupied_slots(idx, start) {
                    self.usage_small[bi * t + slot] += activity.small_rooms as u32;
                    self.usage_large[bi * t + slot] += activity.large_rooms as u32;
                }
            }
        }
        self.common_load = schedule_load_delta_in::<f64>(self.instance, &self.schedule);
        for (b_idx, battery) in self.instance.batteries.iter().enumerate() {
            let trace = battery_soc_trace(self.instance, &self.schedule, battery.id).unwrap();
            let (min_sfx, max_sfx) = suffix_extrema(&trace);
            self.soc[b_idx] = trace;
            self.soc_suffix_min[b_idx] = min_sfx;
            self.soc_suffix_max[b_idx] = max_sfx;
        }
        self.profit = self.compute_profit();
        self.cost = self.eval_overlay(&[], 0.0).0;
    }

    fn compute_profit(&self) -> f64 {
        let mut profit = 0.0;
        for activity in self.instance.onceoff_activities() {
            if let Some(p) = self.schedule.once_off.get(&activity.id) {
                profit += activity.value;
                if is_after_hours(self.instance, p.start, activity.duration) {
                    profit -= activity.penalty;
                }
            }
        }
        profit
    }

    fn building_index(&self, id: BuildingId) -> usize {
        self.instance
            .buildings
            .iter()
            .position(|b| b.id == id)
            .unwrap()
    }

    /// Current placement (start, building) of an activity: week-relative
    /// start for recurring, absolute for once-off.
    pub fn placement(&self, idx: usize) -> Option<(usize, BuildingId)> {
        let activity = &self.instance.activities[idx];
        match activity.kind {
            ActivityKind::Recurring => self
                .schedule
                .recurring
                .get(&activity.id)
                .map(|p| (p.start, p.building)),
            ActivityKind::OnceOff => self
                .schedule
                .once_off
                .get(&activity.id)
                .map(|p| (p.start, p.building)),
        }
    }

    /// Absolute slots occupied by placing activity `idx` at `start`.
    pub fn occupied_slots(&self, idx: usize, start: usize) -> Vec<usize> {
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

    /// Day index used for precedence: weekday inside the recurring week for
    /// recurring activities, absolute day for once-offs.
    fn day_of(&self, start: usize) -> usize {
        start / self.instance.grid.steps_per_day()
    }

    /// Precedence feasibility of giving activity `idx` the day `new_day`
    /// (scheduled): every scheduled prerequisite strictly earlier, every
    /// scheduled dependent strictly later, no unscheduled prerequisite.
    fn precedence_ok(&self, idx: usize, new_day: usize) -> bool {
        let activity = &self.instance.activities[idx];
        for p in &activity.prerequisites {
            let p_idx = self.position[p];
            match self.placement(p_idx) {
                Some((p_start, _)) => {
                    if self.day_of(p_start) >= new_day {
                        return false;
                    }
                }
                None => return false,
            }
        }
        for &d_idx in &self.dependents[idx] {
            if let Some((d_start, _)) = self.placement(d_idx) {
                if new_day >= self.day_of(d_start) {
                    return false;
                }
            }
        }
        true
    }

    /// Room feasibility of placing activity `idx` at `(start, building)`,
    /// ignoring its own current booking.
    fn rooms_ok(&self, idx: usize, start: usize, building: BuildingId) -> bool {
        let t = self.instance.grid.total_slots();
        let activity = &self.instance.activities[idx];
        let bi = self.building_index(building);
        let cap = &self.instance.buildings[bi];
        let current = self.placement(idx);
        for slot in self.occupied_slots(idx, start) {
            let mut small = self.usage_small[bi * t + slot];
            let mut large = self.usage_large[bi * t + slot];
            if let Some((cur_start, cur_building)) = current {
                if cur_building == building && self.occupies(idx, cur_start, slot) {
                    small -= activity.small_rooms as u32;
                    large -= activity.large_rooms as u32;
                }
            }
            if small + activity.small_rooms as u32 > cap.small_rooms as u32
                || large + activity.large_rooms as u32 > cap.large_rooms as u32
            {
                return false;
            }
        }
        true
    }

    /// Does activity `idx`, placed at `start`, occupy absolute slot `slot`?
    fn occupies(&self, idx: usize, start: usize, slot: usize) -> bool {
        let activity = &self.instance.activities[idx];
        match activity.kind {
            ActivityKind::OnceOff => slot >= start && slot < start + activity.duration,
            ActivityKind::Recurring => {
                let grid = &self.instance.grid;
                let offset = grid.first_monday_offset();
                if slot < offset {
                    return false;
                }
                let rel = (slot - offset) % grid.week_slots();
                if rel < start || rel >= start + activity.duration {
                    return false;
                }
                // The occurrence containing `slot` must itself fit the grid.
                let occ_start = slot - (rel - start);
                occ_start + activity.duration <= grid.total_slots()
            }
        }
    }

    /// Load overlay (slot deltas) of moving activity `idx` from its current
    /// placement to `start` (or unscheduling, `start == None`).
    fn activity_overlay(&self, idx: usize, new_start: Option<usize>) -> Vec<(usize, f64)> {
        let load = self.instance.activities[idx].load_kw();
        let mut overlay = Vec::new();
        if let Some((cur_start, _)) = self.placement(idx) {
            for slot in self.occupied_slots(idx, cur_start) {
                overlay.push((slot, -load));
            }
        }
        if let Some(start) = new_start {
            for slot in self.occupied_slots(idx, start) {
                overlay.push((slot, load));
            }
        }
        overlay
    }

    /// Objective value and maximum peak with slot deltas applied on top of
    /// the current profile. `profit_delta` adjusts the once-off profit term.
    fn eval_overlay(&self, overlay: &[(usize, f64)], profit_delta: f64) -> (f64, f64) {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (slot, delta) in overlay {
            *merged.entry(*slot).or_insert(0.0) += delta;
        }
        let energy_factor = 0.25 / 1000.0;
        let bases = self.objective.base_loads(self.instance);
        let mut per_scenario = Vec::with_capacity(bases.len());
        let mut max_peak = f64::NEG_INFINITY;
        for base in bases {
            let mut energy = 0.0;
            let mut peak = f64::NEG_INFINITY;
            let mut overlay_iter = merged.iter().peekable();
            for (slot, b) in base.iter().enumerate() {
                let mut v = b + self.common_load[slot];
                if let Some((&s, &d)) = overlay_iter.peek() {
                    if s == slot {
                        v += d;
                        overlay_iter.next();
                    }
                }
                energy += energy_factor * self.instance.price_mwh[slot] * v;
                peak = peak.max(v);
            }
            per_scenario.push(energy + 0.005 * peak * peak);
            max_peak = max_peak.max(peak);
        }
        let aggregated = match self.objective.mode() {
            None => per_scenario[0],
            Some(crate::evaluator::SaaMode::Average) => {
                per_scenario.iter().sum::<f64>() / per_scenario.len() as f64
            }
            Some(crate::evaluator::SaaMode::WorstCase) => {
                per_scenario.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
        };
        (aggregated - (self.profit + profit_delta), max_peak)
    }

    fn cap_ok(&self, peak: f64) -> bool {
        match self.peak_cap {
            Some(cap) => peak <= cap + EPS,
            None => true,
        }
    }

    /// New objective value if the move is feasible (rooms, precedence,
    /// battery bounds, peak cap); `None` when infeasible. Does not mutate.
    pub fn try_move(&self, mv: Move) -> Option<f64> {
        match mv {
            Move::RecurringShift {
                idx,
                start,
                building,
            } => {
                let day = self.day_of(start);
                if !self.precedence_ok(idx, day) || !self.rooms_ok(idx, start, building) {
                    return None;
                }
                let overlay = self.activity_overlay(idx, Some(start));
                let (cost, peak) = self.eval_overlay(&overlay, 0.0);
                self.cap_ok(peak).then_some(cost)
            }
            Move::OnceOffPlace {
                idx,
                start,
                building,
            } => {
                let day = self.day_of(start);
                if !self.precedence_ok(idx, day) || !self.rooms_ok(idx, start, building) {
                    return None;
                }
                let overlay = self.activity_overlay(idx, Some(start));
                let profit_delta = self.profit_delta(idx, Some(start));
                let (cost, peak) = self.eval_overlay(&overlay, profit_delta);
                self.cap_ok(peak).then_some(cost)
            }
            Move::OnceOffUnschedule { idx } => {
                self.placement(idx)?;
                // Scheduled dependents would lose their prerequisite.
                if self.dependents[idx]
                    .iter()
                    .any(|d| self.placement(*d).is_some())
                {
                    return None;
                }
                let overlay = self.activity_overlay(idx, None);
                let profit_delta = self.profit_delta(idx, None);
                let (cost, peak) = self.eval_overlay(&overlay, profit_delta);
                self.cap_ok(peak).then_some(cost)
            }
            Move::BatteryFlip { b_idx, slot, action } => {
                let battery = &self.instance.batteries[b_idx];
                let current = self.schedule.batteries[&battery.id][slot];
                if current == action {
                    return None;
                }
                let soc_delta = battery.soc_step_kwh() * (action.soc_sign() - current.soc_sign());
                if self.soc_suffix_min[b_idx][slot] + soc_delta < -EPS
                    || self.soc_suffix_max[b_idx][slot] + soc_delta
                        > battery.capacity_kwh + EPS
                {
                    return None;
                }
                let contrib = |a: BatteryAction| match a {
                    BatteryAction::Charge => battery.charge_draw_kw(),
                    BatteryAction::Hold => 0.0,
                    BatteryAction::Discharge => -battery.discharge_inject_kw(),
                };
                let overlay = [(slot, contrib(action) - contrib(current))];
                let (cost, peak) = self.eval_overlay(&overlay, 0.0);
                self.cap_ok(peak).then_some(cost)
            }
        }
    }

    fn profit_delta(&self, idx: usize, new_start: Option<usize>) -> f64 {
        let activity = &self.instance.activities[idx];
        let mut delta = 0.0;
        if let Some((cur_start, _)) = self.placement(idx) {
            delta -= activity.value;
            if is_after_hours(self.instance, cur_start, activity.duration) {
                delta += activity.penalty;
            }
        }
        if let Some(start) = new_start {
            delta += activity.value;
            if is_after_hours(self.instance, start, activity.duration) {
                delta -= activity.penalty;
            }
        }
        delta
    }

    /// Applies a move assumed feasible (checked by [`Self::try_move`]).
    pub fn apply_move(&mut self, mv: Move) {
        let t = self.instance.grid.total_slots();
        match mv {
            Move::RecurringShift {
                idx,
                start,
                building,
            }
            | Move::OnceOffPlace {
                idx,
                start,
                building,
            } => {
                let activity = &self.instance.activities[idx];
                if let Some((cur_start, cur_building)) = self.placement(idx) {
                    let bi = self.building_index(cur_building);
                    for slot in self.occupied_slots(idx, cur_start) {
                        self.usage_small[bi * t + slot] -= activity.small_rooms as u32;
                        self.usage_large[bi * t + slot] -= activity.large_rooms as u32;
                    }
                }
                let bi = self.building_index(building);
                for slot in self.occupied_slots(idx, start) {
                    self.usage_small[bi * t + slot] += activity.small_rooms as u32;
                    self.usage_large[bi * t + slot] += activity.large_rooms as u32;
                }
                match activity.kind {
                    ActivityKind::Recurring => {
                        self.schedule
                            .recurring
                            .insert(activity.id, RecurringPlacement { start, building });
                    }
                    ActivityKind::OnceOff => {
                        let after_hours = is_after_hours(self.instance, start, activity.duration);
                        self.schedule.once_off.insert(
                            activity.id,
                            OnceOffPlacement {
                                start,
                                building,
                                after_hours,
                            },
                        );
                    }
                }
            }
            Move::OnceOffUnschedule { idx } => {
                let activity = &self.instance.activities[idx];
                if let Some((cur_start, cur_building)) = self.placement(idx) {
                    let bi = self.building_index(cur_building);
                    for slot in self.occupied_slots(idx, cur_start) {
                        self.usage_small[bi * t + slot] -= activity.small_rooms as u32;
                        self.usage_large[bi * t + slot] -= activity.large_rooms as u32;
                    }
                }
                self.schedule.once_off.remove(&activity.id);
            }
            Move::BatteryFlip { b_idx, slot, action } => {
                let id = self.instance.batteries[b_idx].id;
                self.schedule.batteries.get_mut(&id).unwrap()[slot] = action;
            }
        }
        // Profiles and cost are refreshed from scratch so float drift cannot
        // accumulate across accepted moves.
        self.refresh();
    }

    /// Replaces entire battery plans (after a DP re-optimization).
    pub fn set_battery_plans(&mut self, plans: BTreeMap<BatteryId, Vec<BatteryAction>>) {
        for (id, plan) in plans {
            self.schedule.batteries.insert(id, plan);
        }
        self.refresh();
    }

    /// Replaces the whole schedule (used to roll back a rejected iteration).
    pub fn restore(&mut self, schedule: Schedule) {
        self.schedule = schedule;
        self.rebuild();
    }

    fn refresh(&mut self) {
        self.common_load = schedule_load_delta_in::<f64>(self.instance, &self.schedule);
        for (b_idx, battery) in self.instance.batteries.iter().enumerate() {
            let trace = battery_soc_trace(self.instance, &self.schedule, battery.id).unwrap();
            let (min_sfx, max_sfx) = suffix_extrema(&trace);
            self.soc[b_idx] = trace;
            self.soc_suffix_min[b_idx] = min_sfx;
            self.soc_suffix_max[b_idx] = max_sfx;
        }
        self.profit = self.compute_profit();
        self.cost = self.eval_overlay(&[], 0.0).0;
    }

    pub fn battery_count(&self) -> usize {
        self.instance.batteries.len()
    }

    pub fn battery_index(&self, id: BatteryId) -> usize {
        self.battery_position[&id]
    }

    pub fn activity_index(&self, id: ActivityId) -> usize {
        self.position[&id]
    }

    /// Buildings with enough rooms of each size for the activity, id order.
    pub fn fitting_buildings(&self, idx: usize) -> Vec<BuildingId> {
        let activity = &self.instance.activities[idx];
        self.instance
            .buildings
            .iter()
            .filter(|b| {
                b.small_rooms >= activity.small_rooms && b.large_rooms >= activity.large_rooms
            })
            .map(|b| b.id)
            .collect()
    }

    /// Placement options of one activity for subset optimization: every
    /// (start, building) pair, preceded by `None` for once-offs (so cost
    /// ties keep them unscheduled).
    pub fn subset_options(&self, idx: usize) -> Vec<Option<(usize, BuildingId)>> {
        let buildings = self.fitting_buildings(idx);
        let domain = &self.domains[idx];
        let mut options = Vec::new();
        if self.instance.activities[idx].kind == ActivityKind::OnceOff {
            options.push(None);
        }
        for &start in &domain.starts {
            for &b in &buildings {
                options.push(Some((start, b)));
            }
        }
        options
    }

    /// Size of the joint placement space of a subset.
    pub fn subset_space(&self, free: &[usize]) -> f64 {
        free.iter()
            .map(|idx| self.subset_options(*idx).len() as f64)
            .fold(1.0, |acc, n| (acc * n).min(f64::MAX))
    }

    /// Exhaustively enumerates the joint placements of the freed activities
    /// (battery plan fixed), applies the best found, and returns the number
    /// of leaves visited. Ties keep the first option in (start, building)
    /// order.
    pub fn enumerate_subset(&mut self, free: &[usize], leaf_budget: u64) -> u64 {
        // Topological order inside the subset so prerequisite days are
        // always known when a dependent is placed.
        let mut free_sorted = free.to_vec();
        free_sorted.sort_by_key(|idx| {
            (
                depth_in_prereq_graph(self.instance, &self.position, *idx),
                self.instance.activities[*idx].id,
            )
        });
        let options: Vec<Vec<Option<(usize, BuildingId)>>> = free_sorted
            .iter()
            .map(|idx| self.subset_options(*idx))
            .collect();

        let t = self.instance.grid.total_slots();
        let mut usage_small = self.usage_small.clone();
        let mut usage_large = self.usage_large.clone();
        let mut overlay: Vec<(usize, f64)> = Vec::new();
        let mut profit_delta = 0.0;
        for &idx in &free_sorted {
            let activity = &self.instance.activities[idx];
            if let Some((start, building)) = self.placement(idx) {
                let bi = self.building_index(building);
                for slot in self.occupied_slots(idx, start) {
                    usage_small[bi * t + slot] -= activity.small_rooms as u32;
                    usage_large[bi * t + slot] -= activity.large_rooms as u32;
                    overlay.push((slot, -activity.load_kw()));
                }
                if activity.kind == ActivityKind::OnceOff {
                    profit_delta -= activity.value;
                    if is_after_hours(self.instance, start, activity.duration) {
                        profit_delta += activity.penalty;
                    }
                }
            }
        }

        let mut search = SubsetSearch {
            state: self,
            free: &free_sorted,
            options: &options,
            usage_small,
            usage_large,
            chosen: vec![None; free_sorted.len()],
            best: None,
            best_cost: f64::INFINITY,
            leaves: 0,
            leaf_budget,
        };
        // The incumbent (current placements) is itself a leaf of this space,
        // so the search can only keep or improve it.
        search.recurse(0, &mut overlay, profit_delta);
        let best = search.best.take();
        let leaves = search.leaves;
        if let Some(choices) = best {
            let mut schedule = self.schedule.clone();
            for (&idx, choice) in free_sorted.iter().zip(&choices) {
                let activity = &self.instance.activities[idx];
                match activity.kind {
                    ActivityKind::Recurring => {
                        let (start, building) = choice.expect("recurring always placed");
                        schedule
                            .recurring
                            .insert(activity.id, RecurringPlacement { start, building });
                    }
                    ActivityKind::OnceOff => match choice {
                        Some((start, building)) => {
                            let after_hours =
                                is_after_hours(self.instance, *start, activity.duration);
                            schedule.once_off.insert(
                                activity.id,
                                OnceOffPlacement {
                                    start: *start,
                                    building: *building,
                                    after_hours,
                                },
                            );
                        }
                        None => {
                            schedule.once_off.remove(&activity.id);
                        }
                    },
                }
            }
            self.restore(schedule);
        }
        leaves
    }
}

fn depth_in_prereq_graph(
    instance: &Instance,
    position: &HashMap<ActivityId, usize>,
    idx: usize,
) -> usize {
    let mut depth = 0;
    let mut frontier = vec![idx];
    while !frontier.is_empty() && depth < instance.activities.len() {
        let mut next = Vec::new();
        for i in frontier {
            for p in &instance.activities[i].prerequisites {
                next.push(position[p]);
            }
        }
        if next.is_empty() {
            break;
        }
        depth += 1;
        frontier = next;
    }
    depth
}

struct SubsetSearch<'a, 'b> {
    state: &'b SearchState<'a>,
    free: &'b [usize],
    options: &'b [Vec<Option<(usize, BuildingId)>>],
    usage_small: Vec<u32>,
    usage_large: Vec<u32>,
    chosen: Vec<Option<(usize, BuildingId)>>,
    best: Option<Vec<Option<(usize, BuildingId)>>>,
    best_cost: f64,
    leaves: u64,
    leaf_budget: u64,
}

impl SubsetSearch<'_, '_> {
    fn day_of_choice(&self, idx: usize) -> Option<usize> {
        let steps = self.state.instance.grid.steps_per_day();
        if let Some(pos) = self.free.iter().position(|f| *f == idx) {
            self.chosen[pos].map(|(start, _)| start / steps)
        } else {
            self.state.placement(idx).map(|(start, _)| start / steps)
        }
    }

    fn precedence_ok(&self, idx: usize, day: usize) -> bool {
        let activity = &self.state.instance.activities[idx];
        for p in &activity.prerequisites {
            let p_idx = self.state.position[p];
            match self.day_of_choice(p_idx) {
                Some(p_day) => {
                    if p_day >= day {
                        return false;
                    }
                }
                None => return false,
            }
        }
        // Fixed scheduled dependents keep their day; freed dependents are
        // checked when they are placed (subset is in topological order).
        for &d_idx in &self.state.dependents[idx] {
            if self.free.contains(&d_idx) {
                continue;
            }
            if let Some((d_start, _)) = self.state.placement(d_idx) {
                if day >= d_start / self.state.instance.grid.steps_per_day() {
                    return false;
                }
            }
        }
        true
    }

    fn unschedule_ok(&self, idx: usize) -> bool {
        // Fixed scheduled dependents forbid unscheduling.
        !self.state.dependents[idx].iter().any(|d| {
            !self.free.contains(d) && self.state.placement(*d).is_some()
        })
    }

    fn recurse(&mut self, depth: usize, overlay: &mut Vec<(usize, f64)>, profit_delta: f64) {
        if self.leaves >= self.leaf_budget {
            return;
        }
        if depth == self.free.len() {
            self.leaves += 1;
            let (cost, peak) = self.state.eval_overlay(overlay, profit_delta);
            if !self.state.cap_ok(peak) {
                return;
            }
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best = Some(self.chosen.clone());
            }
            return;
        }
        let idx = self.free[depth];
        let activity = &self.state.instance.activities[idx];
        let t = self.state.instance.grid.total_slots();
        // Options were materialized up front; clone the row to appease the
        // borrow checker (rows are small).
        let row = self.options[depth].clone();
        for option in row {
            match option {
                None => {
                    if !self.unschedule_ok(idx) {
                        continue;
                    }
                    self.chosen[depth] = None;
                    self.recurse(depth + 1, overlay, profit_delta);
                }
                Some((start, building)) => {
                    let day = start / self.state.instance.grid.steps_per_day();
                    if !self.precedence_ok(idx, day) {
                        continue;
                    }
                    let bi = self.state.building_index(building);
                    let cap = &self.state.instance.buildings[bi];
                    let slots = self.state.occupied_slots(idx, start);
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
                        overlay.push((slot, activity.load_kw()));
                    }
                    let mut pd = profit_delta;
                    if activity.kind == ActivityKind::OnceOff {
                        pd += activity.value;
                        if is_after_hours(self.state.instance, start, activity.duration) {
                            pd -= activity.penalty;
                        }
                    }
                    self.chosen[depth] = Some((start, building));
                    self.recurse(depth + 1, overlay, pd);
                    for &slot in &slots {
                        self.usage_small[bi * t + slot] -= activity.small_rooms as u32;
                        self.usage_large[bi * t + slot] -= activity.large_rooms as u32;
                        overlay.pop();
                    }
                }
            }
            if self.leaves >= self.leaf_budget {
                break;
            }
        }
        self.chosen[depth] = None;
    }
}

fn suffix_extrema(trace: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = trace.len();
    let mut min_sfx = vec![f64::INFINITY; n];
    let mut max_sfx = vec![f64::NEG_INFINITY; n];
    let mut running_min = f64::INFINITY;
    let mut running_max = f64::NEG_INFINITY;
    for i in (0..n).rev() {
        running_min = running_min.min(trace[i]);
        running_max = running_max.max(trace[i]);
        min_sfx[i] = running_min;
        max_sfx[i] = running_max;
    }
    (min_sfx, max_sfx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::objective_cost;
    use crate::generator::{default_grid, generate_instance, synthetic_series, GeneratorParams, InstanceSize};
    use crate::mip::activity_domains;

    #[test]
    fn incremental_cost_matches_the_evaluator() {
        let grid = default_grid();
        let series = synthetic_series(21, &grid, 4);
        let params = GeneratorParams::new(InstanceSize::Small, 21);
        let (instance, tentative) = generate_instance(&params, &series, &grid).unwrap();
        let domains = activity_domains(&instance);
        let objective = Objective::Deterministic;
        let mut state =
            SearchState::new(&instance, &domains, &objective, tentative, None).unwrap();
        assert!(
            (state.cost() - objective_cost(&instance, &state.schedule).total).abs() < 1e-9
        );

        // Try a handful of feasible moves and verify incremental costs.
        let mut applied = 0;
        for idx in 0..instance.activities.len() {
            if applied >= 5 {
                break;
            }
            if instance.activities[idx].kind != ActivityKind::Recurring {
                continue;
            }
            let current = state.placement(idx).unwrap();
            for &start in &domains[idx].starts {
                if start == current.0 {
                    continue;
                }
                let mv = Move::RecurringShift {
                    idx,
                    start,
                    building: current.1,
                };
                if let Some(predicted) = state.try_move(mv) {
                    state.apply_move(mv);
                    let actual = objective_cost(&instance, &state.schedule).total;
                    assert!(
                        (predicted - actual).abs() < 1e-6,
                        "predicted {predicted} vs actual {actual}"
                    );
                    assert!(check_feasibility(&instance, &state.schedule).is_empty());
                    applied += 1;
                    break;
                }
            }
        }
        assert!(applied >= 3, "expected some feasible shifts");
    }

    #[test]
    fn battery_flip_respects_soc_bounds() {
        let grid = default_grid();
        let series = synthetic_series(22, &grid, 3);
        let params = GeneratorParams::new(InstanceSize::Small, 22);
        let (instance, tentative) = generate_instance(&params, &series, &grid).unwrap();
        let domains = activity_domains(&instance);
        let objective = Objective::Deterministic;
        let state =
            SearchState::new(&instance, &domains, &objective, tentative, None).unwrap();
        // Initial charge is zero: an immediate discharge is infeasible, a
        // charge is feasible.
        assert!(state
            .try_move(Move::BatteryFlip {
                b_idx: 0,
                slot: 0,
                action: BatteryAction::Discharge,
            })
            .is_none());
        assert!(state
            .try_move(Move::BatteryFlip {
                b_idx: 0,
                slot: 0,
                action: BatteryAction::Charge,
            })
            .is_some());
    }
}
