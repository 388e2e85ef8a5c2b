//! Competition-style instance generation: sample and tentatively schedule
//! activities, assign precedences already satisfied by the tentative
//! schedule, then derive room limits from the recurring demand.
//!
//! Determinism contract: one ChaCha stream per call, drawn in this order —
//! solar assignment per building, then per activity (in id order) duration,
//! room count, room sizes, power, value multiplier and penalty fraction
//! (once-off only), tentative weekday, tentative start, tentative building,
//! then precedence draws in id order.

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::GeneratorError;
use crate::forecast::{SeriesRole, SeriesSet};
use crate::model::{
    occurrence_slots, Activity, ActivityId, ActivityKind, Battery, BatteryId, Building,
    BuildingId, Instance, OnceOffPlacement, RecurringPlacement, Schedule, TimeGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSize {
    Small,
    Large,
}

impl InstanceSize {
    /// (recurring, once-off) activity counts.
    pub fn counts(self) -> (usize, usize) {
        match self {
            InstanceSize::Small => (50, 20),
            InstanceSize::Large => (200, 100),
        }
    }
}

/// Battery parameters used for generated instances. The competition hardware
/// is not public; these defaults are invented stand-ins at a similar scale
/// and can be overridden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub capacity_kwh: f64,
    pub initial_kwh: f64,
    pub max_power_kw: f64,
    pub efficiency: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        BatterySpec {
            capacity_kwh: 300.0,
            initial_kwh: 0.0,
            max_power_kw: 150.0,
            efficiency: 0.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub size: InstanceSize,
    pub seed: u64,
    /// Activity duration in slots, inclusive bounds.
    pub duration_range: (usize, usize),
    /// Rooms per activity, inclusive bounds.
    pub rooms_range: (usize, usize),
    /// Probability that a required room is small.
    pub small_room_prob: f64,
    /// Per-room power as a fraction of the maximum net base load.
    pub power_fraction: (f64, f64),
    /// Once-off value as a multiple of the occurrence's average energy cost.
    pub value_multiplier: (f64, f64),
    /// Once-off penalty as a fraction of its value (invented default).
    pub penalty_fraction: (f64, f64),
    /// Binomial success probability for recurring precedence draws.
    pub p_recurring: f64,
    /// Binomial success probability for once-off precedence draws.
    pub p_onceoff: f64,
    /// Binomial trial count is `min(candidates, max_binomial_trials)`.
    pub max_binomial_trials: usize,
    pub batteries: Vec<BatterySpec>,
}

impl GeneratorParams {
    pub fn new(size: InstanceSize, seed: u64) -> Self {
        GeneratorParams {
            size,
            seed,
            duration_range: (2, 10),
            rooms_range: (1, 3),
            small_room_prob: 0.75,
            power_fraction: (1.0 / 20.0, 1.0 / 10.0),
            value_multiplier: (0.9, 1.5),
            penalty_fraction: (0.2, 0.5),
            p_recurring: 0.25,
            p_onceoff: 0.1,
            max_binomial_trials: 4,
            batteries: vec![BatterySpec::default(); 2],
        }
    }
}

/// Tentative placement used while generating: a weekday and start inside the
/// first-Monday week.
#[derive(Debug, Clone, Copy)]
pub struct TentativeActivity {
    pub id: ActivityId,
    pub kind: ActivityKind,
    /// Day index inside the tentative week (0 = Monday).
    pub day: usize,
}

/// Samples prerequisite lists already satisfied by the tentative days: each
/// activity draws Binomial(min(candidates, max_trials), p) prerequisites
/// without replacement from same-kind activities on strictly earlier days.
/// Monday activities therefore end up with none, and the graph is acyclic by
/// construction.
pub fn sample_precedences(
    tentative: &[TentativeActivity],
    params: &GeneratorParams,
    rng: &mut impl Rng,
) -> Vec<Vec<ActivityId>> {
    let mut result = Vec::with_capacity(tentative.len());
    for act in tentative {
        let p = match act.kind {
            ActivityKind::Recurring => params.p_recurring,
            ActivityKind::OnceOff => params.p_onceoff,
        };
        let mut candidates: Vec<ActivityId> = tentative
            .iter()
            .filter(|other| other.kind == act.kind && other.day < act.day)
            .map(|other| other.id)
            .collect();
        candidates.sort();
        let trials = candidates.len().min(params.max_binomial_trials);
        let mut count = 0;
        for _ in 0..trials {
            if rng.gen_bool(p) {
                count += 1;
            }
        }
        let (chosen, _) = candidates.partial_shuffle(rng, count);
        let mut prereqs = chosen.to_vec();
        prereqs.sort();
        result.push(prereqs);
    }
    result
}

/// Per-size room totals demanded by the recurring part of a schedule: the
/// maximum over slots of simultaneous rooms, not the sum.
pub fn derive_room_limits(
    grid: &TimeGrid,
    activities: &[Activity],
    schedule: &Schedule,
) -> (usize, usize) {
    let t = grid.total_slots();
    let mut small = vec![0usize; t];
    let mut large = vec![0usize; t];
    for activity in activities {
        if activity.kind != ActivityKind::Recurring {
            continue;
        }
        if let Ok(occurrences) = occurrence_slots(grid, activity, schedule) {
            for occ in occurrences {
                for slot in occ.slots() {
                    if slot < t {
                        small[slot] += activity.small_rooms;
                        large[slot] += activity.large_rooms;
                    }
                }
            }
        }
    }
    (
        small.iter().copied().max().unwrap_or(0),
        large.iter().copied().max().unwrap_or(0),
    )
}

struct SeriesInput {
    building_names: Vec<String>,
    solar_names: Vec<String>,
    price: Vec<f64>,
    net_base: Vec<f64>,
    building_loads: Vec<Vec<f64>>,
    solar_values: Vec<Vec<f64>>,
}

fn collect_series(series: &SeriesSet, t: usize) -> Result<SeriesInput, GeneratorError> {
    let mut building_names = Vec::new();
    let mut building_loads = Vec::new();
    for s in series.with_role(SeriesRole::BuildingLoad) {
        building_names.push(s.name.clone());
        building_loads.push(complete_prefix(s, t)?);
    }
    let mut solar_names = Vec::new();
    let mut solar_values = Vec::new();
    for s in series.with_role(SeriesRole::Solar) {
        solar_names.push(s.name.clone());
        solar_values.push(complete_prefix(s, t)?);
    }
    let price = series
        .with_role(SeriesRole::Price)
        .next()
        .ok_or(GeneratorError::MissingSeries("price"))
        .and_then(|s| complete_prefix(s, t))?;
    if building_names.is_empty() {
        return Err(GeneratorError::MissingSeries("building load"));
    }
    if solar_names.is_empty() {
        return Err(GeneratorError::MissingSeries("solar"));
    }
    Ok(SeriesInput {
        building_names,
        solar_names,
        price,
        net_base: Vec::new(),
        building_loads,
        solar_values,
    })
}

fn complete_prefix(
    series: &crate::forecast::Series,
    t: usize,
) -> Result<Vec<f64>, GeneratorError> {
    if series.values.len() < t {
        return Err(GeneratorError::SeriesTooShort {
            name: series.name.clone(),
            len: series.values.len(),
            expected: t,
        });
    }
    series.values[..t]
        .iter()
        .map(|v| {
            v.ok_or_else(|| GeneratorError::SeriesHasMissing {
                name: series.name.clone(),
            })
        })
        .collect()
}

/// Generates an instance plus the feasible-by-construction tentative
/// schedule (which doubles as a warm-start sample solution). Once-offs that
/// do not fit the derived room capacities are left unscheduled in the
/// tentative schedule; solvers may still place them elsewhere.
pub fn generate_instance(
    params: &GeneratorParams,
    series: &SeriesSet,
    grid: &TimeGrid,
) -> Result<(Instance, Schedule), GeneratorError> {
    let t = grid.total_slots();
    let office_span = grid.office_end() - grid.office_start();
    if office_span < params.duration_range.1 {
        return Err(GeneratorError::GridTooSmall);
    }
    let mut input = collect_series(series, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Assign one solar series to each building (a shuffled round-robin, so
    // series repeat only when buildings outnumber them).
    let n_buildings = input.building_names.len();
    let mut solar_order: Vec<usize> = (0..input.solar_names.len()).collect();
    solar_order.shuffle(&mut rng);
    let solar_assignment: Vec<usize> = (0..n_buildings)
        .map(|b| solar_order[b % solar_order.len()])
        .collect();

    input.net_base = (0..t)
        .map(|slot| {
            let load: f64 = input.building_loads.iter().map(|s| s[slot]).sum();
            let solar: f64 = solar_assignment
                .iter()
                .map(|si| input.solar_values[*si][slot])
                .sum();
            load - solar
        })
        .collect();
    let max_base = input
        .net_base
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let avg_price = input.price.iter().sum::<f64>() / t as f64;

    // Stage 1: sample activities and a tentatively valid schedule.
    let (n_recurring, n_onceoff) = params.size.counts();
    let mut activities = Vec::with_capacity(n_recurring + n_onceoff);
    let mut tentative_meta = Vec::with_capacity(n_recurring + n_onceoff);
    let mut tentative_starts = Vec::with_capacity(n_recurring + n_onceoff);
    let mut tentative_buildings = Vec::with_capacity(n_recurring + n_onceoff);
    for idx in 0..n_recurring + n_onceoff {
        let kind = if idx < n_recurring {
            ActivityKind::Recurring
        } else {
            ActivityKind::OnceOff
        };
        let duration = rng.gen_range(params.duration_range.0..=params.duration_range.1);
        let rooms = rng.gen_range(params.rooms_range.0..=params.rooms_range.1);
        let mut small_rooms = 0;
        let mut large_rooms = 0;
        for _ in 0..rooms {
            if rng.gen_bool(params.small_room_prob) {
                small_rooms += 1;
            } else {
                large_rooms += 1;
            }
        }
        let power_per_room =
            rng.gen_range(params.power_fraction.0..params.power_fraction.1) * max_base;
        let mut activity = Activity {
            id: ActivityId(idx),
            kind,
            duration,
            small_rooms,
            large_rooms,
            power_per_room,
            value: 0.0,
            penalty: 0.0,
            prerequisites: Vec::new(),
        };
        if kind == ActivityKind::OnceOff {
            let mult = rng.gen_range(params.value_multiplier.0..params.value_multiplier.1);
            activity.value = mult * avg_price * activity.occurrence_energy_mwh();
            let frac = rng.gen_range(params.penalty_fraction.0..params.penalty_fraction.1);
            activity.penalty = frac * activity.value;
        }
        let day = rng.gen_range(0..5usize);
        let start_in_day =
            rng.gen_range(grid.office_start()..=grid.office_end() - duration);
        let building = rng.gen_range(0..n_buildings);
        tentative_meta.push(TentativeActivity {
            id: activity.id,
            kind,
            day,
        });
        tentative_starts.push(day * grid.steps_per_day() + start_in_day);
        tentative_buildings.push(building);
        activities.push(activity);
    }

    // Stage 2: precedences, already satisfied by the tentative days.
    let prereqs = sample_precedences(&tentative_meta, params, &mut rng);
    for (activity, list) in activities.iter_mut().zip(prereqs) {
        activity.prerequisites = list;
    }

    // Stage 3: room limits from the tentative recurring demand, per building
    // so the tentative assignment itself stays feasible.
    let week = grid.week_slots();
    let mut building_small = vec![vec![0usize; week]; n_buildings];
    let mut building_large = vec![vec![0usize; week]; n_buildings];
    for (idx, activity) in activities.iter().enumerate() {
        if activity.kind != ActivityKind::Recurring {
            continue;
        }
        let b = tentative_buildings[idx];
        for s in tentative_starts[idx]..tentative_starts[idx] + activity.duration {
            building_small[b][s] += activity.small_rooms;
            building_large[b][s] += activity.large_rooms;
        }
    }
    let buildings: Vec<Building> = (0..n_buildings)
        .map(|b| Building {
            id: BuildingId(b),
            small_rooms: building_small[b].iter().copied().max().unwrap_or(0),
            large_rooms: building_large[b].iter().copied().max().unwrap_or(0),
            base_load_series_id: input.building_names[b].clone(),
            solar_series_id: input.solar_names[solar_assignment[b]].clone(),
        })
        .collect();

    let batteries: Vec<Battery> = params
        .batteries
        .iter()
        .enumerate()
        .map(|(i, spec)| Battery {
            id: BatteryId(i),
            capacity_kwh: spec.capacity_kwh,
            initial_kwh: spec.initial_kwh,
            max_power_kw: spec.max_power_kw,
            efficiency: spec.efficiency,
        })
        .collect();

    let instance = Instance {
        grid: grid.clone(),
        buildings,
        activities,
        batteries,
        price_mwh: input.price,
        net_base_load_kw: input.net_base,
    };
    instance.validate()?;

    // Assemble the tentative schedule: all recurring placements, then
    // once-offs kept only where they fit in gaps (room capacity and kept
    // prerequisites).
    let mut tentative = Schedule::all_hold(&instance);
    for (idx, activity) in instance.activities.iter().enumerate() {
        if activity.kind == ActivityKind::Recurring {
            tentative.recurring.insert(
                activity.id,
                RecurringPlacement {
                    start: tentative_starts[idx],
                    building: BuildingId(tentative_buildings[idx]),
                },
            );
        }
    }
    // Full-horizon per-building usage from the recurring part.
    let mut usage_small = vec![vec![0usize; t]; n_buildings];
    let mut usage_large = vec![vec![0usize; t]; n_buildings];
    for (idx, activity) in instance.activities.iter().enumerate() {
        if activity.kind != ActivityKind::Recurring {
            continue;
        }
        let b = tentative_buildings[idx];
        for start in grid.recurring_occurrence_starts(tentative_starts[idx], activity.duration) {
            for slot in start..start + activity.duration {
                usage_small[b][slot] += activity.small_rooms;
                usage_large[b][slot] += activity.large_rooms;
            }
        }
    }
    let mut onceoff_order: Vec<usize> = (0..instance.activities.len())
        .filter(|i| instance.activities[*i].kind == ActivityKind::OnceOff)
        .collect();
    onceoff_order.sort_by_key(|i| (tentative_meta[*i].day, *i));
    let mut kept: BTreeMap<ActivityId, OnceOffPlacement> = BTreeMap::new();
    for idx in onceoff_order {
        let activity = &instance.activities[idx];
        if !activity
            .prerequisites
            .iter()
            .all(|p| kept.contains_key(p))
        {
            continue;
        }
        let b = tentative_buildings[idx];
        let abs_start = grid.first_monday_offset() + tentative_starts[idx];
        let slots = abs_start..abs_start + activity.duration;
        let fits = slots.clone().all(|s| {
            usage_small[b][s] + activity.small_rooms <= instance.buildings[b].small_rooms
                && usage_large[b][s] + activity.large_rooms <= instance.buildings[b].large_rooms
        });
        if !fits {
            continue;
        }
        for s in slots {
            usage_small[b][s] += activity.small_rooms;
            usage_large[b][s] += activity.large_rooms;
        }
        kept.insert(
            activity.id,
            OnceOffPlacement {
                start: abs_start,
                building: BuildingId(b),
                after_hours: false,
            },
        );
    }
    tentative.once_off = kept;

    Ok((instance, tentative))
}

/// Deterministic synthetic month of building load, solar and price series,
/// used when no real data files are supplied.
pub fn synthetic_series(seed: u64, grid: &TimeGrid, n_buildings: usize) -> SeriesSet {
    use crate::forecast::Series;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e51e5);
    let t = grid.total_slots();
    let steps = grid.steps_per_day() as f64;
    let start = grid.start_date().and_hms_opt(0, 0, 0).unwrap();
    let mut set = SeriesSet::default();
    for b in 0..n_buildings {
        let base = rng.gen_range(80.0..400.0);
        let mut values = Vec::with_capacity(t);
        for slot in 0..t {
            let day = slot / grid.steps_per_day();
            let frac = (slot % grid.steps_per_day()) as f64 / steps;
            let office = if grid.is_weekday(day) && (0.35..0.75).contains(&frac) {
                0.5
            } else {
                0.0
            };
            let daily = 0.15 * (std::f64::consts::TAU * frac).sin();
            let noise = rng.gen_range(-0.05..0.05);
            values.push(Some(base * (0.6 + office + daily.abs() + noise)));
        }
        set.series.push(Series {
            name: format!("Building{b}"),
            start,
            values,
            role: SeriesRole::BuildingLoad,
        });
    }
    for s in 0..n_buildings {
        let amplitude = rng.gen_range(20.0..60.0);
        let mut values = Vec::with_capacity(t);
        for slot in 0..t {
            let frac = (slot % grid.steps_per_day()) as f64 / steps;
            let sun = ((frac - 0.25) * std::f64::consts::PI / 0.5).sin();
            let output = if (0.25..0.75).contains(&frac) {
                amplitude * sun.max(0.0).powi(2) * rng.gen_range(0.7..1.0)
            } else {
                0.0
            };
            values.push(Some(output));
        }
        set.series.push(Series {
            name: format!("Solar{s}"),
            start,
            values,
            role: SeriesRole::Solar,
        });
    }
    let mut price = Vec::with_capacity(t);
    for slot in 0..t {
        let frac = (slot % grid.steps_per_day()) as f64 / steps;
        let evening = if (0.7..0.9).contains(&frac) { 25.0 } else { 0.0 };
        let daily = 12.0 * (std::f64::consts::TAU * (frac - 0.3)).sin();
        let spike = if rng.gen_bool(0.01) {
            rng.gen_range(100.0..300.0)
        } else {
            0.0
        };
        price.push(Some(35.0 + daily + evening + spike + rng.gen_range(-3.0..3.0)));
    }
    set.series.push(Series {
        name: "Price".into(),
        start,
        values: price,
        role: SeriesRole::Price,
    });
    set
}

/// Standard October-2020 style grid used by the CLI when none is given.
pub fn default_grid() -> TimeGrid {
    TimeGrid::new(NaiveDate::from_ymd_opt(2020, 10, 1).unwrap(), 31).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::check_feasibility;

    fn small_setup(seed: u64) -> (GeneratorParams, SeriesSet, TimeGrid) {
        let grid = default_grid();
        let series = synthetic_series(seed, &grid, 6);
        (GeneratorParams::new(InstanceSize::Small, seed), series, grid)
    }

    #[test]
    fn small_instance_counts() {
        let (params, series, grid) = small_setup(7);
        let (instance, _) = generate_instance(&params, &series, &grid).unwrap();
        assert_eq!(instance.recurring_activities().count(), 50);
        assert_eq!(instance.onceoff_activities().count(), 20);
    }

    #[test]
    fn large_instance_counts() {
        let grid = default_grid();
        let series = synthetic_series(3, &grid, 6);
        let params = GeneratorParams::new(InstanceSize::Large, 3);
        let (instance, _) = generate_instance(&params, &series, &grid).unwrap();
        assert_eq!(instance.recurring_activities().count(), 200);
        assert_eq!(instance.onceoff_activities().count(), 100);
    }

    #[test]
    fn sampled_parameters_stay_in_range() {
        let (params, series, grid) = small_setup(11);
        let (instance, _) = generate_instance(&params, &series, &grid).unwrap();
        let max_base = instance
            .net_base_load_kw
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let avg_price = instance.price_mwh.iter().sum::<f64>() / instance.price_mwh.len() as f64;
        for a in &instance.activities {
            assert!((2..=10).contains(&a.duration));
            assert!((1..=3).contains(&a.total_rooms()));
            assert!(a.power_per_room >= max_base / 20.0 && a.power_per_room <= max_base / 10.0);
            if a.kind == ActivityKind::OnceOff {
                let energy_cost = avg_price * a.occurrence_energy_mwh();
                assert!(a.value >= 0.9 * energy_cost && a.value <= 1.5 * energy_cost);
                assert!(a.penalty >= 0.2 * a.value && a.penalty <= 0.5 * a.value);
            }
        }
    }

    #[test]
    fn tentative_schedule_is_feasible() {
        for seed in [0, 1, 2, 3, 4] {
            let (params, series, grid) = small_setup(seed);
            let (instance, tentative) = generate_instance(&params, &series, &grid).unwrap();
            tentative.validate(&instance).unwrap();
            let violations = check_feasibility(&instance, &tentative);
            assert!(violations.is_empty(), "seed {seed}: {violations:?}");
        }
    }

    #[test]
    fn monday_activities_have_no_prerequisites() {
        let (params, series, grid) = small_setup(5);
        let (instance, tentative) = generate_instance(&params, &series, &grid).unwrap();
        for a in instance.recurring_activities() {
            let p = tentative.recurring[&a.id];
            if p.start / grid.steps_per_day() == 0 {
                assert!(a.prerequisites.is_empty());
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_instance() {
        let (params, series, grid) = small_setup(42);
        let a = generate_instance(&params, &series, &grid).unwrap();
        let b = generate_instance(&params, &series, &grid).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn room_limit_derivation_takes_the_max() {
        let grid = default_grid();
        let mk = |id: usize, small: usize| Activity {
            id: ActivityId(id),
            kind: ActivityKind::Recurring,
            duration: 2,
            small_rooms: small,
            large_rooms: 0,
            power_per_room: 1.0,
            value: 0.0,
            penalty: 0.0,
            prerequisites: vec![],
        };
        let acts = vec![mk(0, 3), mk(1, 1)];
        let mut sched = Schedule::default();
        sched.recurring.insert(
            ActivityId(0),
            RecurringPlacement {
                start: 36,
                building: BuildingId(0),
            },
        );
        // Disjoint in time from activity 0.
        sched.recurring.insert(
            ActivityId(1),
            RecurringPlacement {
                start: 50,
                building: BuildingId(0),
            },
        );
        assert_eq!(derive_room_limits(&grid, &acts, &sched), (3, 0));

        // A single activity needing 2 small rooms.
        let acts2 = vec![mk(0, 2)];
        let mut sched2 = Schedule::default();
        sched2.recurring.insert(
            ActivityId(0),
            RecurringPlacement {
                start: 36,
                building: BuildingId(0),
            },
        );
        assert_eq!(derive_room_limits(&grid, &acts2, &sched2), (2, 0));

        // No recurring activities at all.
        assert_eq!(
            derive_room_limits(&grid, &[], &Schedule::default()),
            (0, 0)
        );
    }

    #[test]
    fn precedence_graph_is_acyclic_and_sorted() {
        let (params, series, grid) = small_setup(9);
        let (instance, _) = generate_instance(&params, &series, &grid).unwrap();
        instance.validate().unwrap();
        for a in &instance.activities {
            let mut sorted = a.prerequisites.clone();
            sorted.sort();
            assert_eq!(sorted, a.prerequisites);
        }
    }
}
