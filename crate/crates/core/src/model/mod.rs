//! Problem data model: time grid, activities, batteries, buildings,
//! instances and schedules. Everything here is immutable after construction
//! and safe to share across threads.

pub mod grid;
pub mod instance;
pub mod schedule;

pub use grid::{TimeGrid, SLOT_HOURS, STANDARD_OFFICE_END, STANDARD_OFFICE_START, STANDARD_STEPS_PER_DAY};
pub use instance::{
    Activity, ActivityId, ActivityKind, Battery, BatteryId, Building, BuildingId, Instance,
};
pub use schedule::{
    occurrence_slots, BatteryAction, Occurrence, OnceOffPlacement, RecurringPlacement, Schedule,
};
