//! Time grid: 15-minute slots over a scheduling month, with office-hours
//! windows and the first-Monday week that anchors recurring activities.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Slots per day on the standard grid (15-minute resolution).
pub const STANDARD_STEPS_PER_DAY: usize = 96;
/// Slot index of 09:00 on the standard grid.
pub const STANDARD_OFFICE_START: usize = 36;
/// Slot index of 17:00 on the standard grid (exclusive end of the window).
pub const STANDARD_OFFICE_END: usize = 68;
/// Hours of energy per kW of constant power held over one slot.
pub const SLOT_HOURS: f64 = 0.25;

/// Calendar layout of the scheduling horizon.
///
/// Micro grids for tests may use fewer slots per day via [`TimeGrid::custom`];
/// the slot energy factor stays [`SLOT_HOURS`] regardless, so a micro grid is
/// a compressed month, not a rescaled one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    start_date: NaiveDate,
    num_days: usize,
    steps_per_day: usize,
    office_start: usize,
    office_end: usize,
    first_monday_offset: usize,
    weekdays: Vec<bool>,
}

impl TimeGrid {
    /// Standard grid: 96 slots/day, office hours 09:00-17:00.
    ///
    /// `num_days` must be at least 7 so the recurring week fits.
    pub fn new(start_date: NaiveDate, num_days: usize) -> Result<Self, ModelError> {
        if num_days < 7 {
            return Err(ModelError::GridTooShort { num_days });
        }
        Self::custom(
            start_date,
            num_days,
            STANDARD_STEPS_PER_DAY,
            STANDARD_OFFICE_START,
            STANDARD_OFFICE_END,
        )
    }

    /// Arbitrary-resolution grid, for micro fixtures.
    pub fn custom(
        start_date: NaiveDate,
        num_days: usize,
        steps_per_day: usize,
        office_start: usize,
        office_end: usize,
    ) -> Result<Self, ModelError> {
        if num_days == 0 || steps_per_day == 0 {
            return Err(ModelError::EmptyGrid);
        }
        if office_start >= office_end || office_end > steps_per_day {
            return Err(ModelError::BadOfficeWindow {
                start: office_start,
                end: office_end,
            });
        }
        let weekdays: Vec<bool> = (0..num_days)
            .map(|d| {
                let date = start_date + Duration::days(d as i64);
                !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
            })
            .collect();
        let monday_day = (0..num_days.min(7))
            .find(|&d| (start_date + Duration::days(d as i64)).weekday() == Weekday::Mon)
            .ok_or(ModelError::NoMonday)?;
        Ok(TimeGrid {
            start_date,
            num_days,
            steps_per_day,
            office_start,
            office_end,
            first_monday_offset: monday_day * steps_per_day,
            weekdays,
        })
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn num_days(&self) -> usize {
        self.num_days
    }

    pub fn steps_per_day(&self) -> usize {
        self.steps_per_day
    }

    /// Total slot count `T`.
    pub fn total_slots(&self) -> usize {
        self.num_days * self.steps_per_day
    }

    /// Slots in one week (672 on the standard grid).
    pub fn week_slots(&self) -> usize {
        7 * self.steps_per_day
    }

    /// Slot index of 00:00 of the first Monday.
    pub fn first_monday_offset(&self) -> usize {
        self.first_monday_offset
    }

    pub fn office_start(&self) -> usize {
        self.office_start
    }

    pub fn office_end(&self) -> usize {
        self.office_end
    }

    pub fn day_of(&self, slot: usize) -> usize {
        slot / self.steps_per_day
    }

    pub fn slot_in_day(&self, slot: usize) -> usize {
        slot % self.steps_per_day
    }

    /// Is calendar day `day` (0-based from the grid start) a weekday?
    pub fn is_weekday(&self, day: usize) -> bool {
        self.weekdays.get(day).copied().unwrap_or(false)
    }

    /// Does an absolute slot lie inside a weekday office window?
    pub fn is_office_slot(&self, slot: usize) -> bool {
        let sid = self.slot_in_day(slot);
        self.is_weekday(self.day_of(slot)) && sid >= self.office_start && sid < self.office_end
    }

    /// Day-of-week (0 = Monday .. 6 = Sunday) of a slot relative to the
    /// recurring week.
    pub fn weekday_of_week_slot(&self, week_slot: usize) -> usize {
        (week_slot / self.steps_per_day) % 7
    }

    /// Maps an absolute slot to its position in the first-Monday week.
    ///
    /// Slots before the first Monday have no recurring occurrence and map to
    /// `None`.
    pub fn map_to_first_week(&self, slot: usize) -> Result<Option<usize>, ModelError> {
        if slot >= self.total_slots() {
            return Err(ModelError::SlotOutOfRange {
                slot,
                total: self.total_slots(),
            });
        }
        if slot < self.first_monday_offset {
            return Ok(None);
        }
        Ok(Some((slot - self.first_monday_offset) % self.week_slots()))
    }

    /// Absolute start slots of the weekly occurrences of a recurring activity
    /// whose first-week start is `week_slot`, keeping only occurrences whose
    /// whole duration fits inside the grid.
    pub fn recurring_occurrence_starts(&self, week_slot: usize, duration: usize) -> Vec<usize> {
        let mut starts = Vec::new();
        let mut s = self.first_monday_offset + week_slot;
        while s + duration <= self.total_slots() {
            starts.push(s);
            s += self.week_slots();
        }
        starts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn october() -> TimeGrid {
        TimeGrid::new(NaiveDate::from_ymd_opt(2020, 10, 1).unwrap(), 31).unwrap()
    }

    #[test]
    fn october_2020_has_2976_slots() {
        assert_eq!(october().total_slots(), 2976);
    }

    #[test]
    fn november_2020_has_2880_slots() {
        let g = TimeGrid::new(NaiveDate::from_ymd_opt(2020, 11, 1).unwrap(), 30).unwrap();
        assert_eq!(g.total_slots(), 2880);
    }

    #[test]
    fn october_2020_first_monday_is_the_5th() {
        // Oct 1 2020 is a Thursday, so the first Monday is day 4.
        assert_eq!(october().first_monday_offset(), 384);
    }

    #[test]
    fn first_week_mapping() {
        let g = october();
        assert_eq!(g.map_to_first_week(384).unwrap(), Some(0));
        assert_eq!(g.map_to_first_week(384 + 672).unwrap(), Some(0));
        assert_eq!(g.map_to_first_week(100).unwrap(), None);
        assert!(g.map_to_first_week(2976).is_err());
    }

    #[test]
    fn mapping_is_weekly_periodic() {
        let g = october();
        for t in g.first_monday_offset()..g.total_slots() - g.week_slots() {
            assert_eq!(
                g.map_to_first_week(t).unwrap(),
                g.map_to_first_week(t + 672).unwrap()
            );
        }
    }

    #[test]
    fn occurrences_fit_four_weeks_in_october() {
        let g = october();
        let starts = g.recurring_occurrence_starts(0, 2);
        assert_eq!(starts, vec![384, 1056, 1728, 2400]);
    }

    #[test]
    fn office_window_spans_32_slots() {
        let g = october();
        assert_eq!(g.office_end() - g.office_start(), 32);
        // Oct 5 (day 4) is a Monday.
        assert!(g.is_office_slot(4 * 96 + 36));
        assert!(!g.is_office_slot(4 * 96 + 35));
        assert!(!g.is_office_slot(4 * 96 + 68));
        // Oct 3 (day 2) is a Saturday.
        assert!(!g.is_office_slot(2 * 96 + 40));
    }

    #[test]
    fn short_grid_is_rejected() {
        let err = TimeGrid::new(NaiveDate::from_ymd_opt(2020, 10, 1).unwrap(), 6).unwrap_err();
        assert!(matches!(err, ModelError::GridTooShort { .. }));
    }

    #[test]
    fn weekday_flags_follow_the_calendar() {
        let g = october();
        assert!(g.is_weekday(0)); // Thu Oct 1
        assert!(g.is_weekday(1)); // Fri
        assert!(!g.is_weekday(2)); // Sat
        assert!(!g.is_weekday(3)); // Sun
        assert!(g.is_weekday(4)); // Mon
    }
}
