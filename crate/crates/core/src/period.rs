//! Day-local period binning.

use chrono::{DateTime, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MINUTES_PER_DAY: u32 = 24 * 60;

/// Partition of the local day into periods, numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodScheme {
    /// Start of each period in minutes after local midnight.
    boundaries: Vec<u32>,
    /// Offset of local time from UTC, in minutes.
    utc_offset_min: i32,
}

impl Default for PeriodScheme {
    /// Twelve two-hour periods in UTC+8.
    fn default() -> Self {
        Self::equal(12, 480).expect("12 divides the day")
    }
}

impl PeriodScheme {
    pub fn new(boundaries: Vec<u32>, utc_offset_min: i32) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::Config("period scheme needs at least one period".into()));
        }
        if boundaries[0] != 0 {
            return Err(Error::Config("first period must start at local midnight".into()));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("period boundaries must be strictly increasing".into()));
        }
        if *boundaries.last().unwrap() >= MINUTES_PER_DAY {
            return Err(Error::Config("period boundaries must lie within the day".into()));
        }
        if utc_offset_min.abs() > 14 * 60 {
            return Err(Error::Config(format!("utc offset {utc_offset_min} min out of range")));
        }
        Ok(Self { boundaries, utc_offset_min })
    }

    /// `count` equal periods starting at local midnight.
    pub fn equal(count: u32, utc_offset_min: i32) -> Result<Self> {
        if count == 0 || !MINUTES_PER_DAY.is_multiple_of(count) {
            return Err(Error::Config(format!("{count} equal periods do not divide the day")));
        }
        let width = MINUTES_PER_DAY / count;
        Self::new((0..count).map(|i| i * width).collect(), utc_offset_min)
    }

    pub fn periods_per_day(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[u32] {
        &self.boundaries
    }

    pub fn utc_offset_min(&self) -> i32 {
        self.utc_offset_min
    }

    /// Local date and 1-based period of an epoch timestamp.
    pub fn locate(&self, epoch_s: i64) -> (NaiveDate, usize) {
        let local = epoch_s + i64::from(self.utc_offset_min) * 60;
        let day = local.div_euclid(86_400);
        let minute = (local.rem_euclid(86_400) / 60) as u32;
        let period = self.boundaries.partition_point(|&b| b <= minute);
        (epoch_day_to_date(day), period)
    }

    /// Local date of an epoch timestamp.
    pub fn local_date(&self, epoch_s: i64) -> NaiveDate {
        self.locate(epoch_s).0
    }

    /// Epoch-second interval `[start, end)` covered by `period` on `date`.
    pub fn period_bounds(&self, date: NaiveDate, period: usize) -> (i64, i64) {
        assert!(period >= 1 && period <= self.periods_per_day(), "period {period} out of range");
        let midnight = date_to_epoch_day(date) * 86_400 - i64::from(self.utc_offset_min) * 60;
        let start = midnight + i64::from(self.boundaries[period - 1]) * 60;
        let end_min = self.boundaries.get(period).copied().unwrap_or(MINUTES_PER_DAY);
        (start, midnight + i64::from(end_min) * 60)
    }

    /// Epoch-second interval `[start, end)` covering the whole local `date`.
    pub fn day_bounds(&self, date: NaiveDate) -> (i64, i64) {
        let midnight = date_to_epoch_day(date) * 86_400 - i64::from(self.utc_offset_min) * 60;
        (midnight, midnight + 86_400)
    }
}

fn epoch_day_to_date(day: i64) -> NaiveDate {
    DateTime::UNIX_EPOCH.date_naive() + Duration::days(day)
}

fn date_to_epoch_day(date: NaiveDate) -> i64 {
    (date - DateTime::UNIX_EPOCH.date_naive()).num_days()
}

/// Inclusive range of calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::Argument(format!("date range end {end} precedes start {start}")));
        }
        Ok(Self { start, end })
    }

    pub fn single(date: NaiveDate) -> Self {
        Self { start: date, end: date }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let end = self.end;
        self.start.iter_days().take_while(move |d| *d <= end)
    }

    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
