//! UTC instants at one-second resolution and the calendar fields derived from them.

use chrono::{DateTime, Datelike, NaiveDate, Timelike};
use core::fmt;
use core::ops::{Add, Sub};
use serde::{Deserialize, Serialize};

pub const HOUR: i64 = 3600;
pub const DAY: i64 = 24 * HOUR;

/// Seconds since the Unix epoch, UTC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

/// Calendar fields used as model features. Weekday is Monday = 0 … Sunday = 6.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Calendar {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    pub weekday: u8,
    pub hour: u8,
}

impl Timestamp {
    pub const fn from_secs(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub const fn secs(self) -> i64 {
        self.0
    }

    /// Midnight UTC of the given civil date, or `None` if the date is invalid.
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Self> {
        Self::from_ymd_hms(year, month, day, 0, 0, 0)
    }

    pub fn from_ymd_hms(year: i32, month: u32, day: u32, h: u32, m: u32, s: u32) -> Option<Self> {
        let dt = NaiveDate::from_ymd_opt(year, month, day)?.and_hms_opt(h, m, s)?;
        Some(Timestamp(dt.and_utc().timestamp()))
    }

    fn datetime(self) -> DateTime<chrono::Utc> {
        DateTime::from_timestamp(self.0, 0).expect("timestamp within chrono range")
    }

    pub fn calendar(self) -> Calendar {
        let dt = self.datetime();
        Calendar {
            year: dt.year(),
            month: dt.month() as u8,
            day: dt.day() as u8,
            weekday: dt.weekday().num_days_from_monday() as u8,
            hour: dt.hour() as u8,
        }
    }

    /// Days since the Unix epoch of this instant's UTC calendar date.
    pub fn day_number(self) -> i64 {
        self.0.div_euclid(DAY)
    }

    /// Midnight of this instant's calendar date.
    pub fn date_start(self) -> Timestamp {
        Timestamp(self.day_number() * DAY)
    }

    pub fn date(self) -> NaiveDate {
        self.datetime().date_naive()
    }

    pub fn from_date(date: NaiveDate) -> Self {
        Timestamp(date.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp())
    }
}

impl Add<i64> for Timestamp {
    type Output = Timestamp;
    fn add(self, secs: i64) -> Timestamp {
        Timestamp(self.0 + secs)
    }
}

impl Sub<i64> for Timestamp {
    type Output = Timestamp;
    fn sub(self, secs: i64) -> Timestamp {
        Timestamp(self.0 - secs)
    }
}

impl Sub for Timestamp {
    type Output = i64;
    fn sub(self, other: Timestamp) -> i64 {
        self.0 - other.0
    }
}

/// ISO-8601 with a `Z` suffix, e.g. `2014-01-01T05:00:00Z`.
impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.datetime().format("%Y-%m-%dT%H:%M:%SZ"))
    }
}
