//! Failure series: per-version event lists and their two analysis views —
//! grouped per-period counts (for distribution fitting) and normalized
//! event times on (0, 1] (for SRGM fitting).
//!
//! All types are immutable values after construction and all operations
//! are pure.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::FailureEvent;

/// Width of a grouping bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Day,
    Week,
    Month,
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(match self {
            TimeUnit::Day => "day",
            TimeUnit::Week => "week",
            TimeUnit::Month => "month",
        })
    }
}

impl std::str::FromStr for TimeUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "day" => Ok(TimeUnit::Day),
            "week" => Ok(TimeUnit::Week),
            "month" => Ok(TimeUnit::Month),
            other => Err(format!("unknown time unit {other:?} (expected day, week, or month)")),
        }
    }
}

/// Errors raised by series construction and transformation.
#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series has no events")]
    EmptySeries,
    #[error("all events are simultaneous; times cannot be normalized")]
    DegenerateSeries,
    #[error("series mixes app ids {expected:?} and {found:?}")]
    MixedAppIds { expected: String, found: String },
    #[error("series mixes major versions {expected} and {found}")]
    MixedMajorVersions { expected: u32, found: u32 },
    #[error("invalid count: {0}")]
    InvalidCount(String),
    #[error("invalid time value: {0}")]
    InvalidTime(String),
    #[error("bin {index} has non-integral count {count}; only integral counts can be written as CSV")]
    NonIntegralCount { index: usize, count: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An ordered failure-event list for one app and major version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureSeries {
    pub app_id: String,
    /// Major version shared by the events, or `None` for events whose
    /// version is unknown.
    pub major_version: Option<u32>,
    /// Events sorted non-decreasing by timestamp.
    pub events: Vec<FailureEvent>,
    /// Timestamp of the first event; the origin for grouping and
    /// normalization.
    pub origin: DateTime<FixedOffset>,
}

impl FailureSeries {
    /// Builds a series from events of a single app, sorting them by
    /// timestamp. Events with known versions must agree on the major
    /// number; unknown-version events are accepted alongside.
    pub fn new(mut events: Vec<FailureEvent>) -> Result<Self, SeriesError> {
        if events.is_empty() {
            return Err(SeriesError::EmptySeries);
        }
        let app_id = events[0].app_id.clone();
        let mut major: Option<u32> = None;
        for event in &events {
            if event.app_id != app_id {
                return Err(SeriesError::MixedAppIds { expected: app_id, found: event.app_id.clone() });
            }
            if let Some(m) = event.major_version() {
                match major {
                    None => major = Some(m),
                    Some(existing) if existing != m => {
                        return Err(SeriesError::MixedMajorVersions { expected: existing, found: m })
                    }
                    Some(_) => {}
                }
            }
        }
        events.sort_by_key(|e| e.timestamp);
        let origin = events[0].timestamp;
        Ok(Self { app_id, major_version: major, events, origin })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Failure counts per equal-width calendar bin.
///
/// Bin indices are 1-based and contiguous (`1..=len`), with empty bins
/// explicit. Counts from events or CSV files are whole numbers; the
/// synthetic generator may produce fractional expected counts, which is
/// why the storage is `f64`. `unit` is `None` for pre-binned data whose
/// period width is not recorded (CSV input, synthetic counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedCounts {
    pub unit: Option<TimeUnit>,
    /// Count of bin `i + 1` at position `i`.
    pub counts: Vec<f64>,
}

impl GroupedCounts {
    /// Validates that every count is finite and non-negative.
    pub fn new(unit: Option<TimeUnit>, counts: Vec<f64>) -> Result<Self, SeriesError> {
        for (i, &c) in counts.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(SeriesError::InvalidCount(format!("bin {} has count {c}", i + 1)));
            }
        }
        Ok(Self { unit, counts })
    }

    /// `(bin_index, count)` pairs, indices 1-based and ascending.
    pub fn bins(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| (i + 1, c))
    }

    /// Sum of all counts.
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Number of bins.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Renders the counts in the `bin_index,count` CSV schema.
    ///
    /// Only whole-number counts are representable; fractional synthetic
    /// counts must be rounded by the caller first.
    pub fn to_csv_string(&self) -> Result<String, SeriesError> {
        let mut out = String::from("bin_index,count\n");
        for (index, count) in self.bins() {
            if count.fract() != 0.0 || count > u64::MAX as f64 {
                return Err(SeriesError::NonIntegralCount { index, count });
            }
            out.push_str(&format!("{index},{}\n", count as u64));
        }
        Ok(out)
    }

    /// Writes [`Self::to_csv_string`] to a file.
    pub fn write_csv(&self, path: &Path) -> Result<(), SeriesError> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}

/// Event times rescaled onto (0, 1].
///
/// The largest time maps to exactly 1; anything that would fall below
/// 0.001 (including an exact zero at the origin) is clamped up to 0.001 so
/// every value is strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTimes {
    /// Ascending times in (0, 1].
    pub times: Vec<f64>,
    /// The original maximum time (the divisor), in the source's units —
    /// seconds when built from a [`FailureSeries`].
    pub scale: f64,
}

impl NormalizedTimes {
    /// Normalizes raw non-negative times: sorts ascending, divides by the
    /// maximum, and clamps values below 0.001 up to 0.001.
    pub fn from_raw(raw: &[f64]) -> Result<Self, SeriesError> {
        if raw.is_empty() {
            return Err(SeriesError::EmptySeries);
        }
        let mut sorted = raw.to_vec();
        for &t in &sorted {
            if !t.is_finite() || t < 0.0 {
                return Err(SeriesError::InvalidTime(format!("{t}")));
            }
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        let scale = *sorted.last().expect("non-empty");
        if scale <= 0.0 {
            return Err(SeriesError::DegenerateSeries);
        }
        let times = sorted.iter().map(|t| (t / scale).max(0.001)).collect();
        Ok(Self { times, scale })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// End of the observation window on the normalized axis (always 1).
    pub fn observation_end(&self) -> f64 {
        1.0
    }
}

/// Splits events into one series per `(app_id, major version)` pair.
///
/// Unknown-version events form their own series per app and are never
/// merged into a numbered major. Series come back sorted by app id, then
/// major ascending with the unknown series last; each series is
/// internally time-sorted.
pub fn split_by_major_version(events: &[FailureEvent]) -> Vec<FailureSeries> {
    let mut groups: BTreeMap<(String, Option<u32>), Vec<FailureEvent>> = BTreeMap::new();
    for event in events {
        let key = (event.app_id.clone(), event.major_version());
        groups.entry(key).or_default().push(event.clone());
    }

    let mut keys: Vec<(String, Option<u32>)> = groups.keys().cloned().collect();
    keys.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| match (a.1, b.1) {
                (Some(x), Some(y)) => x.cmp(&y),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            })
    });

    keys.into_iter()
        .map(|key| {
            let mut events = groups.remove(&key).expect("key taken from the map");
            events.sort_by_key(|e| e.timestamp);
            let origin = events[0].timestamp;
            FailureSeries { app_id: key.0, major_version: key.1, events, origin }
        })
        .collect()
}

/// First day of the calendar week (Monday-based) containing `date`.
fn week_start(date: NaiveDate) -> NaiveDate {
    date - Duration::days(date.weekday().num_days_from_monday() as i64)
}

/// 1-based calendar bin index of `ts` relative to `origin`.
///
/// Events are compared on the absolute instant but binned on the calendar
/// of the origin's UTC offset, so a series collected across time zones
/// uses one consistent calendar. Weeks start on Monday; months are
/// calendar months.
fn bin_index(origin: DateTime<FixedOffset>, ts: DateTime<FixedOffset>, unit: TimeUnit) -> usize {
    let local = ts.with_timezone(&origin.timezone());
    let origin_date = origin.date_naive();
    let date = local.date_naive();
    let diff = match unit {
        TimeUnit::Day => (date - origin_date).num_days(),
        TimeUnit::Week => (week_start(date) - week_start(origin_date)).num_days() / 7,
        TimeUnit::Month => {
            (date.year() as i64 * 12 + date.month0() as i64)
                - (origin_date.year() as i64 * 12 + origin_date.month0() as i64)
        }
    };
    diff as usize + 1
}

/// Groups a series into per-`unit` failure counts.
///
/// Bin 1 is the calendar period containing the first event; every event
/// falls in exactly one bin; interior empty bins are explicit zeros and
/// there are no trailing empty bins.
pub fn group(series: &FailureSeries, unit: TimeUnit) -> Result<GroupedCounts, SeriesError> {
    if series.events.is_empty() {
        return Err(SeriesError::EmptySeries);
    }
    let last = series.events.last().expect("non-empty");
    let n_bins = bin_index(series.origin, last.timestamp, unit);
    let mut counts = vec![0.0f64; n_bins];
    for event in &series.events {
        counts[bin_index(series.origin, event.timestamp, unit) - 1] += 1.0;
    }
    GroupedCounts::new(Some(unit), counts)
}

/// Normalizes a series' event times: seconds elapsed since the first
/// event, divided by the largest elapsed time. See
/// [`NormalizedTimes::from_raw`] for the 0.001 floor.
pub fn normalize_times(series: &FailureSeries) -> Result<NormalizedTimes, SeriesError> {
    if series.events.is_empty() {
        return Err(SeriesError::EmptySeries);
    }
    let elapsed: Vec<f64> = series
        .events
        .iter()
        .map(|e| (e.timestamp - series.origin).num_milliseconds() as f64 / 1_000.0)
        .collect();
    NormalizedTimes::from_raw(&elapsed)
}

/// Running cumulative counts: `(bin_index, cumulative)` pairs, the last
/// equal to the total.
pub fn cumulative(counts: &GroupedCounts) -> Vec<(usize, f64)> {
    let mut acc = 0.0;
    counts
        .bins()
        .map(|(index, count)| {
            acc += count;
            (index, acc)
        })
        .collect()
}
