//! Parsing of Apple-style crash-report text files and pre-binned failure
//! counts (CSV) into the crate's domain types.
//!
//! A crash report is a line-oriented `Key: value` header block followed by
//! thread dumps and binary-image lists; only a handful of header keys
//! matter here and everything else is ignored. Key matching is exact on
//! the token before the colon and tolerant of arbitrary whitespace after
//! it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{GroupedCounts, SeriesError};

/// Header keys the parser recognizes. Everything else in a report is
/// noise as far as failure analysis is concerned.
pub const RECOGNIZED_KEYS: [&str; 6] =
    ["Identifier", "Version", "Date/Time", "Crashed Thread", "Hardware Model", "OS Version"];

/// The timestamp layout used by the crash reports: local time with an
/// explicit UTC offset and millisecond fraction.
const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.3f %z";

/// The value crash reports carry when the app version is unavailable.
const UNKNOWN_VERSION: &str = "??? (???)";

/// Mandatory crash-report headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MandatoryField {
    Identifier,
    DateTime,
}

impl fmt::Display for MandatoryField {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(match self {
            MandatoryField::Identifier => "Identifier",
            MandatoryField::DateTime => "Date/Time",
        })
    }
}

/// Errors raised while ingesting crash logs or counts files.
#[derive(Debug, Error)]
pub enum IngestError {
    /// A mandatory header line is absent from the report.
    #[error("missing mandatory header `{0}:`")]
    MissingField(MandatoryField),
    /// The `Date/Time:` value does not match `YYYY-MM-DD HH:MM:SS.mmm ±HHMM`.
    #[error("bad timestamp {value:?}: {source}")]
    BadTimestamp {
        value: String,
        #[source]
        source: chrono::ParseError,
    },
    /// The counts CSV violates its schema.
    #[error("counts CSV schema error: {0}")]
    SchemaError(String),
    /// A count column held a negative value.
    #[error("negative count {count} at bin index {index}")]
    NegativeCount { index: u64, count: i64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// One crash, reduced to the fields failure analysis needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEvent {
    /// Application identifier (the `Identifier:` header). Never empty.
    pub app_id: String,
    /// Dotted version string, or `None` when the report carried the
    /// unknown-version marker.
    pub version: Option<String>,
    /// Crash instant with its original UTC offset preserved.
    pub timestamp: DateTime<FixedOffset>,
    /// Index of the crashed thread, when reported. Diagnostic only.
    pub crashed_thread: Option<u32>,
    /// Failure severity; crash reports carry no severity signal, so the
    /// parser assigns 1.
    #[serde(default = "default_severity")]
    pub severity: u32,
}

fn default_severity() -> u32 {
    1
}

impl FailureEvent {
    /// Renders the event in the key-value extraction layout:
    /// `Identifier` / `Version` / `Date/Time` / `Crashed Thread` lines.
    /// Parsing the output reproduces the event exactly.
    pub fn to_record(&self) -> String {
        let mut out = format!("Identifier: {}\n", self.app_id);
        match &self.version {
            Some(v) => out.push_str(&format!("Version: {v}\n")),
            None => out.push_str(&format!("Version: {UNKNOWN_VERSION}\n")),
        }
        out.push_str(&format!("Date/Time: {}\n", self.timestamp.format(TIMESTAMP_FORMAT)));
        if let Some(thread) = self.crashed_thread {
            out.push_str(&format!("Crashed Thread: {thread}\n"));
        }
        out
    }

    /// Leading numeric component of the version (`"1.2.3"` → 1), or
    /// `None` when the version is unknown or not led by a number.
    pub fn major_version(&self) -> Option<u32> {
        let version = self.version.as_deref()?;
        version.split('.').next()?.trim().parse().ok()
    }
}

/// A raw scan of a crash report: which recognized headers were found and
/// with what values, before any interpretation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCrashReport {
    /// Where the text came from; empty when parsed from memory.
    pub source_path: String,
    /// Recognized header keys mapped to their raw (trimmed) values.
    pub fields_found: BTreeMap<String, String>,
    /// Total number of lines scanned.
    pub line_count: usize,
}

impl RawCrashReport {
    /// Scans `text` for recognized `Key: value` header lines. Unrecognized
    /// lines (thread dumps, binary images, …) are counted but otherwise
    /// ignored; on duplicate keys the first occurrence wins.
    pub fn scan(text: &str) -> Self {
        let mut fields_found = BTreeMap::new();
        let mut line_count = 0;
        for line in text.lines() {
            line_count += 1;
            let Some((key, value)) = line.split_once(':') else { continue };
            if RECOGNIZED_KEYS.contains(&key) {
                fields_found.entry(key.to_string()).or_insert_with(|| value.trim().to_string());
            }
        }
        Self { source_path: String::new(), fields_found, line_count }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.fields_found.get(key).map(String::as_str)
    }
}

/// Parses one crash report into a [`FailureEvent`].
///
/// `Identifier:` and `Date/Time:` are mandatory; a `Version:` of
/// `??? (???)` maps to an unknown version and a missing `Crashed Thread:`
/// to an unknown thread. The original UTC offset of the timestamp is
/// preserved.
pub fn parse_crash_log(text: &str) -> Result<FailureEvent, IngestError> {
    let raw = RawCrashReport::scan(text);

    let app_id = raw
        .get("Identifier")
        .filter(|v| !v.is_empty())
        .ok_or(IngestError::MissingField(MandatoryField::Identifier))?
        .to_string();

    let stamp = raw
        .get("Date/Time")
        .filter(|v| !v.is_empty())
        .ok_or(IngestError::MissingField(MandatoryField::DateTime))?;
    // Some sources render the offset sign as a typographic minus.
    let stamp = stamp.replace('\u{2212}', "-");
    let timestamp = DateTime::parse_from_str(&stamp, TIMESTAMP_FORMAT)
        .map_err(|source| IngestError::BadTimestamp { value: stamp.clone(), source })?;

    let version = match raw.get("Version") {
        None => None,
        Some(UNKNOWN_VERSION) => None,
        // `1.2.3 (1.2.3)` carries the marketing version first and the
        // build in parentheses; keep the former.
        Some(v) => Some(v.split_once(" (").map_or(v, |(head, _)| head).trim().to_string()),
    };

    let crashed_thread = raw.get("Crashed Thread").and_then(|v| v.parse().ok());

    Ok(FailureEvent { app_id, version, timestamp, crashed_thread, severity: 1 })
}

/// Successfully parsed events plus the per-file failures encountered on
/// the way, in directory order.
pub type DirScanOutcome = (Vec<FailureEvent>, Vec<(PathBuf, IngestError)>);

/// Parses every regular file in `dir` as a crash report.
///
/// Unparseable files are collected as `(path, error)` records rather than
/// aborting the walk; only an unreadable directory itself is fatal.
/// Events are returned sorted by timestamp ascending (ties keep the
/// file-name order, which is how the directory is traversed).
pub fn parse_crash_log_dir(dir: &Path) -> Result<DirScanOutcome, IngestError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|path| path.is_file())
        .collect();
    paths.sort();

    let mut events = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        let parsed = std::fs::read_to_string(&path)
            .map_err(IngestError::from)
            .and_then(|text| parse_crash_log(&text));
        match parsed {
            Ok(event) => events.push(event),
            Err(err) => failures.push((path, err)),
        }
    }
    events.sort_by_key(|e| e.timestamp);
    Ok((events, failures))
}

/// Reads a pre-binned counts file with schema `bin_index,count[,label]`.
///
/// Bins come back in ascending index order with gaps filled by zero
/// counts, so the result always covers the contiguous range `1..=max`.
/// The optional label column is accepted and ignored.
pub fn read_counts_csv(path: &Path) -> Result<GroupedCounts, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;

    {
        let headers = reader.headers()?;
        let fields: Vec<&str> = headers.iter().map(str::trim).collect();
        let valid = matches!(fields.as_slice(), ["bin_index", "count"] | ["bin_index", "count", "label"]);
        if !valid {
            return Err(IngestError::SchemaError(format!(
                "expected header `bin_index,count[,label]`, got {:?}",
                fields.join(",")
            )));
        }
    }

    let mut seen: BTreeMap<u64, u64> = BTreeMap::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let line = row_no + 2; // 1-based, after the header
        if record.len() < 2 || record.len() > 3 {
            return Err(IngestError::SchemaError(format!("line {line}: expected 2 or 3 fields, got {}", record.len())));
        }
        let index: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| IngestError::SchemaError(format!("line {line}: bin_index {:?} is not a positive integer", &record[0])))?;
        if index == 0 {
            return Err(IngestError::SchemaError(format!("line {line}: bin_index must be >= 1")));
        }
        let count_raw = record[1].trim();
        let count: i64 = count_raw
            .parse()
            .map_err(|_| IngestError::SchemaError(format!("line {line}: count {count_raw:?} is not an integer")))?;
        if count < 0 {
            return Err(IngestError::NegativeCount { index, count });
        }
        if seen.insert(index, count as u64).is_some() {
            return Err(IngestError::SchemaError(format!("line {line}: duplicate bin index {index}")));
        }
    }

    let max_index = seen.keys().next_back().copied().unwrap_or(0);
    let counts: Vec<f64> = (1..=max_index).map(|i| seen.get(&i).copied().unwrap_or(0) as f64).collect();
    Ok(GroupedCounts::new(None, counts)?)
}
