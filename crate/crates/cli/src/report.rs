//! The versioned analysis-report document and its renderers.
//!
//! The JSON document is the single source of truth: the table and CSV
//! renderers only re-format values that already exist in the report.
//! The two documented presentation transforms are scaling fractions to
//! percent (× 100) and rounding — half away from zero, two decimals for
//! percent columns and four for everything else. No renderer computes a
//! statistic of its own.

use relgrow_core::{DistFamily, DistFit, GofVerdict, SrgmFit, SrgmKind, TimeUnit};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// Current schema version written by this toolkit. Readers must ignore
/// fields they do not know so future versions can extend the document.
pub const SCHEMA_VERSION: u32 = 1;

/// The complete result of one `fit` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub toolkit_version: String,
    /// RFC 3339 stamp; absent when the run asked for reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub input: InputStamp,
    #[serde(default)]
    pub app_id: Option<String>,
    #[serde(default)]
    pub major_version: MajorVersionField,
    #[serde(default)]
    pub unit: Option<TimeUnit>,
    pub alpha: f64,
    #[serde(default)]
    pub n_events: Option<usize>,
    pub n_bins: usize,
    pub counts: Vec<f64>,
    pub dist_fits: Vec<DistFitEntry>,
    pub srgm_fits: Vec<SrgmFitEntry>,
    pub gof: Vec<GofEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Ranking>,
}

/// Provenance of the analyzed input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputStamp {
    pub path: String,
    /// SHA-256 of the input file's bytes, hex-encoded.
    pub sha256: String,
    /// What the file held: "events", "counts", or "times".
    pub kind: String,
}

/// One distribution-family fit: either a result or a recorded error,
/// never neither.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistFitEntry {
    pub family: DistFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<DistFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One SRGM fit: either a result or a recorded error, never neither.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SrgmFitEntry {
    pub kind: SrgmKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<SrgmFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One goodness-of-fit check against a named fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GofEntry {
    /// The family or kind name the test scored.
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<GofVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Family ordering under a chosen metric (best first).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ranking {
    pub metric: String,
    pub order: Vec<String>,
}

/// Major version of the analyzed series: a number, explicitly-unknown
/// (crash reports carried `??? (???)`), or not applicable (pre-binned
/// input has no version at all). JSON: number, `"unknown"`, or `null`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MajorVersionField {
    #[default]
    NotApplicable,
    Unknown,
    Known(u32),
}

impl Serialize for MajorVersionField {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            MajorVersionField::NotApplicable => serializer.serialize_unit(),
            MajorVersionField::Unknown => serializer.serialize_str("unknown"),
            MajorVersionField::Known(n) => serializer.serialize_u32(*n),
        }
    }
}

impl<'de> Deserialize<'de> for MajorVersionField {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct FieldVisitor;
        impl<'de> Visitor<'de> for FieldVisitor {
            type Value = MajorVersionField;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a major version number, \"unknown\", or null")
            }

            fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(MajorVersionField::NotApplicable)
            }

            fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(MajorVersionField::NotApplicable)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == "unknown" {
                    Ok(MajorVersionField::Unknown)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                u32::try_from(v)
                    .map(MajorVersionField::Known)
                    .map_err(|_| E::invalid_value(de::Unexpected::Unsigned(v), &self))
            }
        }
        deserializer.deserialize_any(FieldVisitor)
    }
}

impl std::fmt::Display for MajorVersionField {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        match self {
            MajorVersionField::NotApplicable => f.write_str("n/a"),
            MajorVersionField::Unknown => f.write_str("unknown"),
            MajorVersionField::Known(n) => write!(f, "{n}"),
        }
    }
}

/// Rounds half away from zero at `dp` decimal places.
fn round_dp(x: f64, dp: u32) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(dp as i32);
    (x * scale).round() / scale
}

/// Fixed-precision decimal rendering of a rounded value; non-finite
/// values render as `inf`, `-inf`, or `n/a`.
fn fmt_rounded(x: f64, dp: u32) -> String {
    if x.is_nan() {
        return "n/a".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    format!("{:.*}", dp as usize, round_dp(x, dp))
}

/// `estimate [lower, upper]`, everything at four decimals.
fn fmt_ci(ci: &relgrow_core::ConfidenceInterval) -> String {
    format!(
        "{} [{}, {}]",
        fmt_rounded(ci.estimate, 4),
        fmt_rounded(ci.lower, 4),
        fmt_rounded(ci.upper, 4)
    )
}

fn fmt_opt(x: Option<f64>, dp: u32) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| fmt_rounded(v, dp))
}

/// Percent rendering of a stored fraction: × 100, two decimals.
fn fmt_pct(fraction: Option<f64>) -> String {
    fmt_opt(fraction.map(|f| f * 100.0), 2)
}

/// The (a, b) cells for a fit: free parameters show their interval,
/// pinned parameters are marked fixed.
fn param_cells(fit: &DistFit) -> (String, String) {
    let ci_for = |name: &str| {
        fit.param_cis
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, ci)| fmt_ci(ci))
    };
    let a = ci_for("a").unwrap_or_else(|| format!("{} (fixed)", fmt_rounded(fit.model.a, 4)));
    let b = ci_for("b").unwrap_or_else(|| format!("{} (fixed)", fmt_rounded(fit.model.b, 4)));
    (a, b)
}

const DIST_HEADER: [&str; 9] = [
    "family",
    "a",
    "b",
    "T_max (obs/est)",
    "Fraction by T_max (%)",
    "RMSE",
    "Ad-R-Square",
    "C",
    "MRE (%)",
];

fn dist_row(entry: &DistFitEntry) -> Vec<String> {
    match (&entry.result, &entry.error) {
        (Some(fit), _) => {
            let (a, b) = param_cells(fit);
            vec![
                entry.family.to_string(),
                a,
                b,
                format!("{} / {}", fit.tmax_observed, fmt_opt(fit.tmax_estimated, 4)),
                fmt_pct(fit.fraction_by_tmax),
                fmt_rounded(fit.rmse, 4),
                fmt_opt(fit.adj_r_square, 4),
                fmt_ci(&fit.c),
                fmt_rounded(fit.mre * 100.0, 2),
            ]
        }
        (None, Some(err)) => {
            let mut row = vec![entry.family.to_string(), format!("FIT FAILED: {err}")];
            row.resize(DIST_HEADER.len(), String::new());
            row
        }
        (None, None) => {
            // The writer upholds result-or-error; a hand-edited file may not.
            let mut row = vec![entry.family.to_string(), "FIT FAILED: no result recorded".into()];
            row.resize(DIST_HEADER.len(), String::new());
            row
        }
    }
}

/// Left-justified fixed-width table with two-space gutters.
fn layout(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let emit = |out: &mut String, cells: &[String]| {
        let line = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(line.trim_end());
        out.push('\n');
    };
    emit(&mut out, &header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for row in rows {
        emit(&mut out, row);
    }
    out
}

/// Renders the full human-readable report.
pub fn render_table(report: &AnalysisReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Analysis report (schema {}, toolkit {})\n",
        report.schema, report.toolkit_version
    ));
    if let Some(ts) = &report.generated_at {
        out.push_str(&format!("Generated: {ts}\n"));
    }
    out.push_str(&format!(
        "Input: {} ({}, sha256 {})\n",
        report.input.path,
        report.input.kind,
        &report.input.sha256[..report.input.sha256.len().min(12)]
    ));
    out.push_str(&format!(
        "App: {}  Major version: {}  Unit: {}  Events: {}  Bins: {}  Alpha: {}\n",
        report.app_id.as_deref().unwrap_or("n/a"),
        report.major_version,
        report.unit.map_or_else(|| "n/a".to_string(), |u| u.to_string()),
        report.n_events.map_or_else(|| "n/a".to_string(), |n| n.to_string()),
        report.n_bins,
        fmt_rounded(report.alpha, 2),
    ));

    if !report.dist_fits.is_empty() {
        out.push_str("\nFailure-count distribution fits\n");
        let rows: Vec<Vec<String>> = report.dist_fits.iter().map(dist_row).collect();
        out.push_str(&layout(&DIST_HEADER, &rows));
    }

    if !report.srgm_fits.is_empty() {
        out.push_str("\nSRGM fits (maximum likelihood on normalized times)\n");
        let header = ["kind", "scale", "rate", "log-likelihood", "events"];
        let rows: Vec<Vec<String>> = report
            .srgm_fits
            .iter()
            .map(|entry| match (&entry.result, &entry.error) {
                (Some(fit), _) => vec![
                    entry.kind.to_string(),
                    fmt_ci(&fit.param_cis[0]),
                    fmt_ci(&fit.param_cis[1]),
                    fmt_rounded(fit.log_likelihood, 4),
                    fit.n_events.to_string(),
                ],
                (None, Some(err)) => {
                    let mut row = vec![entry.kind.to_string(), format!("FIT FAILED: {err}")];
                    row.resize(header.len(), String::new());
                    row
                }
                (None, None) => {
                    let mut row =
                        vec![entry.kind.to_string(), "FIT FAILED: no result recorded".into()];
                    row.resize(header.len(), String::new());
                    row
                }
            })
            .collect();
        out.push_str(&layout(&header, &rows));
    }

    if !report.gof.is_empty() {
        out.push_str("\nGoodness of fit\n");
        let header = ["target", "test", "statistic", "critical", "df/M", "verdict"];
        let rows: Vec<Vec<String>> = report
            .gof
            .iter()
            .map(|entry| match (&entry.verdict, &entry.error) {
                (Some(v), _) => vec![
                    entry.target.clone(),
                    v.test.to_string(),
                    fmt_rounded(v.statistic, 4),
                    fmt_rounded(v.critical, 4),
                    v.df_or_m.to_string(),
                    if v.passed { "pass".into() } else { "fail".into() },
                ],
                (None, Some(err)) => {
                    let mut row = vec![entry.target.clone(), format!("TEST FAILED: {err}")];
                    row.resize(header.len(), String::new());
                    row
                }
                (None, None) => {
                    let mut row =
                        vec![entry.target.clone(), "TEST FAILED: no verdict recorded".into()];
                    row.resize(header.len(), String::new());
                    row
                }
            })
            .collect();
        out.push_str(&layout(&header, &rows));
    }

    if let Some(ranking) = &report.ranking {
        out.push_str(&format!(
            "\nRanking by {}: {}\n",
            ranking.metric,
            ranking.order.join(" < ")
        ));
    }
    out
}

/// Renders the distribution-fit table as CSV with the same rounded
/// values as the table renderer. Interval bounds get their own columns;
/// failed fits carry their message in the final `error` column.
pub fn render_csv(report: &AnalysisReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "family",
        "a",
        "a_lower",
        "a_upper",
        "b",
        "b_lower",
        "b_upper",
        "tmax_observed",
        "tmax_estimated",
        "fraction_by_tmax_pct",
        "rmse",
        "adj_r_square",
        "c",
        "c_lower",
        "c_upper",
        "mre_pct",
        "error",
    ])
    .expect("writing to memory");
    for entry in &report.dist_fits {
        let record: Vec<String> = match (&entry.result, &entry.error) {
            (Some(fit), _) => {
                let free = |name: &str| {
                    fit.param_cis
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, ci)| {
                            (fmt_rounded(ci.estimate, 4), fmt_rounded(ci.lower, 4), fmt_rounded(ci.upper, 4))
                        })
                };
                let (a, a_lo, a_hi) = free("a").unwrap_or((fmt_rounded(fit.model.a, 4), String::new(), String::new()));
                let (b, b_lo, b_hi) = free("b").unwrap_or((fmt_rounded(fit.model.b, 4), String::new(), String::new()));
                vec![
                    entry.family.to_string(),
                    a,
                    a_lo,
                    a_hi,
                    b,
                    b_lo,
                    b_hi,
                    fit.tmax_observed.to_string(),
                    fit.tmax_estimated.map_or_else(String::new, |v| fmt_rounded(v, 4)),
                    fit.fraction_by_tmax.map_or_else(String::new, |v| fmt_rounded(v * 100.0, 2)),
                    fmt_rounded(fit.rmse, 4),
                    fit.adj_r_square.map_or_else(String::new, |v| fmt_rounded(v, 4)),
                    fmt_rounded(fit.c.estimate, 4),
                    fmt_rounded(fit.c.lower, 4),
                    fmt_rounded(fit.c.upper, 4),
                    fmt_rounded(fit.mre * 100.0, 2),
                    String::new(),
                ]
            }
            (None, err) => {
                let mut record = vec![entry.family.to_string()];
                record.resize(16, String::new());
                record.push(err.clone().unwrap_or_else(|| "no result recorded".into()));
                record
            }
        };
        w.write_record(&record).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writer flushed")).expect("CSV is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use relgrow_core::ConfidenceInterval;

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(fmt_rounded(0.125, 2), "0.13");
        assert_eq!(fmt_rounded(-0.125, 2), "-0.13");
        assert_eq!(fmt_rounded(0.1234, 2), "0.12");
        assert_eq!(fmt_rounded(47.554_207, 2), "47.55");
        assert_eq!(fmt_rounded(8.76543, 4), "8.7654");
        assert_eq!(fmt_rounded(f64::INFINITY, 4), "inf");
        assert_eq!(fmt_rounded(f64::NEG_INFINITY, 4), "-inf");
        assert_eq!(fmt_rounded(f64::NAN, 4), "n/a");
    }

    #[test]
    fn major_version_field_round_trips() {
        for v in [
            MajorVersionField::NotApplicable,
            MajorVersionField::Unknown,
            MajorVersionField::Known(7),
        ] {
            let json = serde_json::to_string(&v).unwrap();
            let back: MajorVersionField = serde_json::from_str(&json).unwrap();
            assert_eq!(v, back, "via {json}");
        }
        assert_eq!(serde_json::to_string(&MajorVersionField::NotApplicable).unwrap(), "null");
        assert_eq!(serde_json::to_string(&MajorVersionField::Unknown).unwrap(), "\"unknown\"");
        assert_eq!(serde_json::to_string(&MajorVersionField::Known(3)).unwrap(), "3");
        assert!(serde_json::from_str::<MajorVersionField>("\"banana\"").is_err());
    }

    #[test]
    fn ci_rendering_handles_unbounded_intervals() {
        let ci = ConfidenceInterval::unbounded(5.0, 0.95);
        assert_eq!(fmt_ci(&ci), "5.0000 [-inf, inf]");
    }

    fn minimal_report() -> AnalysisReport {
        AnalysisReport {
            schema: SCHEMA_VERSION,
            toolkit_version: "0.0.0".into(),
            generated_at: None,
            input: InputStamp {
                path: "x.csv".into(),
                sha256: "abc123".into(),
                kind: "counts".into(),
            },
            app_id: None,
            major_version: MajorVersionField::NotApplicable,
            unit: None,
            alpha: 0.1,
            n_events: None,
            n_bins: 4,
            counts: vec![1.0, 2.0, 2.0, 1.0],
            dist_fits: vec![DistFitEntry {
                family: DistFamily::Weibull,
                result: None,
                error: Some("needs more bins".into()),
            }],
            srgm_fits: vec![],
            gof: vec![],
            ranking: None,
        }
    }

    #[test]
    fn failed_fits_render_as_fit_failed_rows() {
        let table = render_table(&minimal_report());
        assert!(table.contains("FIT FAILED: needs more bins"), "table was:\n{table}");
        let csv = render_csv(&minimal_report());
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("family,a,"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("weibull,"));
        assert!(row.ends_with("needs more bins"));
    }

    #[test]
    fn report_readers_ignore_unknown_fields() {
        let mut value = serde_json::to_value(minimal_report()).unwrap();
        value["some_future_field"] = serde_json::json!({"x": 1});
        let parsed: AnalysisReport = serde_json::from_value(value).unwrap();
        assert_eq!(parsed.schema, SCHEMA_VERSION);
        assert_eq!(parsed.n_bins, 4);
    }
}
