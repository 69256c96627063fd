//! Software-reliability growth analysis for crash-report failure data.
//!
//! The library ingests crash-report logs or pre-binned failure counts,
//! organizes them into per-version failure series, and estimates defect
//! content two ways:
//!
//! * exact-time NHPP software-reliability growth models (exponential,
//!   Musa basic, Musa-Okumoto logarithmic, power law) fit by maximum
//!   likelihood on normalized event times, and
//! * grouped failure-count curves (Weibull and Gamma families with their
//!   Rayleigh and S-shaped special cases) fit by scaled least squares.
//!
//! Fit quality is judged with Cramér–von Mises and chi-square tests plus
//! RMSE / adjusted R² / MRE metrics, and parameter uncertainty is reported
//! as 95% confidence intervals.
//!
//! Modules follow the pipeline order: [`ingest`] → [`series`] →
//! ([`srgm`] | [`dist`]) → [`gof`], with [`numerics`] underneath.

// Reference constants (Lanczos coefficients, test anchors) are written
// with every digit of the published value, even where f64 rounds the
// tail away; the extra digits document what the value is supposed to be.
#![allow(clippy::excessive_precision)]

pub mod dist;
pub mod gof;
pub mod ingest;
pub mod numerics;
pub mod series;
pub mod srgm;

pub use dist::{DistError, DistFamily, DistFit, DistModel, FitOptions, Noise};
pub use gof::{CvmTable, FitMetrics, FittedModel, GofError, GofTest, GofVerdict};
pub use ingest::{FailureEvent, IngestError, RawCrashReport};
pub use numerics::ci::ConfidenceInterval;
pub use numerics::optimize::MinimizeResult;
pub use numerics::NumericsError;
pub use series::{FailureSeries, GroupedCounts, NormalizedTimes, SeriesError, TimeUnit};
pub use srgm::{SrgmError, SrgmFit, SrgmKind, SrgmModel};
