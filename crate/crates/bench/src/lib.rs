//! Shared dataset builders for the criterion benches.
//!
//! Both bench targets fit against the same frozen synthetic inputs so run
//! times are comparable across benchmark invocations and code changes.

use relgrow_core::{
    dist, srgm, DistFamily, DistModel, GroupedCounts, Noise, NormalizedTimes, SrgmKind, SrgmModel,
};

/// Poisson-noised Weibull bin counts: a mid-sized grouped dataset typical
/// of a release observed over two dozen reporting periods.
pub fn bench_counts() -> GroupedCounts {
    let model = DistModel::new(DistFamily::Weibull, 8.0, 2.0).expect("valid model");
    dist::generate_counts(&model, 400.0, 24, Noise::Poisson, 42).expect("valid generator input")
}

/// Normalized event times from an exponential-rate process, roughly six
/// hundred events — a large single-version crash history.
pub fn bench_times() -> NormalizedTimes {
    let model = SrgmModel::new(SrgmKind::NhppExponential, 700.0, 2.0).expect("valid model");
    let raw = srgm::generate_events(&model, 1.0, 7);
    NormalizedTimes::from_raw(&raw).expect("nonempty series")
}
