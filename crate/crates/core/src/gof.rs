//! Goodness-of-fit machinery: descriptive accuracy metrics (RMSE, MRE,
//! adjusted R²) and two formal hypothesis tests — the Cramér–von Mises
//! test for SRGM fits on event times (critical values from the
//! MIL-HDBK-189 table) and a pooled chi-square test on binned counts.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::DistFit;
use crate::numerics::ci::chi2_inverse;
use crate::numerics::NumericsError;
use crate::series::{GroupedCounts, NormalizedTimes};
use crate::srgm::SrgmFit;

/// Critical values for the Cramér–von Mises statistic, embedded from the
/// published MIL-HDBK-189 table. External tables use the same CSV layout.
const BUILTIN_CVM_TABLE: &str = include_str!("../assets/cvm_critical_values.csv");

/// Minimum sample size the CVM table covers.
const CVM_MIN_M: usize = 3;

/// Errors raised by metrics and tests.
#[derive(Debug, Error)]
pub enum GofError {
    #[error("length mismatch: {expected} observed vs {got} predicted values")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no observations")]
    Empty,
    #[error("relative error against a zero actual value is undefined")]
    ZeroActual,
    #[error("adjusted R^2 needs more observations than parameters + 1 (n = {n_obs}, parameters = {n_params})")]
    InsufficientDof { n_obs: usize, n_params: usize },
    #[error("observed values have zero variance; R^2 is undefined")]
    DegenerateVariance,
    #[error("the Cramér–von Mises test needs at least {min} events, got {got}")]
    TooFewEvents { got: usize, min: usize },
    #[error("no critical value tabulated for m = {m}, alpha = {alpha}")]
    MissingCriticalValue { m: usize, alpha: f64 },
    #[error("bad critical-value table: {0}")]
    TableFormat(String),
    #[error("only {cells} cells remain after pooling, too few for a {n_params}-parameter model")]
    InsufficientCells { cells: usize, n_params: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which formal test produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GofTest {
    Cvm,
    ChiSquare,
}

impl std::fmt::Display for GofTest {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(match self {
            GofTest::Cvm => "cvm",
            GofTest::ChiSquare => "chi-square",
        })
    }
}

/// Outcome of a formal goodness-of-fit test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GofVerdict {
    pub test: GofTest,
    pub statistic: f64,
    pub critical: f64,
    pub alpha: f64,
    /// Degrees of freedom (chi-square) or the sample size M (CVM).
    pub df_or_m: usize,
    pub passed: bool,
}

impl GofVerdict {
    /// Applies the decision rule: the fit is accepted exactly when the
    /// statistic is strictly below the critical value.
    pub fn new(test: GofTest, statistic: f64, critical: f64, alpha: f64, df_or_m: usize) -> Self {
        Self { test, statistic, critical, alpha, df_or_m, passed: statistic < critical }
    }
}

/// The descriptive metric bundle for a fitted curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitMetrics {
    pub rmse: f64,
    pub r_square: f64,
    pub adj_r_square: f64,
    /// Magnitude of relative error between actual and estimated totals,
    /// as a fraction.
    pub mre: f64,
}

impl FitMetrics {
    pub fn compute(
        actual: &[f64],
        predicted: &[f64],
        n_params: usize,
        estimated_total: f64,
    ) -> Result<Self, GofError> {
        Ok(Self {
            rmse: rmse(actual, predicted)?,
            r_square: r_square(actual, predicted)?,
            adj_r_square: adj_r_square(actual, predicted, n_params)?,
            mre: mre(actual.iter().sum(), estimated_total)?,
        })
    }
}

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<(), GofError> {
    if actual.is_empty() {
        return Err(GofError::Empty);
    }
    if actual.len() != predicted.len() {
        return Err(GofError::LengthMismatch { expected: actual.len(), got: predicted.len() });
    }
    Ok(())
}

/// Root-mean-square error between observed and predicted values.
pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, GofError> {
    check_lengths(actual, predicted)?;
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok((sse / actual.len() as f64).sqrt())
}

/// Magnitude of relative error `|actual − estimated| / |actual|`, as a
/// fraction of the actual value.
pub fn mre(actual: f64, estimated: f64) -> Result<f64, GofError> {
    if actual == 0.0 {
        return Err(GofError::ZeroActual);
    }
    Ok((actual - estimated).abs() / actual.abs())
}

/// Coefficient of determination 1 − SSE/SST.
pub fn r_square(actual: &[f64], predicted: &[f64]) -> Result<f64, GofError> {
    check_lengths(actual, predicted)?;
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let sst: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if sst <= 0.0 {
        return Err(GofError::DegenerateVariance);
    }
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(1.0 - sse / sst)
}

/// R² penalized for model size: 1 − (1 − R²)(N − 1)/(N − p − 1).
pub fn adj_r_square(actual: &[f64], predicted: &[f64], n_params: usize) -> Result<f64, GofError> {
    check_lengths(actual, predicted)?;
    let n = actual.len();
    if n <= n_params + 1 {
        return Err(GofError::InsufficientDof { n_obs: n, n_params });
    }
    let r2 = r_square(actual, predicted)?;
    let n = n as f64;
    let p = n_params as f64;
    Ok(1.0 - (1.0 - r2) * (n - 1.0) / (n - p - 1.0))
}

/// One row of the CVM critical-value table.
#[derive(Debug, Clone, Copy)]
struct CvmRow {
    m: usize,
    alpha: f64,
    critical: f64,
}

/// Cramér–von Mises critical values, indexed by sample size and
/// significance level.
#[derive(Debug, Clone)]
pub struct CvmTable {
    rows: Vec<CvmRow>,
}

impl CvmTable {
    /// The embedded MIL-HDBK-189 table (α ∈ {0.10, 0.05, 0.01},
    /// M from 3 to 100).
    pub fn builtin() -> &'static CvmTable {
        static TABLE: OnceLock<CvmTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            CvmTable::from_csv_str(BUILTIN_CVM_TABLE).expect("embedded table is well-formed")
        })
    }

    /// Parses a `m,alpha,critical` CSV document.
    pub fn from_csv_str(text: &str) -> Result<CvmTable, GofError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| GofError::TableFormat(e.to_string()))?;
        let fields: Vec<&str> = header.iter().collect();
        if fields != ["m", "alpha", "critical"] {
            return Err(GofError::TableFormat(format!(
                "expected header m,alpha,critical; got {}",
                fields.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| GofError::TableFormat(e.to_string()))?;
            let line = idx + 2;
            if record.len() != 3 {
                return Err(GofError::TableFormat(format!(
                    "line {line}: expected 3 fields, got {}",
                    record.len()
                )));
            }
            let m: usize = record[0]
                .parse()
                .map_err(|_| GofError::TableFormat(format!("line {line}: bad m {:?}", &record[0])))?;
            let alpha: f64 = record[1].parse().map_err(|_| {
                GofError::TableFormat(format!("line {line}: bad alpha {:?}", &record[1]))
            })?;
            let critical: f64 = record[2].parse().map_err(|_| {
                GofError::TableFormat(format!("line {line}: bad critical {:?}", &record[2]))
            })?;
            let alpha_ok = alpha > 0.0 && alpha < 1.0;
            let critical_ok = critical > 0.0;
            if m == 0 || !alpha_ok || !critical_ok {
                return Err(GofError::TableFormat(format!(
                    "line {line}: out-of-range row m={m}, alpha={alpha}, critical={critical}"
                )));
            }
            if rows.iter().any(|r: &CvmRow| r.m == m && alphas_match(r.alpha, alpha)) {
                return Err(GofError::TableFormat(format!(
                    "line {line}: duplicate entry for m={m}, alpha={alpha}"
                )));
            }
            rows.push(CvmRow { m, alpha, critical });
        }
        if rows.is_empty() {
            return Err(GofError::TableFormat("table has no data rows".into()));
        }
        Ok(CvmTable { rows })
    }

    pub fn from_csv_path(path: &Path) -> Result<CvmTable, GofError> {
        let text = std::fs::read_to_string(path)?;
        CvmTable::from_csv_str(&text)
    }

    /// Critical value for sample size `m` at level `alpha`.
    ///
    /// Exact rows are returned as tabulated; sample sizes between rows
    /// are linearly interpolated; sizes beyond the table's end take the
    /// last (asymptotic) row. Sizes below the table or levels it does not
    /// cover are [`GofError::MissingCriticalValue`].
    pub fn critical(&self, m: usize, alpha: f64) -> Result<f64, GofError> {
        let mut column: Vec<&CvmRow> =
            self.rows.iter().filter(|r| alphas_match(r.alpha, alpha)).collect();
        if column.is_empty() {
            return Err(GofError::MissingCriticalValue { m, alpha });
        }
        column.sort_by_key(|r| r.m);
        if m < column[0].m {
            return Err(GofError::MissingCriticalValue { m, alpha });
        }
        let last = column.last().expect("non-empty column");
        if m >= last.m {
            return Ok(last.critical);
        }
        // Exact hit or linear interpolation between the bracketing rows.
        match column.binary_search_by_key(&m, |r| r.m) {
            Ok(i) => Ok(column[i].critical),
            Err(i) => {
                let lo = column[i - 1];
                let hi = column[i];
                let w = (m - lo.m) as f64 / (hi.m - lo.m) as f64;
                Ok(lo.critical + w * (hi.critical - lo.critical))
            }
        }
    }
}

fn alphas_match(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

/// Cramér–von Mises test of an SRGM fit against its event times, using
/// the built-in critical-value table.
pub fn cvm_test(times: &NormalizedTimes, fit: &SrgmFit, alpha: f64) -> Result<GofVerdict, GofError> {
    cvm_test_with_table(times, fit, alpha, CvmTable::builtin())
}

/// Cramér–von Mises test with an explicit critical-value table.
///
/// The statistic is C²_M = 1/(12M) + Σ (uᵢ − (2i−1)/(2M))² over the
/// ordered transformed times uᵢ = μ̂(tᵢ)/μ̂(T); a perfect model makes the
/// uᵢ look uniform on (0, 1).
pub fn cvm_test_with_table(
    times: &NormalizedTimes,
    fit: &SrgmFit,
    alpha: f64,
    table: &CvmTable,
) -> Result<GofVerdict, GofError> {
    let m = times.len();
    if m < CVM_MIN_M {
        return Err(GofError::TooFewEvents { got: m, min: CVM_MIN_M });
    }
    if m != fit.n_events {
        return Err(GofError::LengthMismatch { expected: fit.n_events, got: m });
    }
    let mu_end = fit.model.mean_value(fit.observation_end);
    let m_f = m as f64;
    let mut statistic = 1.0 / (12.0 * m_f);
    for (i, &t) in times.times.iter().enumerate() {
        let u = fit.model.mean_value(t) / mu_end;
        let target = (2.0 * (i + 1) as f64 - 1.0) / (2.0 * m_f);
        statistic += (u - target) * (u - target);
    }
    let critical = table.critical(m, alpha)?;
    Ok(GofVerdict::new(GofTest::Cvm, statistic, critical, alpha, m))
}

/// A fitted model a chi-square test can score against binned counts.
#[derive(Debug, Clone, Copy)]
pub enum FittedModel<'a> {
    Dist(&'a DistFit),
    Srgm(&'a SrgmFit),
}

impl FittedModel<'_> {
    /// Expected count in bin `i` of `k` (1-based).
    ///
    /// Distribution fits reproduce the form they were fitted with (point
    /// density or integrated bin mass). SRGM fits map bin edges onto the
    /// normalized observation window, i ↦ (i/k)·T, so the expected
    /// counts total μ̂(T) ≈ the observed count at the MLE.
    fn expected(&self, i: usize, k: usize) -> f64 {
        match self {
            FittedModel::Dist(fit) => {
                let t = i as f64;
                if fit.integrated {
                    fit.c.estimate * (fit.model.cdf(t) - fit.model.cdf(t - 1.0))
                } else {
                    fit.c.estimate * fit.model.pdf(t)
                }
            }
            FittedModel::Srgm(fit) => {
                let t_end = fit.observation_end;
                let hi = i as f64 / k as f64 * t_end;
                let lo = (i - 1) as f64 / k as f64 * t_end;
                fit.model.mean_value(hi) - fit.model.mean_value(lo)
            }
        }
    }

    fn n_fitted_params(&self) -> usize {
        match self {
            FittedModel::Dist(fit) => fit.model.family.n_free_params() + 1,
            FittedModel::Srgm(_) => 2,
        }
    }
}

/// Merges sparse cells until every expected count is at least 1.
///
/// The rightmost deficient cell merges into its left neighbor (tail mass
/// accumulates leftward); a deficient first cell merges rightward.
fn pool_cells(mut observed: Vec<f64>, mut expected: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    loop {
        if expected.len() <= 1 {
            return (observed, expected);
        }
        let Some(idx) = expected.iter().rposition(|&e| e < 1.0) else {
            return (observed, expected);
        };
        let into = if idx > 0 { idx - 1 } else { idx + 1 };
        observed[into] += observed[idx];
        expected[into] += expected[idx];
        observed.remove(idx);
        expected.remove(idx);
    }
}

/// Pearson chi-square test of a fitted model against binned counts.
///
/// Cells with expected count below 1 are pooled before the statistic is
/// computed; degrees of freedom are cells − 1 − fitted parameters.
pub fn chi_square_test(
    counts: &GroupedCounts,
    model: FittedModel,
    alpha: f64,
) -> Result<GofVerdict, GofError> {
    let k = counts.len();
    if k == 0 {
        return Err(GofError::Empty);
    }
    let observed = counts.counts.clone();
    let expected: Vec<f64> = (1..=k).map(|i| model.expected(i, k)).collect();
    let (observed, expected) = pool_cells(observed, expected);

    let n_params = model.n_fitted_params();
    let cells = expected.len();
    if cells < n_params + 2 {
        return Err(GofError::InsufficientCells { cells, n_params });
    }
    let df = cells - 1 - n_params;

    let statistic: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    let critical = chi2_inverse(df, 1.0 - alpha)?;
    Ok(GofVerdict::new(GofTest::ChiSquare, statistic, critical, alpha, df))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{self, DistFamily, DistModel, Noise};
    use crate::numerics::ci::ConfidenceInterval;
    use crate::srgm::{self, SrgmKind, SrgmModel};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn rmse_anchor_and_properties() {
        // sqrt((9 + 16)/2).
        let v = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(v, 3.535_533_905_932_738, epsilon = 1e-12);
        // Symmetric in its arguments and invariant under a common shift.
        let a = [1.0, 5.0, 2.0];
        let p = [2.0, 4.5, 2.5];
        assert_eq!(rmse(&a, &p).unwrap(), rmse(&p, &a).unwrap());
        let a2: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        let p2: Vec<f64> = p.iter().map(|x| x + 10.0).collect();
        assert_abs_diff_eq!(rmse(&a, &p).unwrap(), rmse(&a2, &p2).unwrap(), epsilon = 1e-12);
        assert_eq!(rmse(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);

        assert!(matches!(rmse(&[], &[]), Err(GofError::Empty)));
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(GofError::LengthMismatch { .. })));
    }

    #[test]
    fn mre_anchors() {
        assert_abs_diff_eq!(mre(54.0, 50.54).unwrap(), 3.46 / 54.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mre(80.0, 80.93).unwrap(), 0.93 / 80.0, epsilon = 1e-12);
        // Symmetric around over- and under-estimation.
        assert_eq!(mre(100.0, 90.0).unwrap(), mre(100.0, 110.0).unwrap());
        assert!(matches!(mre(0.0, 5.0), Err(GofError::ZeroActual)));
    }

    #[test]
    fn r_square_and_adjustment_anchors() {
        let actual = [1.0, 2.0, 3.0, 4.0, 5.0];
        let predicted = [1.1, 1.9, 3.2, 3.8, 5.1];
        // SSE = 0.11 against SST = 10.
        assert_abs_diff_eq!(r_square(&actual, &predicted).unwrap(), 0.989, epsilon = 1e-12);
        // p = 2: 1 − 0.011·4/2.
        assert_abs_diff_eq!(
            adj_r_square(&actual, &predicted, 2).unwrap(),
            0.978,
            epsilon = 1e-12
        );
        // More parameters mean a harsher penalty.
        assert!(
            adj_r_square(&actual, &predicted, 3).unwrap()
                < adj_r_square(&actual, &predicted, 2).unwrap()
        );
        // Perfect prediction stays at 1 regardless of p.
        assert_eq!(adj_r_square(&actual, &actual, 2).unwrap(), 1.0);

        assert!(matches!(
            adj_r_square(&actual, &predicted, 4),
            Err(GofError::InsufficientDof { .. })
        ));
        assert!(matches!(
            r_square(&[2.0, 2.0, 2.0], &[2.0, 2.1, 1.9]),
            Err(GofError::DegenerateVariance)
        ));
    }

    #[test]
    fn fit_metrics_bundle_is_consistent_with_the_parts() {
        let actual = [1.0, 2.0, 3.0, 4.0, 5.0];
        let predicted = [1.1, 1.9, 3.2, 3.8, 5.1];
        let m = FitMetrics::compute(&actual, &predicted, 2, 14.2).unwrap();
        assert_eq!(m.rmse, rmse(&actual, &predicted).unwrap());
        assert_eq!(m.r_square, r_square(&actual, &predicted).unwrap());
        assert_eq!(m.adj_r_square, adj_r_square(&actual, &predicted, 2).unwrap());
        assert_eq!(m.mre, mre(15.0, 14.2).unwrap());
    }

    #[test]
    fn builtin_table_lookups() {
        let t = CvmTable::builtin();
        // Tabulated rows come back verbatim.
        assert_eq!(t.critical(3, 0.01).unwrap(), 0.23);
        assert_eq!(t.critical(60, 0.10).unwrap(), 0.173);
        assert_eq!(t.critical(10, 0.05).unwrap(), 0.21);
        // Between rows: linear interpolation (m = 12 sits 2/5 of the way
        // from 10 to 15).
        assert_abs_diff_eq!(t.critical(12, 0.05).unwrap(), 0.214, epsilon = 1e-12);
        // Beyond the table: the asymptotic last row.
        assert_eq!(t.critical(500, 0.05).unwrap(), 0.22);
        assert_eq!(t.critical(500, 0.01).unwrap(), 0.34);
        // Below the table or at an untabulated level: an error.
        assert!(matches!(t.critical(2, 0.05), Err(GofError::MissingCriticalValue { .. })));
        assert!(matches!(t.critical(10, 0.07), Err(GofError::MissingCriticalValue { .. })));
    }

    #[test]
    fn table_parser_rejects_malformed_input() {
        assert!(matches!(
            CvmTable::from_csv_str("m,alpha\n3,0.05\n"),
            Err(GofError::TableFormat(_))
        ));
        assert!(matches!(
            CvmTable::from_csv_str("m,alpha,critical\nthree,0.05,0.2\n"),
            Err(GofError::TableFormat(_))
        ));
        assert!(matches!(
            CvmTable::from_csv_str("m,alpha,critical\n3,0.05,0.2\n3,0.05,0.3\n"),
            Err(GofError::TableFormat(_))
        ));
        assert!(matches!(
            CvmTable::from_csv_str("m,alpha,critical\n"),
            Err(GofError::TableFormat(_))
        ));
        // A well-formed custom table loads.
        let t = CvmTable::from_csv_str("m,alpha,critical\n3,0.05,0.2\n10,0.05,0.25\n").unwrap();
        assert_abs_diff_eq!(t.critical(5, 0.05).unwrap(), 0.2 + 2.0 / 7.0 * 0.05, epsilon = 1e-12);
    }

    /// An SrgmFit wrapper for tests that need full control of the model.
    fn synthetic_srgm_fit(model: SrgmModel, n_events: usize) -> SrgmFit {
        SrgmFit {
            model,
            log_likelihood: 0.0,
            param_cis: [
                ConfidenceInterval::point(model.scale, 0.95),
                ConfidenceInterval::point(model.rate, 0.95),
            ],
            n_events,
            observation_end: 1.0,
        }
    }

    #[test]
    fn cvm_statistic_hand_case() {
        // A linear mean value (power law with rate 1) makes uᵢ = tᵢ.
        // Times at the uniform plotting positions zero every term, so the
        // statistic collapses to its floor 1/(12M).
        let model = SrgmModel::new(SrgmKind::PowerLaw, 7.0, 1.0).unwrap();
        let fit = synthetic_srgm_fit(model, 5);
        let times = NormalizedTimes { times: vec![0.1, 0.3, 0.5, 0.7, 0.9], scale: 1.0 };
        let verdict = cvm_test(&times, &fit, 0.05).unwrap();
        assert_abs_diff_eq!(verdict.statistic, 1.0 / 60.0, epsilon = 1e-12);
        assert_eq!(verdict.critical, 0.20);
        assert_eq!(verdict.df_or_m, 5);
        assert!(verdict.passed);
        assert_eq!(verdict.test, GofTest::Cvm);

        // Displacing the last time adds exactly its squared deviation.
        let times = NormalizedTimes { times: vec![0.1, 0.3, 0.5, 0.7, 1.0], scale: 1.0 };
        let verdict = cvm_test(&times, &fit, 0.05).unwrap();
        assert_abs_diff_eq!(verdict.statistic, 1.0 / 60.0 + 0.01, epsilon = 1e-12);
    }

    #[test]
    fn cvm_rejects_undersized_samples_and_mismatches() {
        let model = SrgmModel::new(SrgmKind::PowerLaw, 7.0, 1.0).unwrap();
        let fit = synthetic_srgm_fit(model, 2);
        let times = NormalizedTimes { times: vec![0.4, 1.0], scale: 1.0 };
        assert!(matches!(cvm_test(&times, &fit, 0.05), Err(GofError::TooFewEvents { got: 2, .. })));

        let fit = synthetic_srgm_fit(model, 7);
        let times = NormalizedTimes { times: vec![0.2, 0.5, 1.0], scale: 1.0 };
        assert!(matches!(cvm_test(&times, &fit, 0.05), Err(GofError::LengthMismatch { .. })));
    }

    #[test]
    fn cvm_accepts_a_well_specified_fit() {
        let truth = SrgmModel::new(SrgmKind::NhppExponential, 100.0, 2.0).unwrap();
        let events = srgm::generate_events(&truth, 1.0, 17);
        let times = NormalizedTimes::from_raw(&events).unwrap();
        let fit = srgm::fit_mle(&times, SrgmKind::NhppExponential).unwrap();
        let verdict = cvm_test(&times, &fit, 0.05).unwrap();
        assert!(
            verdict.passed,
            "well-specified data should pass: statistic {} vs critical {}",
            verdict.statistic, verdict.critical
        );
    }

    #[test]
    fn pooling_merges_leftward_then_rightward() {
        let (obs, exp) = pool_cells(vec![1.0, 3.0, 0.0, 1.0], vec![0.5, 3.0, 0.4, 0.3]);
        // 0.3 merges into 0.4 (left), the result merges into 3.0, and the
        // deficient first cell merges right: one cell remains.
        assert_eq!(exp, vec![4.2]);
        assert_eq!(obs, vec![5.0]);

        // Nothing to pool: untouched.
        let (obs, exp) = pool_cells(vec![2.0, 3.0], vec![1.5, 3.5]);
        assert_eq!(obs, vec![2.0, 3.0]);
        assert_eq!(exp, vec![1.5, 3.5]);

        // Conservation of mass in a partial pool.
        let (obs, exp) = pool_cells(vec![4.0, 2.0, 1.0], vec![4.0, 1.5, 0.5]);
        assert_eq!(obs, vec![4.0, 3.0]);
        assert_eq!(exp, vec![4.0, 2.0]);
    }

    #[test]
    fn chi_square_accepts_a_near_perfect_dist_fit() {
        let truth = DistModel::new(DistFamily::Weibull, 6.0, 2.0).unwrap();
        let counts = dist::generate_counts(&truth, 500.0, 30, Noise::None, 0).unwrap();
        let fit = dist::fit(&counts, DistFamily::Weibull).unwrap();
        let verdict = chi_square_test(&counts, FittedModel::Dist(&fit), 0.05).unwrap();
        assert!(verdict.statistic < 1e-3, "noiseless data: statistic {}", verdict.statistic);
        assert!(verdict.passed);
        assert_eq!(verdict.test, GofTest::ChiSquare);
        // Pooling trimmed the thin tail but left enough cells.
        assert!(verdict.df_or_m >= 1);
    }

    #[test]
    fn chi_square_accepts_a_well_specified_srgm_fit() {
        let truth = SrgmModel::new(SrgmKind::NhppExponential, 200.0, 2.0).unwrap();
        let events = srgm::generate_events(&truth, 1.0, 23);
        let times = NormalizedTimes::from_raw(&events).unwrap();
        let fit = srgm::fit_mle(&times, SrgmKind::NhppExponential).unwrap();

        // Bin the normalized times into 10 uniform cells.
        let k = 10;
        let mut counts = vec![0.0; k];
        for &t in &times.times {
            let mut idx = (t * k as f64).ceil() as usize;
            idx = idx.clamp(1, k);
            counts[idx - 1] += 1.0;
        }
        let counts = GroupedCounts::new(None, counts).unwrap();
        let verdict = chi_square_test(&counts, FittedModel::Srgm(&fit), 0.05).unwrap();
        assert!(
            verdict.passed,
            "well-specified SRGM should pass: statistic {} vs critical {} (df {})",
            verdict.statistic, verdict.critical, verdict.df_or_m
        );
        // Expected counts integrate the fitted mean value over the window,
        // which at the MLE reproduces the observed total.
        let total_expected: f64 = (1..=k).map(|i| FittedModel::Srgm(&fit).expected(i, k)).sum();
        assert_relative_eq!(total_expected, times.len() as f64, max_relative = 1e-6);
    }

    #[test]
    fn chi_square_rejects_a_misspecified_model() {
        // Strongly front-loaded counts against a late-peaked model.
        let counts = GroupedCounts::new(
            None,
            vec![50.0, 30.0, 15.0, 8.0, 4.0, 2.0, 1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        let truth = DistModel::new(DistFamily::Weibull, 8.0, 3.0).unwrap();
        // A hand-built "fit" whose model disagrees with the data.
        let fit = DistFit {
            model: truth,
            c: ConfidenceInterval::point(111.0, 0.95),
            param_cis: vec![
                ("a".to_string(), ConfidenceInterval::point(8.0, 0.95)),
                ("b".to_string(), ConfidenceInterval::point(3.0, 0.95)),
            ],
            tmax_observed: 1,
            tmax_estimated: truth.tmax(),
            fraction_by_tmax: truth.fraction_by_tmax().ok(),
            rmse: 0.0,
            adj_r_square: None,
            mre: 0.0,
            sse: 0.0,
            integrated: false,
        };
        let verdict = chi_square_test(&counts, FittedModel::Dist(&fit), 0.05).unwrap();
        assert!(!verdict.passed, "misfit must fail: statistic {}", verdict.statistic);
    }

    #[test]
    fn chi_square_requires_enough_cells() {
        let model = SrgmModel::new(SrgmKind::NhppExponential, 10.0, 1.0).unwrap();
        let fit = synthetic_srgm_fit(model, 6);
        let counts = GroupedCounts::new(None, vec![2.0, 2.0, 2.0]).unwrap();
        assert!(matches!(
            chi_square_test(&counts, FittedModel::Srgm(&fit), 0.05),
            Err(GofError::InsufficientCells { .. })
        ));
        let empty = GroupedCounts::new(None, Vec::new());
        if let Ok(empty) = empty {
            assert!(matches!(
                chi_square_test(&empty, FittedModel::Srgm(&fit), 0.05),
                Err(GofError::Empty)
            ));
        }
    }

    #[test]
    fn verdict_rule_is_strict_inequality() {
        let v = GofVerdict::new(GofTest::Cvm, 0.2, 0.2, 0.05, 10);
        assert!(!v.passed, "statistic equal to the critical value must fail");
        let v = GofVerdict::new(GofTest::Cvm, 0.199, 0.2, 0.05, 10);
        assert!(v.passed);
    }
}
