//! Confidence intervals for least-squares fits, plus the chi-square and
//! Student-t quantile functions they and the goodness-of-fit tests need.

use serde::{Deserialize, Serialize};

use super::special::{reg_inc_beta, reg_inc_gamma_lower};
use super::NumericsError;

/// A two-sided confidence interval around a point estimate.
///
/// The bounds may be infinite: a singular Jacobian in [`asymptotic_ci`]
/// produces deliberately unbounded intervals instead of an error, flagging
/// that the data do not constrain the parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    #[serde(with = "json_bound")]
    pub lower: f64,
    #[serde(with = "json_bound")]
    pub upper: f64,
    /// Confidence level as a fraction, e.g. 0.95.
    pub level: f64,
}

impl ConfidenceInterval {
    /// A zero-width interval (a perfectly determined parameter).
    pub fn point(estimate: f64, level: f64) -> Self {
        Self { estimate, lower: estimate, upper: estimate, level }
    }

    /// An unbounded interval, used when the data carry no information
    /// about the parameter (singular Jacobian).
    pub fn unbounded(estimate: f64, level: f64) -> Self {
        Self { estimate, lower: f64::NEG_INFINITY, upper: f64::INFINITY, level }
    }

    /// Whether either bound is infinite.
    pub fn is_unbounded(&self) -> bool {
        !self.lower.is_finite() || !self.upper.is_finite()
    }

    /// Whether `value` lies inside the interval (bounds inclusive).
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// JSON has no representation for infinite floats, so interval bounds
/// serialize as numbers when finite and as the strings `"-inf"` / `"inf"`
/// otherwise.
mod json_bound {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct BoundVisitor;

    impl Visitor<'_> for BoundVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or \"inf\"/\"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("invalid interval bound {other:?}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(BoundVisitor)
    }
}

/// Asymptotic (linearization) confidence intervals for a least-squares
/// fit.
///
/// `residuals` maps a parameter vector to the residual vector of the fit;
/// `argmin` is the least-squares solution. The half-width of parameter j
/// is `t(n-p, (1+level)/2) · sqrt(s² · [(JᵀJ)⁻¹]ⱼⱼ)` where J is the
/// central-difference Jacobian of the residuals at `argmin` and
/// `s² = SSE/(n-p)`.
///
/// A perfect fit (SSE = 0) yields zero-width intervals; a singular JᵀJ
/// yields unbounded intervals rather than an error.
pub fn asymptotic_ci<F>(
    residuals: F,
    argmin: &[f64],
    n_obs: usize,
    level: f64,
) -> Result<Vec<ConfidenceInterval>, NumericsError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let p = argmin.len();
    if p == 0 {
        return Err(NumericsError::Domain("asymptotic_ci requires at least one parameter".into()));
    }
    if n_obs <= p {
        return Err(NumericsError::InsufficientObservations { n_obs, n_params: p });
    }
    let level_ok = 0.0 < level && level < 1.0;
    if !level_ok {
        return Err(NumericsError::Domain(format!("confidence level must be in (0,1), got {level}")));
    }

    let r0 = residuals(argmin);
    if r0.len() != n_obs {
        return Err(NumericsError::Domain(format!(
            "residual function returned {} values for n_obs = {n_obs}",
            r0.len()
        )));
    }
    let sse: f64 = r0.iter().map(|r| r * r).sum();
    if sse == 0.0 {
        return Ok(argmin.iter().map(|&e| ConfidenceInterval::point(e, level)).collect());
    }

    // Central-difference Jacobian of the residual vector, n rows × p cols.
    let mut jac = vec![vec![0.0f64; p]; n_obs];
    for j in 0..p {
        let h = (1e-6 * argmin[j].abs()).max(1e-6);
        let mut plus = argmin.to_vec();
        let mut minus = argmin.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let rp = residuals(&plus);
        let rm = residuals(&minus);
        if rp.len() != n_obs || rm.len() != n_obs {
            return Err(NumericsError::Domain("residual length changed during differentiation".into()));
        }
        for i in 0..n_obs {
            jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }

    // A = JᵀJ.
    let mut a = vec![vec![0.0f64; p]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = (0..n_obs).map(|k| jac[k][i] * jac[k][j]).sum();
        }
    }

    let sigma2 = sse / (n_obs - p) as f64;
    let t = t_inverse(n_obs - p, 0.5 + level / 2.0)?;

    let cis = match invert_symmetric(&a) {
        Some(inv) => argmin
            .iter()
            .enumerate()
            .map(|(j, &est)| {
                let var = sigma2 * inv[j][j];
                if var.is_finite() && var >= 0.0 {
                    let hw = t * var.sqrt();
                    ConfidenceInterval { estimate: est, lower: est - hw, upper: est + hw, level }
                } else {
                    ConfidenceInterval::unbounded(est, level)
                }
            })
            .collect(),
        None => argmin.iter().map(|&e| ConfidenceInterval::unbounded(e, level)).collect(),
    };
    Ok(cis)
}

/// Gauss-Jordan inverse with partial pivoting for the small (≤ 3×3)
/// normal-equation matrices this crate produces. Returns `None` when the
/// matrix is numerically singular.
fn invert_symmetric(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let p = a.len();
    let mut m: Vec<Vec<f64>> = a.iter().map(|row| {
        let mut r = row.clone();
        r.extend(std::iter::repeat_n(0.0, p));
        r
    }).collect();
    for (i, row) in m.iter_mut().enumerate() {
        row[p + i] = 1.0;
    }

    let scale: f64 = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    for col in 0..p {
        // Partial pivot.
        let pivot_row = (col..p).max_by(|&r1, &r2| {
            m[r1][col].abs().partial_cmp(&m[r2][col].abs()).expect("finite matrix")
        })?;
        if m[pivot_row][col].abs() < 1e-13 * scale {
            return None;
        }
        m.swap(col, pivot_row);
        let pivot = m[col][col];
        for v in m[col].iter_mut() {
            *v /= pivot;
        }
        for row in 0..p {
            if row == col {
                continue;
            }
            let factor = m[row][col];
            if factor != 0.0 {
                let src = m[col].clone();
                for (v, s) in m[row].iter_mut().zip(&src) {
                    *v -= factor * s;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[p..].to_vec()).collect())
}

/// Inverse CDF of the chi-square distribution with `df` degrees of
/// freedom, solved by bisection on the regularized incomplete gamma.
pub fn chi2_inverse(df: usize, prob: f64) -> Result<f64, NumericsError> {
    if df == 0 {
        return Err(NumericsError::Domain("chi2_inverse requires df >= 1".into()));
    }
    let prob_ok = 0.0 < prob && prob < 1.0;
    if !prob_ok {
        return Err(NumericsError::Domain(format!("probability must be in (0,1), got {prob}")));
    }
    let cdf = |x: f64| reg_inc_gamma_lower(df as f64 / 2.0, x / 2.0);

    let mut hi = (df as f64).max(1.0);
    let mut grow = 0;
    while cdf(hi)? < prob {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(NumericsError::NoConvergence { what: "chi2_inverse bracketing", iterations: 200 });
        }
    }
    bisect_cdf(&cdf, 0.0, hi, prob)
}

/// Inverse CDF of Student's t distribution with `df` degrees of freedom.
pub fn t_inverse(df: usize, prob: f64) -> Result<f64, NumericsError> {
    if df == 0 {
        return Err(NumericsError::Domain("t_inverse requires df >= 1".into()));
    }
    let prob_ok = 0.0 < prob && prob < 1.0;
    if !prob_ok {
        return Err(NumericsError::Domain(format!("probability must be in (0,1), got {prob}")));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    if prob < 0.5 {
        return Ok(-t_inverse(df, 1.0 - prob)?);
    }
    // For x >= 0: F(x) = 1 - I_{df/(df+x²)}(df/2, 1/2) / 2.
    let nu = df as f64;
    let cdf = |x: f64| -> Result<f64, NumericsError> {
        Ok(1.0 - reg_inc_beta(nu / 2.0, 0.5, nu / (nu + x * x)) / 2.0)
    };

    let mut hi = 1.0;
    let mut grow = 0;
    while cdf(hi)? < prob {
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(NumericsError::NoConvergence { what: "t_inverse bracketing", iterations: 200 });
        }
    }
    bisect_cdf(&cdf, 0.0, hi, prob)
}

/// Bisects a monotone CDF on `[lo, hi]` for the point where it equals
/// `prob`. The bracket is assumed valid on entry.
fn bisect_cdf<F>(cdf: &F, mut lo: f64, mut hi: f64, prob: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> Result<f64, NumericsError>,
{
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-12 * hi.max(1.0) {
            return Ok(mid);
        }
        if cdf(mid)? < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Quantile anchors computed independently with 30-digit arithmetic.
    #[test]
    fn chi2_inverse_matches_reference_values() {
        assert_abs_diff_eq!(chi2_inverse(1, 0.95).unwrap(), 3.841_458_820_694_126, epsilon = 1e-7);
        assert_abs_diff_eq!(chi2_inverse(2, 0.95).unwrap(), 5.991_464_547_107_982, epsilon = 1e-7);
        assert_abs_diff_eq!(chi2_inverse(5, 0.9).unwrap(), 9.236_356_899_781_118_5, epsilon = 1e-7);
        assert_abs_diff_eq!(chi2_inverse(12, 0.95).unwrap(), 21.026_069_817_483_065, epsilon = 1e-7);
        // χ²(2) has CDF 1 - e^{-x/2}: quantile of 1 - e^{-1} is exactly 2.
        let p = 1.0 - (-1.0f64).exp();
        assert_abs_diff_eq!(chi2_inverse(2, p).unwrap(), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn chi2_inverse_is_monotone_in_prob() {
        for df in [1usize, 3, 7, 20] {
            let lo = chi2_inverse(df, 0.5).unwrap();
            let hi = chi2_inverse(df, 0.95).unwrap();
            assert!(lo < hi, "df={df}");
        }
    }

    #[test]
    fn chi2_inverse_round_trips_through_the_cdf() {
        for &(df, p) in &[(1usize, 0.95), (4, 0.6), (9, 0.99), (40, 0.1)] {
            let x = chi2_inverse(df, p).unwrap();
            let back = reg_inc_gamma_lower(df as f64 / 2.0, x / 2.0).unwrap();
            assert_abs_diff_eq!(back, p, epsilon = 1e-6);
        }
    }

    #[test]
    fn t_inverse_matches_reference_values() {
        assert_abs_diff_eq!(t_inverse(1, 0.975).unwrap(), 12.706_204_736_174_705, epsilon = 1e-6);
        assert_abs_diff_eq!(t_inverse(2, 0.975).unwrap(), 4.302_652_729_749_464, epsilon = 1e-7);
        assert_abs_diff_eq!(t_inverse(5, 0.975).unwrap(), 2.570_581_835_636_315_5, epsilon = 1e-7);
        assert_abs_diff_eq!(t_inverse(10, 0.95).unwrap(), 1.812_461_122_811_676_4, epsilon = 1e-7);
        assert_abs_diff_eq!(t_inverse(30, 0.975).unwrap(), 2.042_272_456_301_238_3, epsilon = 1e-7);
        assert_abs_diff_eq!(t_inverse(7, 0.995).unwrap(), 3.499_483_297_350_494, epsilon = 1e-7);
    }

    #[test]
    fn t_inverse_symmetry_and_normal_limit() {
        assert_eq!(t_inverse(9, 0.5).unwrap(), 0.0);
        let up = t_inverse(6, 0.9).unwrap();
        let down = t_inverse(6, 0.1).unwrap();
        assert_abs_diff_eq!(up, -down, epsilon = 1e-10);
        // Large df approaches the standard normal quantile 1.95996.
        assert_abs_diff_eq!(t_inverse(1000, 0.975).unwrap(), 1.96, epsilon = 0.01);
    }

    #[test]
    fn quantiles_reject_bad_domains() {
        assert!(chi2_inverse(0, 0.5).is_err());
        assert!(chi2_inverse(3, 0.0).is_err());
        assert!(chi2_inverse(3, 1.0).is_err());
        assert!(t_inverse(0, 0.5).is_err());
        assert!(t_inverse(3, -0.2).is_err());
    }

    #[test]
    fn perfect_linear_fit_gives_zero_width_intervals() {
        // y = 2t observed exactly; residuals vanish at theta = 2.
        let ts: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
        let resid = |p: &[f64]| -> Vec<f64> {
            ts.iter().zip(&ys).map(|(t, y)| y - p[0] * t).collect()
        };
        let cis = asymptotic_ci(resid, &[2.0], ts.len(), 0.95).unwrap();
        assert_eq!(cis.len(), 1);
        assert_eq!(cis[0].lower, 2.0);
        assert_eq!(cis[0].upper, 2.0);
    }

    #[test]
    fn linear_fit_interval_matches_the_textbook_formula() {
        // One-parameter regression through the origin with known noise:
        // the asymptotic interval equals the exact t interval
        // theta_hat ± t(n-1, .975) · s / sqrt(Σ t²).
        let ts: Vec<f64> = (1..=8).map(|i| i as f64).collect();
        let noise = [0.3, -0.2, 0.5, -0.4, 0.1, 0.2, -0.3, -0.1];
        let theta = 1.7;
        let ys: Vec<f64> = ts.iter().zip(&noise).map(|(t, e)| theta * t + e).collect();
        // Closed-form least squares estimate.
        let stt: f64 = ts.iter().map(|t| t * t).sum();
        let sty: f64 = ts.iter().zip(&ys).map(|(t, y)| t * y).sum();
        let est = sty / stt;
        let resid = |p: &[f64]| -> Vec<f64> {
            ts.iter().zip(&ys).map(|(t, y)| y - p[0] * t).collect()
        };
        let sse: f64 = resid(&[est]).iter().map(|r| r * r).sum();
        let s2 = sse / (ts.len() - 1) as f64;
        let expect_hw = t_inverse(ts.len() - 1, 0.975).unwrap() * (s2 / stt).sqrt();

        let cis = asymptotic_ci(resid, &[est], ts.len(), 0.95).unwrap();
        assert_abs_diff_eq!(cis[0].upper - cis[0].estimate, expect_hw, epsilon = 1e-7);
        assert_abs_diff_eq!(cis[0].estimate - cis[0].lower, expect_hw, epsilon = 1e-7);
    }

    #[test]
    fn singular_jacobian_yields_unbounded_intervals() {
        // Second parameter never enters the residuals.
        let resid = |p: &[f64]| -> Vec<f64> {
            (1..=6).map(|i| i as f64 - p[0] + 0.0 * p[1] + 0.05 * (i as f64).sin()).collect()
        };
        let cis = asymptotic_ci(resid, &[1.0, 5.0], 6, 0.95).unwrap();
        assert!(cis[1].is_unbounded());
    }

    #[test]
    fn asymptotic_ci_requires_spare_observations() {
        let resid = |p: &[f64]| vec![p[0] - 1.0, p[1] + 1.0];
        assert!(matches!(
            asymptotic_ci(resid, &[0.0, 0.0], 2, 0.95),
            Err(NumericsError::InsufficientObservations { .. })
        ));
    }

    #[test]
    fn interval_serde_handles_infinite_bounds() {
        let ci = ConfidenceInterval::unbounded(4.2, 0.95);
        let json = serde_json::to_string(&ci).unwrap();
        assert!(json.contains("\"-inf\"") && json.contains("\"inf\""));
        let back: ConfidenceInterval = serde_json::from_str(&json).unwrap();
        assert!(back.is_unbounded());
        assert_eq!(back.estimate, 4.2);

        let finite = ConfidenceInterval { estimate: 1.0, lower: 0.5, upper: 1.5, level: 0.95 };
        let json = serde_json::to_string(&finite).unwrap();
        let back: ConfidenceInterval = serde_json::from_str(&json).unwrap();
        assert_eq!(back, finite);
    }
}
