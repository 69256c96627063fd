//! Special functions: the gamma function and the regularized incomplete
//! gamma and beta functions.
//!
//! Accuracy targets: `gamma_fn` is good to ~1e-12 relative over
//! `[0.1, 170]`; `reg_inc_gamma_lower` to ~1e-10 absolute. Both are
//! verified in tests against independently computed reference values.

use super::NumericsError;

/// Lanczos approximation, g = 7, nine coefficients (Godfrey's tabulation).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_SPECIAL_ITER: usize = 10_000;

/// Lanczos series part, valid for `x >= 0.5`.
fn lanczos_sum(z: f64) -> f64 {
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// Gamma function Γ(x) for `x > 0`.
///
/// Overflow (Γ(x) beyond `f64`, roughly x > 171.6) is reported as an error
/// rather than returned as infinity.
pub fn gamma_fn(x: f64) -> Result<f64, NumericsError> {
    if x.is_nan() || x <= 0.0 {
        return Err(NumericsError::Domain(format!("gamma_fn requires x > 0, got {x}")));
    }
    // Upper limit of the f64 range for Γ; beyond this the result is +inf.
    if x > 171.63 {
        return Err(NumericsError::Overflow(format!("gamma_fn({x}) exceeds f64 range")));
    }
    if x < 0.5 {
        // Recurrence Γ(x) = Γ(x + 1) / x keeps the Lanczos evaluation in
        // its accurate region.
        return Ok(gamma_positive(x + 1.0) / x);
    }
    Ok(gamma_positive(x))
}

/// Lanczos gamma for `x >= 0.5`.
///
/// The power/exponential factor is computed as a square of half-exponent
/// terms so intermediate values stay inside the `f64` range for every `x`
/// whose Γ(x) itself is representable.
fn gamma_positive(x: f64) -> f64 {
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    let half = t.powf((z + 0.5) / 2.0) * (-t / 2.0).exp();
    (2.0 * std::f64::consts::PI).sqrt() * lanczos_sum(z) * half * half
}

/// Natural log of Γ(x) for `x > 0`. Never overflows for positive input.
pub fn ln_gamma(x: f64) -> Result<f64, NumericsError> {
    if x.is_nan() || x <= 0.0 {
        return Err(NumericsError::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_raw(x))
}

/// `ln_gamma` without the domain check, for internal callers that have
/// already established `x > 0`.
pub(crate) fn ln_gamma_raw(x: f64) -> f64 {
    if x < 0.5 {
        return ln_gamma_raw(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + lanczos_sum(z).ln() + (z + 0.5) * t.ln() - t
}

/// Regularized lower incomplete gamma function P(a, x).
///
/// P(a, 0) = 0 and P(a, x) → 1 as x → ∞. Uses the standard split: a power
/// series for `x < a + 1`, and a Lentz continued fraction for the upper
/// tail otherwise.
pub fn reg_inc_gamma_lower(a: f64, x: f64) -> Result<f64, NumericsError> {
    if a.is_nan() || a <= 0.0 {
        return Err(NumericsError::Domain(format!("reg_inc_gamma_lower requires a > 0, got a={a}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(NumericsError::Domain(format!("reg_inc_gamma_lower requires x >= 0, got x={x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // Common prefactor x^a e^{-x} / Γ(a), kept in log space: for the
    // parameter ranges the fits produce it is bounded but its pieces
    // individually overflow.
    let ln_pre = a * x.ln() - x - ln_gamma_raw(a);

    if x < a + 1.0 {
        // P(a,x) = pre · Σ_{n≥0} x^n / (a (a+1) … (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..=MAX_SPECIAL_ITER {
            term *= x / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                return Ok((ln_pre.exp() * sum).min(1.0));
            }
        }
        Err(NumericsError::NoConvergence { what: "incomplete gamma series", iterations: MAX_SPECIAL_ITER })
    } else {
        // Q(a,x) = pre · CF, evaluated with the modified Lentz algorithm.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_SPECIAL_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                let q = ln_pre.exp() * h;
                return Ok((1.0 - q).clamp(0.0, 1.0));
            }
        }
        Err(NumericsError::NoConvergence { what: "incomplete gamma continued fraction", iterations: MAX_SPECIAL_ITER })
    }
}

/// Regularized incomplete beta function I_x(a, b) for `a, b > 0` and
/// `x ∈ [0, 1]`. Internal: only the Student-t CDF needs it.
pub(crate) fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&x));
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma_raw(a + b) - ln_gamma_raw(a) - ln_gamma_raw(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges quickly for x below the split
    // point; otherwise use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Modified Lentz continued fraction for the incomplete beta.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        // Even step.
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Reference values computed independently with 30-digit arithmetic.
    const GAMMA_ANCHORS: &[(f64, f64)] = &[
        (0.1, 9.513_507_698_668_731_8),
        (0.5, 1.772_453_850_905_516_0),
        (1.0, 1.0),
        (2.5, 1.329_340_388_179_137_0),
        (6.0, 120.0),
        (10.3, 716_430.689_062_375_2),
        (50.5, 4.290_462_912_351_959_8e63),
        (100.25, 2.948_466_281_838_769_97e156),
        (170.0, 4.269_068_009_004_705_3e304),
    ];

    const P_ANCHORS: &[(f64, f64, f64)] = &[
        (2.0, 1.0, 0.264_241_117_657_115_36),
        (6.141, 5.141, 0.385_561_619_203_161_14),
        (29.64, 28.64, 0.450_523_779_908_152_52),
        (0.5, 0.3, 0.561_421_973_919_000_14),
        (10.0, 12.0, 0.757_607_838_329_487_65),
        (3.3, 0.7, 0.020_513_378_677_122_70),
        (100.0, 95.0, 0.317_356_811_169_800_0),
    ];

    #[test]
    fn gamma_matches_reference_values() {
        for &(x, want) in GAMMA_ANCHORS {
            let got = gamma_fn(x).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn gamma_recurrence_holds() {
        let mut x = 0.5;
        while x <= 20.5 {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
            x += 1.0;
        }
    }

    #[test]
    fn gamma_rejects_non_positive_and_overflow() {
        assert!(matches!(gamma_fn(0.0), Err(NumericsError::Domain(_))));
        assert!(matches!(gamma_fn(-1.5), Err(NumericsError::Domain(_))));
        assert!(matches!(gamma_fn(f64::NAN), Err(NumericsError::Domain(_))));
        assert!(matches!(gamma_fn(172.0), Err(NumericsError::Overflow(_))));
        // 171 is still representable.
        assert!(gamma_fn(171.0).unwrap().is_finite());
    }

    #[test]
    fn ln_gamma_agrees_with_gamma_log() {
        for &(x, want) in GAMMA_ANCHORS {
            assert_relative_eq!(ln_gamma(x).unwrap(), want.ln(), max_relative = 1e-12, epsilon = 1e-12);
        }
        // And far beyond the gamma overflow point.
        let big = ln_gamma(1_000.0).unwrap();
        assert_relative_eq!(big, 5_905.220_423_209_181_2, max_relative = 1e-11);
    }

    #[test]
    fn reg_inc_gamma_matches_reference_values() {
        for &(a, x, want) in P_ANCHORS {
            let got = reg_inc_gamma_lower(a, x).unwrap();
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn reg_inc_gamma_limits() {
        assert_eq!(reg_inc_gamma_lower(3.7, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(reg_inc_gamma_lower(3.7, 500.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(reg_inc_gamma_lower(0.0, 1.0), Err(NumericsError::Domain(_))));
        assert!(matches!(reg_inc_gamma_lower(2.0, -0.1), Err(NumericsError::Domain(_))));
    }

    #[test]
    fn reg_inc_gamma_monotone_in_x_and_a() {
        // Non-decreasing in x at fixed a.
        let a = 2.7;
        let mut prev = 0.0;
        for i in 0..=60 {
            let x = i as f64 * 0.25;
            let p = reg_inc_gamma_lower(a, x).unwrap();
            assert!(p >= prev - 1e-14, "P({a},{x}) decreased");
            prev = p;
        }
        // Non-increasing in a at fixed x > 0.
        let x = 3.0;
        let mut prev = f64::INFINITY;
        for i in 1..=40 {
            let a = i as f64 * 0.35;
            let p = reg_inc_gamma_lower(a, x).unwrap();
            assert!(p <= prev + 1e-14, "P({a},{x}) increased in a");
            prev = p;
        }
    }

    #[test]
    fn reg_inc_beta_symmetry_and_anchor() {
        // I_x(1/2,1/2) = (2/π) asin(√x).
        let x = 0.5f64;
        assert_abs_diff_eq!(reg_inc_beta(0.5, 0.5, x), 0.5, epsilon = 1e-12);
        let x = 0.2f64;
        let want = 2.0 / std::f64::consts::PI * x.sqrt().asin();
        assert_abs_diff_eq!(reg_inc_beta(0.5, 0.5, x), want, epsilon = 1e-12);
        // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
        for &(a, b, x) in &[(2.0, 5.0, 0.3), (7.5, 0.8, 0.65), (3.25, 3.25, 0.11)] {
            let lhs = reg_inc_beta(a, b, x);
            let rhs = 1.0 - reg_inc_beta(b, a, 1.0 - x);
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
        assert_eq!(reg_inc_beta(2.0, 3.0, 0.0), 0.0);
        assert_eq!(reg_inc_beta(2.0, 3.0, 1.0), 1.0);
    }
}
