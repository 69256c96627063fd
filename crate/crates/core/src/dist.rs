//! Failure-count distribution models: Weibull- and gamma-family curves
//! fitted to per-bin failure counts by least squares, with peak-location
//! (`tmax`) estimates and the fraction of total failures expected by the
//! peak.
//!
//! The fitted curve is `C · pdf(t)` evaluated at integer bin indices
//! t = 1..=K, where `C` scales the unit-area density up to the observed
//! count volume. An alternative integrated form fits bin masses
//! `C · (F(i) − F(i−1))` instead; see [`FitOptions::integrated`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gof;
use crate::numerics::ci::{asymptotic_ci, ConfidenceInterval};
use crate::numerics::optimize::{nelder_mead, nelder_mead_restarts};
use crate::numerics::special::{gamma_fn, ln_gamma, reg_inc_gamma_lower};
use crate::numerics::NumericsError;
use crate::series::GroupedCounts;

/// Errors raised by distribution fitting and synthesis.
#[derive(Debug, Error)]
pub enum DistError {
    #[error("{family} needs at least {needed} bins ({n_params} parameters + 1), got {n_bins}")]
    TooFewBins { family: DistFamily, n_bins: usize, needed: usize, n_params: usize },
    #[error("all counts are zero; nothing to fit")]
    AllZeroCounts,
    #[error("{family} fit did not converge within {iterations} iterations")]
    FitDiverged { family: DistFamily, iterations: usize },
    #[error("{family} with shape {shape} has no interior mode; tmax is undefined for shape <= 1")]
    UndefinedTmax { family: DistFamily, shape: f64 },
    #[error("invalid parameters for {family}: a={a}, b={b}")]
    InvalidParams { family: DistFamily, a: f64, b: f64 },
    #[error("invalid generator input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The supported density families.
///
/// `Rayleigh` and `SShaped` are the classical one-parameter special
/// cases: a Weibull with shape pinned to 2 and a gamma with shape pinned
/// to 2 respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistFamily {
    Weibull,
    Gamma,
    Rayleigh,
    SShaped,
}

impl DistFamily {
    pub const ALL: [DistFamily; 4] =
        [DistFamily::Weibull, DistFamily::Gamma, DistFamily::Rayleigh, DistFamily::SShaped];

    pub fn name(self) -> &'static str {
        match self {
            DistFamily::Weibull => "weibull",
            DistFamily::Gamma => "gamma",
            DistFamily::Rayleigh => "rayleigh",
            DistFamily::SShaped => "s-shaped",
        }
    }

    /// Free shape/scale parameters, excluding the volume `C`.
    pub fn n_free_params(self) -> usize {
        match self {
            DistFamily::Weibull | DistFamily::Gamma => 2,
            DistFamily::Rayleigh | DistFamily::SShaped => 1,
        }
    }
}

impl std::fmt::Display for DistFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A concrete density with parameters `(a, b)`.
///
/// Conventions follow the reliability literature:
/// * Weibull / Rayleigh: `a` is the scale, `b` the shape;
///   pdf(t) = (b/a)(t/a)^{b−1} e^{−(t/a)^b}.
/// * Gamma / S-shaped: `a` is the shape, `b` the scale;
///   pdf(t) = t^{a−1} e^{−t/b} / (Γ(a) b^a).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistModel {
    pub family: DistFamily,
    pub a: f64,
    pub b: f64,
}

impl DistModel {
    pub fn new(family: DistFamily, a: f64, b: f64) -> Result<Self, DistError> {
        let positive = a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite();
        let pinned_ok = match family {
            DistFamily::Rayleigh => b == 2.0,
            DistFamily::SShaped => a == 2.0,
            _ => true,
        };
        if !positive || !pinned_ok {
            return Err(DistError::InvalidParams { family, a, b });
        }
        Ok(Self { family, a, b })
    }

    /// Rayleigh with scale `a` (Weibull shape pinned to 2).
    pub fn rayleigh(a: f64) -> Result<Self, DistError> {
        Self::new(DistFamily::Rayleigh, a, 2.0)
    }

    /// S-shaped with scale `b` (gamma shape pinned to 2).
    pub fn sshaped(b: f64) -> Result<Self, DistError> {
        Self::new(DistFamily::SShaped, 2.0, b)
    }

    /// The shape parameter regardless of which slot holds it.
    pub fn shape(&self) -> f64 {
        match self.family {
            DistFamily::Weibull | DistFamily::Rayleigh => self.b,
            DistFamily::Gamma | DistFamily::SShaped => self.a,
        }
    }

    /// Probability density at `t`. Zero for t < 0; the t = 0 boundary is
    /// resolved exactly (0, 1/scale, or +∞ depending on the shape).
    /// Evaluated in log space so large shapes cannot overflow
    /// intermediates.
    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self.family {
            DistFamily::Weibull | DistFamily::Rayleigh => {
                let (a, b) = (self.a, self.b);
                if t == 0.0 {
                    return if b > 1.0 {
                        0.0
                    } else if b == 1.0 {
                        1.0 / a
                    } else {
                        f64::INFINITY
                    };
                }
                let z = t / a;
                (b.ln() - a.ln() + (b - 1.0) * z.ln() - z.powf(b)).exp()
            }
            DistFamily::Gamma | DistFamily::SShaped => {
                let (a, b) = (self.a, self.b);
                if t == 0.0 {
                    return if a > 1.0 {
                        0.0
                    } else if a == 1.0 {
                        1.0 / b
                    } else {
                        f64::INFINITY
                    };
                }
                let ln_g = match ln_gamma(a) {
                    Ok(v) => v,
                    Err(_) => return f64::NAN,
                };
                ((a - 1.0) * t.ln() - t / b - a * b.ln() - ln_g).exp()
            }
        }
    }

    /// Cumulative distribution at `t` (0 for t ≤ 0).
    ///
    /// The gamma branch rides on the regularized incomplete gamma; in the
    /// (practically unreachable) event its expansion fails to converge
    /// the result is NaN rather than a silently wrong number.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.family {
            DistFamily::Weibull | DistFamily::Rayleigh => {
                -(-(t / self.a).powf(self.b)).exp_m1()
            }
            DistFamily::Gamma | DistFamily::SShaped => {
                reg_inc_gamma_lower(self.a, t / self.b).unwrap_or(f64::NAN)
            }
        }
    }

    /// Location of the density's interior mode — the estimated time of
    /// peak failure intensity. `None` when the shape is ≤ 1 and the
    /// density is monotone decreasing.
    pub fn tmax(&self) -> Option<f64> {
        match self.family {
            DistFamily::Weibull | DistFamily::Rayleigh => {
                let (a, b) = (self.a, self.b);
                (b > 1.0).then(|| a * ((b - 1.0) / b).powf(1.0 / b))
            }
            DistFamily::Gamma | DistFamily::SShaped => {
                let (a, b) = (self.a, self.b);
                (a > 1.0).then_some(b * (a - 1.0))
            }
        }
    }

    /// Fraction of all failures expected by the peak, `F(tmax)`.
    ///
    /// Depends only on the shape: 1 − e^{−(b−1)/b} for the Weibull branch
    /// and P(a, a−1) for the gamma branch. The classical special cases
    /// fall out: ≈39.35% for Rayleigh, ≈26.42% for the S-shaped curve.
    pub fn fraction_by_tmax(&self) -> Result<f64, DistError> {
        match self.family {
            DistFamily::Weibull | DistFamily::Rayleigh => {
                let b = self.b;
                if b <= 1.0 {
                    return Err(DistError::UndefinedTmax { family: self.family, shape: b });
                }
                Ok(-(-(b - 1.0) / b).exp_m1())
            }
            DistFamily::Gamma | DistFamily::SShaped => {
                let a = self.a;
                if a <= 1.0 {
                    return Err(DistError::UndefinedTmax { family: self.family, shape: a });
                }
                Ok(reg_inc_gamma_lower(a, a - 1.0)?)
            }
        }
    }
}

/// Knobs for [`fit_with`]. The default is a single deterministic run on
/// the point-density form.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    /// Fit bin masses `C · (F(i) − F(i−1))` instead of point densities
    /// `C · pdf(i)`.
    pub integrated: bool,
    /// Extra optimizer starts jittered around the moment-based start;
    /// 0 keeps the single deterministic run.
    pub restarts: usize,
    /// Seed for the restart jitter (ignored when `restarts` is 0).
    pub seed: u64,
}

/// Noise applied by [`generate_counts`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    /// Exact expected counts (fractional values).
    None,
    /// Independent Poisson counts with the model means.
    Poisson,
}

/// A least-squares distribution fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistFit {
    pub model: DistModel,
    /// Volume parameter `C` — the estimated total number of defects —
    /// with its 95% interval.
    pub c: ConfidenceInterval,
    /// Named 95% intervals for the free shape/scale parameters.
    pub param_cis: Vec<(String, ConfidenceInterval)>,
    /// 1-based index of the highest observed count (earliest on ties).
    pub tmax_observed: usize,
    /// Estimated peak location, when the fitted shape admits one.
    pub tmax_estimated: Option<f64>,
    /// Estimated fraction of defects surfaced by the peak.
    pub fraction_by_tmax: Option<f64>,
    pub rmse: f64,
    /// `None` when degrees of freedom or count variance make it
    /// meaningless (K = params + 1, or a flat series).
    pub adj_r_square: Option<f64>,
    /// Magnitude of relative error between observed and estimated
    /// totals, as a fraction.
    pub mre: f64,
    pub sse: f64,
    /// Whether the fit (and its predictions) used the integrated form.
    pub integrated: bool,
}

/// Predicted cumulative failures by time `t` under the fit: `Ĉ · F(t)`.
pub fn predicted_cumulative(fit: &DistFit, t: f64) -> f64 {
    fit.c.estimate * fit.model.cdf(t)
}

/// Per-bin prediction for parameters in natural space.
fn predict_bin(family: DistFamily, params: &[f64], i: usize, integrated: bool) -> f64 {
    let model = model_from_free(family, &params[1..]);
    let c = params[0];
    let t = i as f64;
    if integrated {
        c * (model.cdf(t) - model.cdf(t - 1.0))
    } else {
        c * model.pdf(t)
    }
}

/// Builds the model from free parameters (pinned parameters restored).
fn model_from_free(family: DistFamily, free: &[f64]) -> DistModel {
    match family {
        DistFamily::Weibull | DistFamily::Gamma => {
            DistModel { family, a: free[0], b: free[1] }
        }
        DistFamily::Rayleigh => DistModel { family, a: free[0], b: 2.0 },
        DistFamily::SShaped => DistModel { family, a: 2.0, b: free[0] },
    }
}

/// Sample mean and variance of the bin-index distribution implied by the
/// counts (bin i carries weight counts[i−1]).
fn count_moments(counts: &[f64]) -> (f64, f64) {
    let total: f64 = counts.iter().sum();
    let mean = counts
        .iter()
        .enumerate()
        .map(|(j, &c)| (j + 1) as f64 * c)
        .sum::<f64>()
        / total;
    let var = counts
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let d = (j + 1) as f64 - mean;
            c * d * d
        })
        .sum::<f64>()
        / total;
    (mean, var)
}

/// Solves Γ(1+2/b) / Γ(1+1/b)² − 1 = cv² for the Weibull shape `b` by
/// bisection; the left side is strictly decreasing in b.
fn weibull_shape_from_cv2(cv2: f64) -> Option<f64> {
    if !cv2.is_finite() || cv2 <= 0.0 {
        return None;
    }
    let g = |b: f64| -> Option<f64> {
        let g1 = gamma_fn(1.0 + 1.0 / b).ok()?;
        let g2 = gamma_fn(1.0 + 2.0 / b).ok()?;
        Some(g2 / (g1 * g1) - 1.0 - cv2)
    };
    let (mut lo, mut hi) = (0.1_f64, 50.0_f64);
    if !(g(lo)? > 0.0 && g(hi)? < 0.0) {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Method-of-moments starting values for the free parameters.
fn moment_start(family: DistFamily, counts: &[f64]) -> Vec<f64> {
    let (m, v) = count_moments(counts);
    match family {
        DistFamily::Weibull => {
            let fallback = vec![m.max(1.0), 1.5];
            if v <= 0.0 {
                return fallback;
            }
            match weibull_shape_from_cv2(v / (m * m)) {
                Some(b0) => {
                    let a0 = gamma_fn(1.0 + 1.0 / b0)
                        .map(|g| m / g)
                        .unwrap_or(m)
                        .max(1e-6);
                    vec![a0, b0]
                }
                None => fallback,
            }
        }
        DistFamily::Gamma => {
            if v <= 0.0 {
                return vec![2.0, (m / 2.0).max(1e-6)];
            }
            vec![(m * m / v).max(1e-3), (v / m).max(1e-6)]
        }
        DistFamily::Rayleigh => {
            // Rayleigh mean is a·Γ(1.5).
            let g = gamma_fn(1.5).expect("gamma(1.5) is finite");
            vec![(m / g).max(1e-6)]
        }
        DistFamily::SShaped => {
            // Gamma(2, b) mean is 2b.
            vec![(m / 2.0).max(1e-6)]
        }
    }
}

/// Fits `family` to the counts with default options.
pub fn fit(counts: &GroupedCounts, family: DistFamily) -> Result<DistFit, DistError> {
    fit_with(counts, family, &FitOptions::default())
}

/// Fits `family` to per-bin counts by least squares.
///
/// The optimizer works on the logarithms of `(C, free params)`, keeping
/// everything positive without constraints, from method-of-moments
/// starting values. A polish pass re-runs the optimizer from the first
/// optimum; `opts.restarts` adds seeded jittered starts for multimodal
/// cases. Parameter intervals are asymptotic least-squares intervals in
/// the natural parameters.
pub fn fit_with(
    counts: &GroupedCounts,
    family: DistFamily,
    opts: &FitOptions,
) -> Result<DistFit, DistError> {
    let k = counts.len();
    let n_free = family.n_free_params();
    let n_params = n_free + 1;
    if k < n_params + 1 {
        return Err(DistError::TooFewBins { family, n_bins: k, needed: n_params + 1, n_params });
    }
    let total = counts.total();
    if total <= 0.0 {
        return Err(DistError::AllZeroCounts);
    }
    let y = &counts.counts;

    let integrated = opts.integrated;
    let sse_of = |params: &[f64]| -> f64 {
        let mut sse = 0.0;
        for (j, &obs) in y.iter().enumerate() {
            let r = obs - predict_bin(family, params, j + 1, integrated);
            sse += r * r;
        }
        sse
    };
    let objective = |z: &[f64]| -> f64 {
        let params: Vec<f64> = z.iter().map(|&v| v.exp()).collect();
        if params.iter().any(|p| !p.is_finite()) {
            return f64::INFINITY;
        }
        sse_of(&params)
    };

    let mut start = vec![total];
    start.extend(moment_start(family, y));
    let log_start: Vec<f64> = start.iter().map(|p| p.ln()).collect();

    const TOL: f64 = 1e-12;
    const MAX_ITER: usize = 6_000;
    let base = if opts.restarts > 0 {
        nelder_mead_restarts(objective, &log_start, TOL, MAX_ITER, opts.restarts, opts.seed)
    } else {
        nelder_mead(objective, &log_start, TOL, MAX_ITER)
    };
    let polished = nelder_mead(objective, &base.argmin, TOL, MAX_ITER);
    let best = if polished.objective_value <= base.objective_value { polished } else { base };
    if !best.converged {
        return Err(DistError::FitDiverged { family, iterations: best.iterations });
    }

    let params: Vec<f64> = best.argmin.iter().map(|&v| v.exp()).collect();
    let model = {
        let m = model_from_free(family, &params[1..]);
        // Route through the validating constructor so broken optima
        // (non-finite parameters) surface as errors.
        DistModel::new(family, m.a, m.b)?
    };
    let c_hat = params[0];

    let residual_fn = |p: &[f64]| -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(j, &obs)| obs - predict_bin(family, p, j + 1, integrated))
            .collect()
    };
    let cis = asymptotic_ci(residual_fn, &params, k, 0.95)?;

    let predicted: Vec<f64> = (1..=k).map(|i| predict_bin(family, &params, i, integrated)).collect();
    let rmse = gof::rmse(y, &predicted).expect("lengths match and k > 0");
    let sse = best.objective_value;
    let mre = gof::mre(total, c_hat).expect("total is positive");
    let adj_r_square = gof::adj_r_square(y, &predicted, n_params).ok();

    let free_names: &[&str] = match family {
        DistFamily::Weibull | DistFamily::Gamma => &["a", "b"],
        DistFamily::Rayleigh => &["a"],
        DistFamily::SShaped => &["b"],
    };
    let param_cis = free_names
        .iter()
        .zip(cis[1..].iter())
        .map(|(name, ci)| (name.to_string(), ci.clone()))
        .collect();

    Ok(DistFit {
        model,
        c: cis[0].clone(),
        param_cis,
        tmax_observed: observed_peak_bin(counts),
        tmax_estimated: model.tmax(),
        fraction_by_tmax: model.fraction_by_tmax().ok(),
        rmse,
        adj_r_square,
        mre,
        sse,
        integrated,
    })
}

/// 1-based index of the largest count; the earliest bin wins ties.
pub fn observed_peak_bin(counts: &GroupedCounts) -> usize {
    let mut best = 0usize;
    for (j, &c) in counts.counts.iter().enumerate() {
        if c > counts.counts[best] {
            best = j;
        }
    }
    best + 1
}

/// Synthesizes per-bin counts from `c · pdf(i)` for i = 1..=n_bins,
/// optionally Poisson-noised, reproducibly per seed. The exact variant
/// returns fractional expected counts; round before writing them to CSV.
pub fn generate_counts(
    model: &DistModel,
    c: f64,
    n_bins: usize,
    noise: Noise,
    seed: u64,
) -> Result<GroupedCounts, DistError> {
    if !c.is_finite() || c < 0.0 {
        return Err(DistError::InvalidInput(format!("total count c must be finite and >= 0, got {c}")));
    }
    if n_bins == 0 {
        return Err(DistError::InvalidInput("n_bins must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts: Vec<f64> = (1..=n_bins)
        .map(|i| {
            let mean = c * model.pdf(i as f64);
            match noise {
                Noise::None => mean,
                Noise::Poisson => crate::numerics::sample_poisson(&mut rng, mean) as f64,
            }
        })
        .collect();
    Ok(GroupedCounts::new(None, counts).expect("finite non-negative counts"))
}
