//! Software-reliability growth models (SRGMs): NHPP mean-value and
//! intensity functions, maximum-likelihood fitting on normalized event
//! times, and a synthetic event generator used as the fitting oracle.
//!
//! Every model is a non-homogeneous Poisson process described by its mean
//! value function μ(t) (expected cumulative failures by t) and intensity
//! λ(t) = dμ/dt.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::ci::{chi2_inverse, ConfidenceInterval};
use crate::numerics::optimize::nelder_mead;
use crate::series::NormalizedTimes;

/// Minimum events for a meaningful two-parameter MLE.
const MIN_EVENTS: usize = 3;

/// Scale-parameter divergence threshold: when the fitted scale exceeds
/// this multiple of the event count the likelihood has no finite maximum
/// (the process degenerates toward a homogeneous one with unbounded fault
/// content).
const DIVERGENCE_FACTOR: f64 = 1e6;

/// Errors raised by SRGM fitting.
#[derive(Debug, Error)]
pub enum SrgmError {
    #[error("need at least {MIN_EVENTS} events, got {0}")]
    TooFewEvents(usize),
    /// The likelihood increases without bound in the scale parameter;
    /// typical for data whose failure intensity is not decreasing. A
    /// finding about the data, not a crash.
    #[error("no finite maximum-likelihood estimate for {kind}: the scale parameter diverges (fitted scale {scale:.3e} for {n_events} events); the failure intensity does not look like reliability growth")]
    NoFiniteMle { kind: SrgmKind, scale: f64, n_events: usize },
    #[error("invalid parameters for {kind}: scale={scale}, rate={rate}; both must be positive and finite")]
    InvalidParams { kind: SrgmKind, scale: f64, rate: f64 },
}

/// The supported NHPP model forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SrgmKind {
    /// Exponential saturating mean value μ(t) = N(1 − e^{−bt})
    /// (Goel–Okumoto form).
    NhppExponential,
    /// Musa's basic execution-time model; mathematically the same
    /// exponential form with β₀ total failures and β₁ the decay rate.
    MusaBasic,
    /// Musa–Okumoto logarithmic Poisson model μ(t) = β₀ ln(1 + β₁ t).
    MusaOkumoto,
    /// Power-law (Crow/AMSAA-style) mean value μ(t) = λ t^β.
    PowerLaw,
}

impl SrgmKind {
    pub const ALL: [SrgmKind; 4] =
        [SrgmKind::NhppExponential, SrgmKind::MusaBasic, SrgmKind::MusaOkumoto, SrgmKind::PowerLaw];

    pub fn name(self) -> &'static str {
        match self {
            SrgmKind::NhppExponential => "nhpp-exponential",
            SrgmKind::MusaBasic => "musa-basic",
            SrgmKind::MusaOkumoto => "musa-okumoto",
            SrgmKind::PowerLaw => "power-law",
        }
    }

    /// Conventional names of the two parameters, (scale, rate).
    pub fn param_names(self) -> (&'static str, &'static str) {
        match self {
            SrgmKind::NhppExponential => ("N", "b"),
            SrgmKind::MusaBasic | SrgmKind::MusaOkumoto => ("beta0", "beta1"),
            SrgmKind::PowerLaw => ("lambda", "beta"),
        }
    }
}

impl std::fmt::Display for SrgmKind {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An SRGM with concrete parameters.
///
/// `scale` and `rate` house (N, b) for the exponential forms, (β₀, β₁)
/// for Musa–Okumoto, and (λ, β) for the power law. Both are strictly
/// positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrgmModel {
    pub kind: SrgmKind,
    pub scale: f64,
    pub rate: f64,
}

impl SrgmModel {
    pub fn new(kind: SrgmKind, scale: f64, rate: f64) -> Result<Self, SrgmError> {
        let ok = scale > 0.0 && scale.is_finite() && rate > 0.0 && rate.is_finite();
        if !ok {
            return Err(SrgmError::InvalidParams { kind, scale, rate });
        }
        Ok(Self { kind, scale, rate })
    }

    /// Expected cumulative failures by time `t` (μ(t)). Zero at t = 0;
    /// non-decreasing; the exponential forms saturate at `scale`, the
    /// logarithmic and power-law forms are unbounded.
    pub fn mean_value(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "mean_value needs t >= 0");
        match self.kind {
            SrgmKind::NhppExponential | SrgmKind::MusaBasic => {
                self.scale * (1.0 - (-self.rate * t).exp())
            }
            SrgmKind::MusaOkumoto => self.scale * (self.rate * t).ln_1p(),
            SrgmKind::PowerLaw => self.scale * t.powf(self.rate),
        }
    }

    /// Failure intensity λ(t) = dμ/dt, analytically.
    ///
    /// Strictly positive for t > 0. At t = 0 the power law is the edge
    /// case: 0 for rate > 1, +∞ for rate < 1.
    pub fn intensity(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "intensity needs t >= 0");
        match self.kind {
            SrgmKind::NhppExponential | SrgmKind::MusaBasic => {
                self.scale * self.rate * (-self.rate * t).exp()
            }
            SrgmKind::MusaOkumoto => self.scale * self.rate / (1.0 + self.rate * t),
            SrgmKind::PowerLaw => self.scale * self.rate * t.powf(self.rate - 1.0),
        }
    }
}

/// A maximum-likelihood SRGM fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SrgmFit {
    pub model: SrgmModel,
    /// NHPP log-likelihood at the optimum: Σ ln λ(tᵢ) − μ(T).
    pub log_likelihood: f64,
    /// 95% intervals for (scale, rate) from the observed-information
    /// matrix; unbounded when the information matrix is not positive
    /// definite.
    pub param_cis: [ConfidenceInterval; 2],
    pub n_events: usize,
    /// End of the observation window on the normalized axis (1.0).
    pub observation_end: f64,
}

/// NHPP log-likelihood of `model` for events `times` observed on
/// `[0, t_end]`.
fn log_likelihood(model: &SrgmModel, times: &[f64], t_end: f64) -> f64 {
    let mut ll = -model.mean_value(t_end);
    for &t in times {
        let lam = model.intensity(t);
        if !lam.is_finite() || lam <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll += lam.ln();
    }
    ll
}

/// Fits `kind` to normalized event times by maximum likelihood.
///
/// Optimization runs over log-parameters (positivity without
/// constraints) with a deterministic Nelder–Mead, polished by a second
/// pass from the first optimum. Parameter intervals come from the
/// observed-information (negative Hessian) matrix at the MLE.
///
/// Returns [`SrgmError::NoFiniteMle`] when the fitted scale runs past
/// `1e6 ×` the event count — the signature of a likelihood with no finite
/// maximum.
pub fn fit_mle(times: &NormalizedTimes, kind: SrgmKind) -> Result<SrgmFit, SrgmError> {
    let n = times.len();
    if n < MIN_EVENTS {
        return Err(SrgmError::TooFewEvents(n));
    }
    let t_end = times.observation_end();
    let n_f = n as f64;

    // Starts chosen so that μ(T) matches the observed count at rate 1.
    let (scale0, rate0): (f64, f64) = match kind {
        SrgmKind::NhppExponential | SrgmKind::MusaBasic => (n_f / (1.0 - (-1.0f64).exp()), 1.0),
        SrgmKind::MusaOkumoto => (n_f / 2.0f64.ln(), 1.0),
        SrgmKind::PowerLaw => (n_f, 1.0),
    };

    let neg_ll = |z: &[f64]| -> f64 {
        let model = SrgmModel { kind, scale: z[0].exp(), rate: z[1].exp() };
        -log_likelihood(&model, &times.times, t_end)
    };

    let start = [scale0.ln(), rate0.ln()];
    let first = nelder_mead(neg_ll, &start, 1e-10, 5_000);
    let polished = nelder_mead(neg_ll, &first.argmin, 1e-10, 5_000);
    let best = if polished.objective_value <= first.objective_value { polished } else { first };

    let scale = best.argmin[0].exp();
    let rate = best.argmin[1].exp();
    if scale > DIVERGENCE_FACTOR * n_f {
        return Err(SrgmError::NoFiniteMle { kind, scale, n_events: n });
    }
    let model = SrgmModel::new(kind, scale, rate)?;
    let ll = -best.objective_value;

    let param_cis = observed_information_cis(&model, &times.times, t_end);

    Ok(SrgmFit { model, log_likelihood: ll, param_cis, n_events: n, observation_end: t_end })
}

/// 95% Wald intervals from the observed-information matrix (finite
///-difference Hessian of −log L in the natural parameters).
fn observed_information_cis(
    model: &SrgmModel,
    times: &[f64],
    t_end: f64,
) -> [ConfidenceInterval; 2] {
    const LEVEL: f64 = 0.95;
    let theta = [model.scale, model.rate];
    let f = |p: &[f64]| -> f64 {
        if p[0] <= 0.0 || p[1] <= 0.0 {
            return f64::INFINITY;
        }
        -log_likelihood(&SrgmModel { kind: model.kind, scale: p[0], rate: p[1] }, times, t_end)
    };

    let h = [
        (theta[0].abs() * 1e-4).max(1e-7),
        (theta[1].abs() * 1e-4).max(1e-7),
    ];
    let f0 = f(&theta);
    let mut hess = [[0.0f64; 2]; 2];
    for i in 0..2 {
        let mut up = theta;
        let mut down = theta;
        up[i] += h[i];
        down[i] -= h[i];
        hess[i][i] = (f(&up) - 2.0 * f0 + f(&down)) / (h[i] * h[i]);
    }
    let mut pp = theta;
    let mut pm = theta;
    let mut mp = theta;
    let mut mm = theta;
    pp[0] += h[0];
    pp[1] += h[1];
    pm[0] += h[0];
    pm[1] -= h[1];
    mp[0] -= h[0];
    mp[1] += h[1];
    mm[0] -= h[0];
    mm[1] -= h[1];
    hess[0][1] = (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h[0] * h[1]);
    hess[1][0] = hess[0][1];

    // Invert the 2×2 observed information; a non-positive-definite matrix
    // means the data do not pin the parameters down.
    let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
    if det.is_nan() || det <= 0.0 || hess[0][0] <= 0.0 {
        return [
            ConfidenceInterval::unbounded(theta[0], LEVEL),
            ConfidenceInterval::unbounded(theta[1], LEVEL),
        ];
    }
    let var = [hess[1][1] / det, hess[0][0] / det];
    // Two-sided 95% normal quantile via the chi-square(1) relation.
    let z = chi2_inverse(1, LEVEL).expect("valid quantile arguments").sqrt();

    let ci = |estimate: f64, v: f64| {
        if v.is_finite() && v >= 0.0 {
            let hw = z * v.sqrt();
            ConfidenceInterval { estimate, lower: estimate - hw, upper: estimate + hw, level: LEVEL }
        } else {
            ConfidenceInterval::unbounded(estimate, LEVEL)
        }
    };
    [ci(theta[0], var[0]), ci(theta[1], var[1])]
}

/// Draws one NHPP realization on `[0, horizon]`, reproducible per seed.
///
/// Sampling thins a homogeneous process at the intensity's maximum over
/// the window (the intensity is monotone for every supported kind, so the
/// maximum sits at an endpoint). The power law with rate < 1 has an
/// integrable singularity at 0 that defeats thinning; that case uses
/// exact inversion instead: a Poisson count with mean μ(horizon), then
/// order statistics of the normalized intensity's CDF t = H·u^{1/rate}.
pub fn generate_events(model: &SrgmModel, horizon: f64, seed: u64) -> Vec<f64> {
    if horizon.is_nan() || horizon <= 0.0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if model.kind == SrgmKind::PowerLaw && model.rate < 1.0 {
        let n = crate::numerics::sample_poisson(&mut rng, model.mean_value(horizon));
        let mut times: Vec<f64> = (0..n)
            .map(|_| horizon * rng.gen::<f64>().powf(1.0 / model.rate))
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        return times;
    }

    let lam_max = model.intensity(0.0).max(model.intensity(horizon));
    debug_assert!(lam_max.is_finite() && lam_max > 0.0);
    let mut times = Vec::new();
    let mut t = 0.0f64;
    loop {
        // Exponential waiting time of the majorant process.
        let u: f64 = rng.gen();
        t -= (1.0 - u).ln() / lam_max;
        if t > horizon {
            break;
        }
        let accept: f64 = rng.gen();
        if accept * lam_max <= model.intensity(t) {
            times.push(t);
        }
    }
    times
}
