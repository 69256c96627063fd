//! Numerical building blocks shared by the model-fitting modules: special
//! functions, a derivative-free minimizer, and confidence-interval
//! machinery.
//!
//! Everything here is a pure function of its inputs; there is no global
//! state and all routines are safe to call concurrently.

pub mod ci;
pub mod optimize;
pub mod special;

use rand::Rng;
use thiserror::Error;

/// Errors raised by the numerics layer.
#[derive(Debug, Error)]
pub enum NumericsError {
    /// An argument fell outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// The result is not representable in an `f64`.
    #[error("overflow: {0}")]
    Overflow(String),
    /// An iterative scheme failed to converge within its iteration budget.
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    /// Too few observations for the requested degrees of freedom.
    #[error("need more than {n_params} observations, got {n_obs}")]
    InsufficientObservations { n_obs: usize, n_params: usize },
}

/// Draws a Poisson variate with the given mean.
///
/// Uses Knuth's product-of-uniforms method on chunks of the mean no larger
/// than 60, summing the chunk draws; Poisson additivity keeps the result
/// exact while avoiding underflow of `exp(-lambda)` for large means.
pub(crate) fn sample_poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    debug_assert!(!lambda.is_nan(), "Poisson mean must not be NaN");
    if lambda.is_nan() || lambda <= 0.0 {
        return 0;
    }
    assert!(lambda.is_finite(), "Poisson mean must be finite, got {lambda}");
    let mut remaining = lambda;
    let mut total = 0u64;
    while remaining > 0.0 {
        let chunk = remaining.min(60.0);
        remaining -= chunk;
        let limit = (-chunk).exp();
        let mut product = 1.0f64;
        loop {
            product *= rng.gen::<f64>();
            if product <= limit {
                break;
            }
            total += 1;
        }
    }
    total
}
