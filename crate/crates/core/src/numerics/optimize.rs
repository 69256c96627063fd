//! Derivative-free minimization: a deterministic Nelder–Mead simplex with
//! an optional seeded multi-start wrapper for flat or multimodal
//! objectives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of a minimization run.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    /// Best parameter vector found.
    pub argmin: Vec<f64>,
    /// Objective value at `argmin`.
    pub objective_value: f64,
    /// Iterations actually performed.
    pub iterations: usize,
    /// True when the simplex objective spread fell below the tolerance;
    /// false when the iteration budget ran out first (the best point so
    /// far is still returned).
    pub converged: bool,
}

/// Standard Nelder–Mead coefficients.
const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `objective` from `start` with the Nelder–Mead simplex method.
///
/// Convergence is declared when the spread `f(worst) - f(best)` across the
/// simplex drops below `tolerance` AND the simplex extent drops below
/// √tolerance — a wide simplex straddling a minimum can match values to
/// machine precision while its midpoint is still far from the optimum, so
/// the value test alone would stop early. The run is fully deterministic
/// for identical inputs. Non-finite objective values are treated as +∞ so
/// the simplex walks away from invalid regions instead of corrupting the
/// ordering.
pub fn nelder_mead<F>(objective: F, start: &[f64], tolerance: f64, max_iter: usize) -> MinimizeResult
where
    F: Fn(&[f64]) -> f64,
{
    assert!(!start.is_empty(), "nelder_mead requires at least one parameter");
    let n = start.len();
    let x_tol = tolerance.sqrt();
    let eval = |x: &[f64]| -> f64 {
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // Initial simplex: the start plus one vertex per coordinate, displaced
    // by 5% of the coordinate (or a small absolute step at zero).
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] = if v[i] != 0.0 { v[i] * 1.05 } else { 0.000_25 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;

        // Order vertices best → worst.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("NaN was sanitized"));
        let best = order[0];
        let second_worst = order[n - 1];
        let worst = order[n];

        if values[worst] - values[best] < tolerance && simplex_extent(&simplex, best) < x_tol {
            converged = true;
            break;
        }

        // Centroid of all vertices but the worst.
        let mut centroid = vec![0.0; n];
        for &idx in order.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = along(REFLECT);
        let f_reflected = eval(&reflected);

        if f_reflected < values[best] {
            // Try to go further in the same direction.
            let expanded = along(EXPAND);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }

        // Contract, outside or inside depending on the reflection.
        let contracted = if f_reflected < values[worst] { along(CONTRACT) } else { along(-CONTRACT) };
        let f_contracted = eval(&contracted);
        if f_contracted < values[worst].min(f_reflected) {
            simplex[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }

        // Shrink every vertex toward the best one.
        let best_point = simplex[best].clone();
        for idx in 0..=n {
            if idx == best {
                continue;
            }
            for (x, b) in simplex[idx].iter_mut().zip(&best_point) {
                *x = b + SHRINK * (*x - b);
            }
            values[idx] = eval(&simplex[idx]);
        }
    }

    let (best_idx, &best_value) = values
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("NaN was sanitized"))
        .expect("simplex is non-empty");
    MinimizeResult {
        argmin: simplex[best_idx].clone(),
        objective_value: best_value,
        iterations,
        converged,
    }
}

/// Largest coordinate distance from any vertex to the best vertex.
fn simplex_extent(simplex: &[Vec<f64>], best: usize) -> f64 {
    let mut extent = 0.0f64;
    for vertex in simplex {
        for (x, b) in vertex.iter().zip(&simplex[best]) {
            extent = extent.max((x - b).abs());
        }
    }
    extent
}

/// [`nelder_mead`] plus `restarts` additional runs from jittered copies of
/// `start`, keeping the best result. Jitter is drawn from a seeded ChaCha8
/// stream so the whole procedure stays reproducible.
pub fn nelder_mead_restarts<F>(
    objective: F,
    start: &[f64],
    tolerance: f64,
    max_iter: usize,
    restarts: usize,
    seed: u64,
) -> MinimizeResult
where
    F: Fn(&[f64]) -> f64,
{
    let mut best = nelder_mead(&objective, start, tolerance, max_iter);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let jittered: Vec<f64> = start
            .iter()
            .map(|&x| x + (0.25 * x.abs() + 0.05) * rng.gen_range(-1.0..1.0))
            .collect();
        let candidate = nelder_mead(&objective, &jittered, tolerance, max_iter);
        if candidate.objective_value < best.objective_value {
            best = candidate;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_bowl_converges_to_minimum() {
        let res = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], 1e-12, 1_000);
        assert!(res.converged);
        assert_abs_diff_eq!(res.argmin[0], 3.0, epsilon = 1e-6);
    }

    #[test]
    fn rosenbrock_converges_to_unit_point() {
        let rosenbrock =
            |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let res = nelder_mead(rosenbrock, &[-1.2, 1.0], 1e-14, 5_000);
        assert!(res.converged, "did not converge in {} iterations", res.iterations);
        assert_abs_diff_eq!(res.argmin[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(res.argmin[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn iteration_budget_returns_best_so_far() {
        let res = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], 1e-12, 1);
        assert!(!res.converged);
        assert_eq!(res.iterations, 1);
        assert!(res.objective_value.is_finite());
    }

    #[test]
    fn argmin_is_invariant_to_objective_scaling() {
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2);
        let a = nelder_mead(f, &[10.0, 10.0], 1e-12, 2_000);
        let b = nelder_mead(|x| 10.0 * f(x), &[10.0, 10.0], 1e-12, 2_000);
        assert!(a.converged && b.converged);
        assert_abs_diff_eq!(a.argmin[0], b.argmin[0], epsilon = 1e-4);
        assert_abs_diff_eq!(a.argmin[1], b.argmin[1], epsilon = 1e-4);
    }

    #[test]
    fn runs_are_deterministic() {
        let f = |x: &[f64]| x[0].sin() + (x[0] / 3.0).powi(2);
        let a = nelder_mead(f, &[2.0], 1e-10, 500);
        let b = nelder_mead(f, &[2.0], 1e-10, 500);
        assert_eq!(a.argmin, b.argmin);
        assert_eq!(a.iterations, b.iterations);

        let c = nelder_mead_restarts(f, &[2.0], 1e-10, 500, 4, 99);
        let d = nelder_mead_restarts(f, &[2.0], 1e-10, 500, 4, 99);
        assert_eq!(c.argmin, d.argmin);
    }

    #[test]
    fn restarts_never_do_worse_than_the_single_run() {
        let f = |x: &[f64]| (3.0 * x[0]).cos() + 0.1 * (x[0] - 5.0).powi(2);
        let plain = nelder_mead(f, &[0.4], 1e-12, 2_000);
        let multi = nelder_mead_restarts(f, &[0.4], 1e-12, 2_000, 30, 7);
        assert!(multi.objective_value <= plain.objective_value + 1e-12);
    }

    #[test]
    fn nan_regions_are_handled_gracefully() {
        // A NaN pocket next to the optimum must not corrupt the ordering:
        // the simplex probes it, reads +inf, and walks back out.
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.2).powi(2) };
        let res = nelder_mead(f, &[0.1], 1e-12, 2_000);
        assert!(res.converged);
        assert_abs_diff_eq!(res.argmin[0], 0.2, epsilon = 1e-4);

        // Starting deep inside the invalid region cannot succeed, but it
        // must fail honestly: no panic, budget spent, not marked converged.
        let res = nelder_mead(f, &[-5.0], 1e-12, 200);
        assert!(!res.converged);
    }
}
