//! Certified composite trapezoidal rule for `∫₀ᵗ e^{r(t−s)} δ(s) ds`.
//!
//! With `g(s) = e^{−rs} δ(s)` and `|g''| ≤ K` on `[0, t]`, the trapezoidal
//! approximation with `n` subintervals is within
//! `max(1, e^{rt}) K t³ / (12 n²)` of the integral. The growth rate `r` is
//! the Lipschitz constant in the nonlinear bound and the spectral abscissa in
//! the linear one.

use crate::{Error, Result};

/// Safety factor applied to the sampled curvature maximum.
pub const DEFAULT_K_SAFETY: f64 = 1.5;
/// Default number of grid points for the curvature estimate.
pub const DEFAULT_K_GRID: usize = 1000;

/// Estimates `K ≥ max |d²/ds² (e^{−rs} δ(s))|` on `[0, t_end]`.
///
/// The second derivative is sampled by finite differences with step
/// `t_end / (10 · grid_points)` on a uniform grid (one-sided at the ends) and
/// the maximum is multiplied by `safety`.
pub fn estimate_k<F: Fn(f64) -> f64>(
    delta: F,
    rate: f64,
    t_end: f64,
    grid_points: usize,
    safety: f64,
) -> Result<f64> {
    if grid_points < 10 {
        return Err(Error::Config(format!(
            "K estimation needs at least 10 grid points, got {grid_points}"
        )));
    }
    if !(t_end > 0.0) {
        return Err(Error::Config(format!("K estimation needs t_end > 0, got {t_end}")));
    }
    if !(safety >= 1.0) {
        return Err(Error::Config(format!("K safety factor must be >= 1, got {safety}")));
    }
    let g = |s: f64| (-rate * s).exp() * delta(s);
    let h = t_end / (10.0 * grid_points as f64);
    let mut max: f64 = 0.0;
    for i in 0..grid_points {
        let s = t_end * i as f64 / (grid_points - 1) as f64;
        let second = if i == 0 {
            (g(s) - 2.0 * g(s + h) + g(s + 2.0 * h)) / (h * h)
        } else if i == grid_points - 1 {
            (g(s) - 2.0 * g(s - h) + g(s - 2.0 * h)) / (h * h)
        } else {
            (g(s + h) - 2.0 * g(s) + g(s - h)) / (h * h)
        };
        if !second.is_finite() {
            return Err(Error::DegenerateSmoothing);
        }
        max = max.max(second.abs());
    }
    Ok(safety * max)
}

/// Composite trapezoidal value `Î_n` and its remainder bound `E_Int`.
pub fn trapezoid_bound_integral<F: Fn(f64) -> f64>(
    delta: F,
    rate: f64,
    t: f64,
    n: usize,
    k: f64,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Config("trapezoidal rule needs n >= 1".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("integration end must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok((0.0, 0.0));
    }
    let weighted = |i: usize| {
        let s = t * i as f64 / n as f64;
        (rate * (t - s)).exp() * delta(s)
    };
    let mut sum = 0.5 * (weighted(0) + weighted(n));
    for i in 1..n {
        sum += weighted(i);
    }
    let i_hat = t / n as f64 * sum;
    Ok((i_hat, remainder_bound(rate, t, n, k)))
}

/// `max(1, e^{rt}) K t³ / (12 n²)`.
pub fn remainder_bound(rate: f64, t: f64, n: usize, k: f64) -> f64 {
    (rate * t).exp().max(1.0) * k * t.powi(3) / (12.0 * (n as f64).powi(2))
}

/// `∫₀ᵗ e^{r(t−s)} ds`.
fn growth_integral(rate: f64, t: f64) -> f64 {
    if rate == 0.0 {
        t
    } else {
        (rate * t).exp_m1() / rate
    }
}

/// A priori expected ML error
/// `β (e^{rt} ‖x0 − x̂(0)‖ + ∫₀ᵗ e^{r(t−s)} ds · mean_residual)`.
pub fn expected_ml_error(t: f64, initial_error: f64, rate: f64, beta: f64, mean_residual: f64) -> f64 {
    beta * ((rate * t).exp() * initial_error + growth_integral(rate, t) * mean_residual)
}

/// Subintervals needed so that `E_Int ≤ ε · E_ML^exp` with Lipschitz
/// constant `lipschitz`.
pub fn subinterval_count(
    t: f64,
    initial_error: f64,
    lipschitz: f64,
    k: f64,
    mean_residual: f64,
    eps: f64,
) -> Result<usize> {
    if !(lipschitz > 0.0) {
        return Err(Error::Config(format!("Lipschitz constant must be positive, got {lipschitz}")));
    }
    required_subintervals(t, initial_error, lipschitz, 1.0, k, mean_residual, eps)
}

/// [`subinterval_count`] for any growth rate and prefactor `β`, using the
/// `max(1, e^{rt})` remainder prefactor.
pub fn required_subintervals(
    t: f64,
    initial_error: f64,
    rate: f64,
    beta: f64,
    k: f64,
    mean_residual: f64,
    eps: f64,
) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    if k == 0.0 || t == 0.0 {
        return Ok(1);
    }
    let expected = expected_ml_error(t, initial_error, rate, beta, mean_residual);
    if !(expected > 0.0) {
        return Err(Error::UnboundedSubintervals { k });
    }
    let ratio = beta * (rate * t).exp().max(1.0) * k * t.powi(3) / (12.0 * expected * eps);
    let n = ratio.sqrt().ceil();
    Ok(if n >= usize::MAX as f64 { usize::MAX } else { (n as usize).max(1) })
}
