use std::io::Write;

use serde::{Deserialize, Serialize};

use super::quadrature::{
    estimate_k, remainder_bound, required_subintervals, trapezoid_bound_integral, DEFAULT_K_GRID,
    DEFAULT_K_SAFETY,
};
use super::{estimate_lipschitz, make_delta, mean_residual_norm, MuPolicy, ResidualFn, SmoothDelta};
use crate::autodiff::Network;
use crate::csvfmt::write_rows;
use crate::linalg::{growth_bound, largest_singular_value};
use crate::ode::OdeProblem;
use crate::train::{sample_collocation, CollocationSet};
use crate::{Error, Result};

/// Eigenvector condition numbers above this are treated as defective.
pub const MAX_EIGENVECTOR_CONDITION: f64 = 1e12;
pub const DEFAULT_EPS: f64 = 0.33;
pub const DEFAULT_MAX_SUBINTERVALS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// Lipschitz-based bound for general right-hand sides.
    Nonlinear,
    /// Semigroup bound `β e^{αt}` for `ẋ = A x`.
    Linear,
}

/// Everything a certificate computation needs besides the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub mode: BoundMode,
    /// Target ratio of the quadrature remainder to the expected error.
    pub eps: f64,
    pub mu: f64,
    /// Lipschitz constant of `f` in `x`; required in nonlinear mode and as
    /// the fallback in linear mode.
    pub lipschitz: Option<f64>,
    /// Mean collocation residual norm, used for the a priori expected error.
    pub mean_residual: f64,
    pub k_grid: usize,
    pub k_safety: f64,
    /// Fixed number of trapezoid subintervals instead of the a priori count.
    pub subintervals: Option<usize>,
    pub max_subintervals: usize,
}

impl CertifyConfig {
    pub fn new(mode: BoundMode, mu: f64, lipschitz: Option<f64>, mean_residual: f64) -> Self {
        CertifyConfig {
            mode,
            eps: DEFAULT_EPS,
            mu,
            lipschitz,
            mean_residual,
            k_grid: DEFAULT_K_GRID,
            k_safety: DEFAULT_K_SAFETY,
            subintervals: None,
            max_subintervals: DEFAULT_MAX_SUBINTERVALS,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.mean_residual >= 0.0) {
            return Err(Error::Config("mean residual must be non-negative".into()));
        }
        if self.subintervals == Some(0) {
            return Err(Error::Config("subinterval count must be at least 1".into()));
        }
        if self.max_subintervals == 0 {
            return Err(Error::Config("max_subintervals must be at least 1".into()));
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Config(format!("Lipschitz constant must be positive, got {l}")));
            }
        }
        MuPolicy::Explicit(self.mu).resolve().map(|_| ())
    }
}

/// Choices for deriving a [`CertifyConfig`] from a trained network.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub mode: BoundMode,
    pub eps: f64,
    /// Explicit μ; `None` uses a tenth of the mean residual norm.
    pub mu: Option<f64>,
    /// Explicit Lipschitz constant; `None` samples the Jacobian.
    pub lipschitz: Option<f64>,
    /// Seed of the Lipschitz sampling pass.
    pub lipschitz_seed: u64,
    /// Multiple of the collocation count used for the Lipschitz pass.
    pub lipschitz_density: usize,
    pub k_grid: usize,
    pub k_safety: f64,
    pub subintervals: Option<usize>,
    pub max_subintervals: usize,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            mode: BoundMode::Nonlinear,
            eps: DEFAULT_EPS,
            mu: None,
            lipschitz: None,
            lipschitz_seed: 0,
            lipschitz_density: 2,
            k_grid: DEFAULT_K_GRID,
            k_safety: DEFAULT_K_SAFETY,
            subintervals: None,
            max_subintervals: DEFAULT_MAX_SUBINTERVALS,
        }
    }
}

/// Resolves μ, the mean residual and the Lipschitz constant for `net`.
///
/// The Lipschitz constant is sampled on `lipschitz_density` times as many
/// points as `colloc` holds, drawn with `lipschitz_seed`.
pub fn calibrate(
    net: &Network,
    problem: &OdeProblem,
    colloc: &CollocationSet,
    calibration: &Calibration,
) -> Result<CertifyConfig> {
    let mean_residual = mean_residual_norm(net, problem, colloc)?;
    let mu = match calibration.mu {
        Some(mu) => MuPolicy::Explicit(mu),
        None => MuPolicy::TenthOfMean { mean_residual },
    }
    .resolve()?;
    let lipschitz = match calibration.lipschitz {
        Some(l) => l,
        None => {
            let count = colloc.points.len() * calibration.lipschitz_density.max(1);
            let probe = sample_collocation(problem, count, calibration.lipschitz_seed)?;
            estimate_lipschitz(problem, &probe)?
        }
    };
    let config = CertifyConfig {
        mode: calibration.mode,
        eps: calibration.eps,
        mu,
        lipschitz: Some(lipschitz),
        mean_residual,
        k_grid: calibration.k_grid,
        k_safety: calibration.k_safety,
        subintervals: calibration.subintervals,
        max_subintervals: calibration.max_subintervals,
    };
    config.validate()?;
    Ok(config)
}

/// Constants behind one certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsUsed {
    /// Mode actually applied (linear mode can fall back to nonlinear).
    pub mode: BoundMode,
    pub lipschitz: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub k: f64,
    pub k_grid: usize,
    pub k_safety: f64,
    pub n_subintervals: usize,
    /// True when the a priori count exceeded `max_subintervals`.
    pub subintervals_capped: bool,
    pub mu: f64,
    pub eps: f64,
    pub warning: Option<String>,
}

/// Rigorous upper bound on `‖x(t) − x̂(t)‖` at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub t: f64,
    /// Propagated initial-value error.
    pub e_init: f64,
    /// Trapezoid value of the residual integral.
    pub i_hat: f64,
    /// Quadrature remainder bound.
    pub e_int: f64,
    pub total: f64,
    pub constants: ConstantsUsed,
}

impl Certificate {
    /// Contribution of the residual integral, `i_hat + e_int`.
    pub fn e_pi(&self) -> f64 {
        self.i_hat + self.e_int
    }
}

/// Growth model `‖e(t)‖ ≤ β (e^{rt} ‖e(0)‖ + ∫ e^{r(t−s)} δ(s) ds)`.
#[derive(Debug, Clone, PartialEq)]
struct Growth {
    mode: BoundMode,
    rate: f64,
    beta: f64,
    warning: Option<String>,
}

fn growth_for(problem: &OdeProblem, config: &CertifyConfig) -> Result<Growth> {
    let nonlinear = |warning: Option<String>| -> Result<Growth> {
        let rate = config.lipschitz.ok_or_else(|| {
            Error::Config("nonlinear bound needs a Lipschitz constant".into())
        })?;
        Ok(Growth {
            mode: BoundMode::Nonlinear,
            rate,
            beta: 1.0,
            warning,
        })
    };
    match config.mode {
        BoundMode::Nonlinear => nonlinear(None),
        BoundMode::Linear => {
            let a = problem.linear_part().ok_or_else(|| {
                Error::Config(format!("problem '{}' has no linear part", problem.name))
            })?;
            let g = growth_bound(a);
            if !(g.eigenvector_condition <= MAX_EIGENVECTOR_CONDITION) {
                let warning = format!(
                    "eigenvector condition {:e} exceeds {:e}; used the Lipschitz bound",
                    g.eigenvector_condition, MAX_EIGENVECTOR_CONDITION
                );
                return nonlinear(Some(warning)).or_else(|_| {
                    // A linear right-hand side has Lipschitz constant ‖A‖₂.
                    Ok(Growth {
                        mode: BoundMode::Nonlinear,
                        rate: largest_singular_value(a).max(f64::MIN_POSITIVE),
                        beta: 1.0,
                        warning: Some(format!(
                            "eigenvector condition {:e} exceeds {:e}; used the Lipschitz bound with ‖A‖₂",
                            g.eigenvector_condition, MAX_EIGENVECTOR_CONDITION
                        )),
                    })
                });
            }
            Ok(Growth {
                mode: BoundMode::Linear,
                rate: g.alpha,
                beta: g.beta,
                warning: None,
            })
        }
    }
}

/// `K` for `s ↦ e^{−rs} δ(s)` on `[0, horizon]`.
///
/// Without smoothing (μ = 0) a residual that passes through zero gives `δ`
/// a kink, and finite differences would not bound the curvature. This is
/// detected by checking whether the segment between consecutive residual
/// samples passes (numerically) through the origin.
pub fn estimate_k_for(
    delta: &SmoothDelta<'_>,
    rate: f64,
    horizon: f64,
    grid_points: usize,
    safety: f64,
) -> Result<f64> {
    if delta.mu() == 0.0 && horizon > 0.0 {
        let n = grid_points.max(10);
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|i| delta.residual().eval_unchecked(horizon * i as f64 / (n - 1) as f64))
            .collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let max = samples.iter().map(|v| norm(v)).fold(0.0, f64::max);
        if max > 0.0 {
            let tiny = 1e-12 * max;
            for w in samples.windows(2) {
                if segment_distance_to_origin(&w[0], &w[1]) <= tiny {
                    return Err(Error::DegenerateSmoothing);
                }
            }
        }
    }
    estimate_k(|s| delta.eval(s), rate, horizon, grid_points, safety)
}

/// Distance from the origin to the segment `[a, b]`.
fn segment_distance_to_origin(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let dd: f64 = d.iter().map(|x| x * x).sum();
    let tau = if dd > 0.0 {
        (-a.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>() / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    a.iter()
        .zip(&d)
        .map(|(x, y)| (x + tau * y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Certificate machinery for a single trajectory `(x0, u)`.
///
/// `K` depends only on the trajectory and the estimation horizon
/// `[0, max(t_end, t)]`, so it is estimated once per horizon and shared
/// between query times. The subinterval count is the larger of the a
/// priori counts at `t` and at the horizon end; the horizon count usually
/// dominates, which keeps `n` fixed along the trajectory and the bound
/// smooth in `t`.
pub struct TrajectoryCertifier<'a> {
    problem: &'a OdeProblem,
    delta: SmoothDelta<'a>,
    config: CertifyConfig,
    growth: Growth,
    initial_error: f64,
    /// `(horizon, K, a priori count at the horizon end)`.
    horizon_cache: Option<(f64, f64, usize)>,
}

impl<'a> TrajectoryCertifier<'a> {
    pub fn new(
        net: &'a Network,
        problem: &'a OdeProblem,
        x0: &[f64],
        u: &[f64],
        config: &CertifyConfig,
    ) -> Result<Self> {
        config.validate()?;
        let residual = ResidualFn::new(net, problem, x0, u)?;
        let x_hat0 = residual.prediction(0.0);
        let initial_error = x0
            .iter()
            .zip(&x_hat0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let delta = make_delta(residual, MuPolicy::Explicit(config.mu))?;
        let growth = growth_for(problem, config)?;
        Ok(TrajectoryCertifier {
            problem,
            delta,
            config: config.clone(),
            growth,
            initial_error,
            horizon_cache: None,
        })
    }

    /// `‖x0 − x̂(0)‖`.
    pub fn initial_error(&self) -> f64 {
        self.initial_error
    }

    pub fn delta(&self) -> &SmoothDelta<'a> {
        &self.delta
    }

    fn required(&self, t: f64, k: f64) -> Result<usize> {
        required_subintervals(
            t,
            self.initial_error,
            self.growth.rate,
            self.growth.beta,
            k,
            self.config.mean_residual,
            self.config.eps,
        )
    }

    fn horizon_constants(&mut self, horizon: f64) -> Result<(f64, usize)> {
        if let Some((h, k, n)) = self.horizon_cache {
            if h == horizon {
                return Ok((k, n));
            }
        }
        let k = estimate_k_for(
            &self.delta,
            self.growth.rate,
            horizon,
            self.config.k_grid,
            self.config.k_safety,
        )?;
        let n = match self.config.subintervals {
            Some(n) => n,
            None => self.required(horizon, k)?,
        };
        self.horizon_cache = Some((horizon, k, n));
        Ok((k, n))
    }

    /// Certificate at `t ≥ 0`. Times past the horizon are computed the same
    /// way; callers flag them.
    pub fn certify(&mut self, t: f64) -> Result<Certificate> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("query time must be finite and >= 0, got {t}")));
        }
        let Growth {
            mode,
            rate,
            beta,
            ref warning,
        } = self.growth;
        let warning = warning.clone();
        let (k, n_horizon) = self.horizon_constants(self.problem.t_end.max(t))?;
        let (n, capped) = match self.config.subintervals {
            Some(n) => (n, false),
            None => {
                let n = self.required(t, k)?.max(n_horizon);
                if n > self.config.max_subintervals {
                    (self.config.max_subintervals, true)
                } else {
                    (n, false)
                }
            }
        };
        let (i_hat, _) = trapezoid_bound_integral(|s| self.delta.eval(s), rate, t, n, k)?;
        let e_init = beta * (rate * t).exp() * self.initial_error;
        let i_hat = beta * i_hat;
        let e_int = if t == 0.0 { 0.0 } else { beta * remainder_bound(rate, t, n, k) };
        let total = e_init + i_hat + e_int;
        if !total.is_finite() {
            return Err(Error::Domain(format!("certificate at t = {t} is not finite")));
        }
        let linear = mode == BoundMode::Linear;
        Ok(Certificate {
            t,
            e_init,
            i_hat,
            e_int,
            total,
            constants: ConstantsUsed {
                mode,
                lipschitz: if linear { None } else { Some(rate) },
                alpha: linear.then_some(rate),
                beta: linear.then_some(beta),
                k,
                k_grid: self.config.k_grid,
                k_safety: self.config.k_safety,
                n_subintervals: n,
                subintervals_capped: capped,
                mu: self.config.mu,
                eps: self.config.eps,
                warning,
            },
        })
    }
}

fn bound_with_mode(
    net: &Network,
    problem: &OdeProblem,
    x0: &[f64],
    u: &[f64],
    t: f64,
    config: &CertifyConfig,
    mode: BoundMode,
) -> Result<Certificate> {
    if !problem.contains_time(t) {
        return Err(Error::Domain(format!(
            "t = {t} outside the horizon [0, {}]",
            problem.t_end
        )));
    }
    let config = CertifyConfig {
        mode,
        ..config.clone()
    };
    TrajectoryCertifier::new(net, problem, x0, u, &config)?.certify(t)
}

/// Lipschitz-based certificate
/// `e^{Lt} ‖x0 − x̂(0)‖ + ∫₀ᵗ e^{L(t−s)} δ(s) ds`.
pub fn bound_nonlinear(
    net: &Network,
    problem: &OdeProblem,
    x0: &[f64],
    u: &[f64],
    t: f64,
    config: &CertifyConfig,
) -> Result<Certificate> {
    bound_with_mode(net, problem, x0, u, t, config, BoundMode::Nonlinear)
}

/// Certificate for `ẋ = A x` using the spectral abscissa `α` of `A`:
/// `β (e^{αt} ‖x0 − x̂(0)‖ + ∫₀ᵗ e^{α(t−s)} δ(s) ds)`.
///
/// Falls back to [`bound_nonlinear`] with a warning in the constants when
/// the eigenvector matrix of `A` is too ill-conditioned.
pub fn bound_linear(
    net: &Network,
    problem: &OdeProblem,
    x0: &[f64],
    u: &[f64],
    t: f64,
    config: &CertifyConfig,
) -> Result<Certificate> {
    bound_with_mode(net, problem, x0, u, t, config, BoundMode::Linear)
}

/// One row of a certificate export.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateRow {
    pub certificate: Certificate,
    pub actual_error: Option<f64>,
    /// Set when the query lies outside the trained domain.
    pub out_of_domain: bool,
}

/// Header and rows `t,e_init,i_hat,e_int,total[,actual_error][,flag]`.
///
/// The `actual_error` column appears when every row has one; the `flag`
/// column appears when some row is out of domain and holds 1 there.
pub fn certificate_table(rows: &[CertificateRow]) -> (Vec<String>, Vec<Vec<f64>>) {
    let with_actual = !rows.is_empty() && rows.iter().all(|r| r.actual_error.is_some());
    let with_flag = rows.iter().any(|r| r.out_of_domain);
    let mut header: Vec<String> = ["t", "e_init", "i_hat", "e_int", "total"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if with_actual {
        header.push("actual_error".into());
    }
    if with_flag {
        header.push("flag".into());
    }
    let data = rows
        .iter()
        .map(|r| {
            let c = &r.certificate;
            let mut row = vec![c.t, c.e_init, c.i_hat, c.e_int, c.total];
            if with_actual {
                row.push(r.actual_error.unwrap_or(f64::NAN));
            }
            if with_flag {
                row.push(if r.out_of_domain { 1.0 } else { 0.0 });
            }
            row
        })
        .collect();
    (header, data)
}

/// Writes the [`certificate_table`] as CSV.
pub fn write_certificates_csv<W: Write>(w: W, rows: &[CertificateRow]) -> Result<()> {
    let (header, data) = certificate_table(rows);
    write_rows(w, &header, &data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::ode::{decay_1d, linear};

    /// Network with constant output `b` for a scalar problem without
    /// control.
    fn constant_net(b: f64) -> Network {
        Network::from_parts(
            &[1, 1],
            vec![vec![0.0]],
            vec![vec![b]],
            crate::autodiff::Activation::Tanh,
        )
        .unwrap()
    }

    fn scalar_problem(a: f64, x0: f64) -> OdeProblem {
        let mut problem = linear(Matrix::from_rows(&[vec![a]]), 2.0, vec![(x0, x0)]).unwrap();
        problem.vary_initial = false;
        problem
    }

    #[test]
    fn exact_start_and_zero_residual_gives_zero() {
        let problem = scalar_problem(0.0, 0.7);
        let net = constant_net(0.7);
        let config = CertifyConfig::new(BoundMode::Nonlinear, 0.0, Some(2.0), 0.0);
        let c = bound_nonlinear(&net, &problem, &[0.7], &[], 1.3, &config).unwrap();
        assert_eq!(c.total, 0.0);
        assert_eq!(c.constants.n_subintervals, 1);
    }

    #[test]
    fn pure_initial_error_grows_with_lipschitz() {
        let problem = scalar_problem(-2.0, 0.1);
        let net = constant_net(0.0);
        let config = CertifyConfig::new(BoundMode::Nonlinear, 0.0, Some(2.0), 0.0);
        let c = bound_nonlinear(&net, &problem, &[0.1], &[], 1.0, &config).unwrap();
        let expected = 0.1 * 2f64.exp();
        assert!((c.total - expected).abs() < 1e-15);
        assert!((c.total - 0.7389).abs() < 1e-4);
        assert_eq!(c.i_hat + c.e_int, 0.0);
    }

    #[test]
    fn identity_semigroup() {
        let problem = scalar_problem(0.0, 1.0);
        let net = constant_net(0.25);
        let config = CertifyConfig::new(BoundMode::Linear, 0.0, None, 0.0);
        for t in [0.0, 0.5, 2.0] {
            let c = bound_linear(&net, &problem, &[1.0], &[], t, &config).unwrap();
            assert_eq!(c.constants.alpha, Some(0.0));
            assert_eq!(c.constants.beta, Some(1.0));
            assert!((c.total - 0.75).abs() < 1e-15);
        }
    }

    #[test]
    fn decaying_semigroup_with_constant_delta() {
        // A constant network b on ẋ = −2x has residual 2b, so δ is the
        // constant sqrt(4b² + μ²).
        let problem = scalar_problem(-2.0, 2.0);
        let b = 1.5;
        let mu = 0.1;
        let c_delta = (4.0 * b * b + mu * mu as f64).sqrt();
        let net = constant_net(b);
        let config = CertifyConfig::new(BoundMode::Linear, mu, Some(2.0), 0.05);
        for t in [0.25, 1.0, 2.0] {
            let cert = bound_linear(&net, &problem, &[2.0], &[], t, &config).unwrap();
            let decay = (-2.0 * t).exp();
            let closed = decay * 0.5 + c_delta * (1.0 - decay) / 2.0;
            assert!((cert.e_init - decay * 0.5).abs() < 1e-15);
            assert!(cert.total >= closed - 1e-12);
            assert!(cert.total - closed <= 2.0 * cert.e_int + 1e-12, "{cert:?}");
            assert!((cert.i_hat - c_delta * (1.0 - decay) / 2.0).abs() <= cert.e_int);
        }
    }

    #[test]
    fn decay_constants() {
        let problem = decay_1d();
        let net = constant_net(1.0);
        let config = CertifyConfig::new(BoundMode::Linear, 0.1, Some(2.0), 0.1);
        let c = bound_linear(&net, &problem, &[2.0], &[], 1.0, &config).unwrap();
        assert_eq!(c.constants.alpha, Some(-2.0));
        assert_eq!(c.constants.beta, Some(1.0));
        assert_eq!(c.constants.mode, BoundMode::Linear);
        let n = bound_nonlinear(&net, &problem, &[2.0], &[], 1.0, &config).unwrap();
        assert!(c.total <= n.total);
    }

    #[test]
    fn defective_matrix_falls_back() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        let mut problem = linear(a, 1.0, vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        problem.vary_initial = false;
        let net = Network::zeros(&[1, 2], crate::autodiff::Activation::Tanh).unwrap();
        let config = CertifyConfig::new(BoundMode::Linear, 0.01, Some(1.0), 0.01);
        let c = bound_linear(&net, &problem, &[0.0, 1.0], &[], 0.5, &config).unwrap();
        assert_eq!(c.constants.mode, BoundMode::Nonlinear);
        assert!(c.constants.warning.is_some());
    }

    #[test]
    fn components_add_up_and_are_non_negative() {
        let problem = decay_1d();
        let net = Network::glorot_uniform(&[1, 4, 1], crate::autodiff::Activation::Tanh, 5).unwrap();
        let config = CertifyConfig::new(BoundMode::Nonlinear, 0.05, Some(2.0), 0.5);
        let mut certifier = TrajectoryCertifier::new(&net, &problem, &[2.0], &[], &config).unwrap();
        let mut last_init = 0.0;
        for i in 0..=20 {
            let c = certifier.certify(0.1 * i as f64).unwrap();
            assert!(c.e_init >= 0.0 && c.i_hat >= 0.0 && c.e_int >= 0.0);
            assert_eq!(c.total, c.e_init + c.i_hat + c.e_int);
            assert!(c.e_init >= last_init);
            last_init = c.e_init;
        }
    }

    #[test]
    fn subinterval_count_covers_the_horizon_end() {
        let problem = decay_1d();
        let net = Network::glorot_uniform(&[1, 4, 1], crate::autodiff::Activation::Tanh, 5).unwrap();
        let config = CertifyConfig::new(BoundMode::Nonlinear, 0.05, Some(2.0), 0.5);
        let mut certifier = TrajectoryCertifier::new(&net, &problem, &[2.0], &[], &config).unwrap();
        let end = certifier.certify(2.0).unwrap();
        let k = end.constants.k;
        let e0 = certifier.initial_error();
        for i in 1..20 {
            let t = 0.1 * i as f64;
            let c = certifier.certify(t).unwrap();
            let own = required_subintervals(t, e0, 2.0, 1.0, k, 0.5, config.eps).unwrap();
            assert_eq!(c.constants.n_subintervals, own.max(end.constants.n_subintervals));
        }
    }

    #[test]
    fn query_outside_horizon_is_rejected() {
        let problem = decay_1d();
        let net = constant_net(2.0);
        let config = CertifyConfig::new(BoundMode::Linear, 0.1, Some(2.0), 0.1);
        assert!(matches!(
            bound_linear(&net, &problem, &[2.0], &[], 2.5, &config),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn unsmoothed_vanishing_residual_is_degenerate() {
        // x̂(t) = t − 2 on ẋ = −x gives R(t) = t − 1, which vanishes at t = 1.
        let problem = scalar_problem(-1.0, 0.0);
        let net = Network::from_parts(
            &[1, 1],
            vec![vec![1.0]],
            vec![vec![-2.0]],
            crate::autodiff::Activation::Tanh,
        )
        .unwrap();
        let config = CertifyConfig::new(BoundMode::Nonlinear, 0.0, Some(1.0), 0.1);
        assert!(matches!(
            bound_nonlinear(&net, &problem, &[0.0], &[], 1.0, &config),
            Err(Error::DegenerateSmoothing)
        ));
    }

    #[test]
    fn csv_columns() {
        let problem = decay_1d();
        let net = constant_net(2.0);
        let config = CertifyConfig::new(BoundMode::Linear, 0.1, Some(2.0), 0.1);
        let c = bound_linear(&net, &problem, &[2.0], &[], 1.0, &config).unwrap();
        let rows = vec![
            CertificateRow {
                certificate: c.clone(),
                actual_error: Some(0.1),
                out_of_domain: false,
            },
            CertificateRow {
                certificate: c,
                actual_error: Some(0.2),
                out_of_domain: true,
            },
        ];
        let mut buf = Vec::new();
        write_certificates_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,e_init,i_hat,e_int,total,actual_error,flag\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
