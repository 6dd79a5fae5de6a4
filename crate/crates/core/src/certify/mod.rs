//! A posteriori error certificates for network predictions.
//!
//! The bounds follow from a Grönwall-type argument on the error
//! `e = x − x̂`, whose derivative is `f(x) − f(x̂) − R(t)`. The residual norm
//! is replaced by the smooth majorant `δ`, and the resulting integral is
//! evaluated by a trapezoidal rule with a rigorous remainder.

mod bound;
mod delta;
mod lipschitz;
mod quadrature;
mod reference;
mod residual;

pub use bound::{
    bound_linear, bound_nonlinear, calibrate, certificate_table, estimate_k_for, write_certificates_csv, BoundMode,
    Calibration, Certificate, CertificateRow, CertifyConfig, ConstantsUsed, TrajectoryCertifier,
    DEFAULT_EPS, DEFAULT_MAX_SUBINTERVALS, MAX_EIGENVECTOR_CONDITION,
};
pub use delta::{make_delta, smooth_norm, MuPolicy, SmoothDelta};
pub use lipschitz::estimate_lipschitz;
pub use quadrature::{
    estimate_k, expected_ml_error, remainder_bound, required_subintervals, subinterval_count,
    trapezoid_bound_integral, DEFAULT_K_GRID, DEFAULT_K_SAFETY,
};
pub use reference::{actual_error, REFERENCE_STEP};
pub use residual::{mean_residual_norm, residual, ResidualFn};
