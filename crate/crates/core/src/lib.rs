//! Physics-informed neural networks for ODE initial-value problems, with
//! rigorous a posteriori bounds on the prediction error.
//!
//! The crate is organised bottom-up:
//!
//! - [`autodiff`]: a small feed-forward [`Network`](autodiff::Network) with
//!   forward-mode ([`Dual`](autodiff::Dual)) and reverse-mode
//!   ([`Tape`](autodiff::Tape)) differentiation.
//! - [`ode`]: problem definitions, the two benchmark systems and fixed-step
//!   reference solvers.
//! - [`train`]: collocation sampling, data and physics losses, Adam and L-BFGS.
//! - [`certify`]: residuals, the smoothed residual bound, Lipschitz and
//!   curvature estimation, certified trapezoidal quadrature and the error
//!   certificates themselves.
//! - [`surrogate`]: a cheap learned error indicator trained on certificates.
//!
//! Certificates never consult a reference solution; [`certify::actual_error`]
//! exists for validation only.

pub mod autodiff;
pub mod certify;
pub mod csvfmt;
mod error;
pub mod linalg;
pub mod ode;
pub mod surrogate;
pub mod train;

pub use error::{Error, Result};
