//! Feed-forward networks with forward- and reverse-mode differentiation.

mod activation;
mod dual;
mod network;
mod real;
mod tape;

pub use activation::{Activation, MAX_DERIVATIVE_ORDER};
pub use dual::Dual;
pub use network::{Network, SCHEMA_VERSION};
pub use real::Real;
pub use tape::{Gradient, Tape, Var};
