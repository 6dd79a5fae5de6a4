use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Activation;

/// Scalar arithmetic shared by `f64`, [`Dual`](super::Dual) and
/// [`Var`](super::Var), so that networks and right-hand sides can be written
/// once and differentiated in either mode.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// A value that carries no derivative information.
    fn constant(value: f64) -> Self;

    /// The primal value.
    fn value(self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;

    /// The `order`-th derivative of `act` evaluated at `self`.
    fn activation(self, act: Activation, order: usize) -> Self;
}

impl Real for f64 {
    fn constant(value: f64) -> Self {
        value
    }
    fn value(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn activation(self, act: Activation, order: usize) -> Self {
        act.derivative(order, self)
    }
}
