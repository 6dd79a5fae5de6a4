use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{Activation, Real};

/// A forward-mode dual number: a value plus its tangent along one direction.
///
/// The component type is generic so that tangents can themselves be recorded
/// on a [`Tape`](super::Tape) (`Dual<Var>`), which is how the physics loss
/// differentiates the time derivative of the network with respect to weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T = f64> {
    pub value: T,
    pub derivative: T,
}

impl<T: Real> Dual<T> {
    pub fn new(value: T, derivative: T) -> Self {
        Dual { value, derivative }
    }

    /// The independent variable: tangent 1.
    pub fn variable(value: T) -> Self {
        Dual {
            value,
            derivative: T::constant(1.0),
        }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.value + rhs.value, self.derivative + rhs.derivative)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.value - rhs.value, self.derivative - rhs.derivative)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual::new(
            self.value * rhs.value,
            self.derivative * rhs.value + self.value * rhs.derivative,
        )
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        Dual::new(q, (self.derivative - q * rhs.derivative) / rhs.value)
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.value, -self.derivative)
    }
}

impl<T: Real> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        Dual::new(self.value + rhs, self.derivative)
    }
}

impl<T: Real> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        Dual::new(self.value - rhs, self.derivative)
    }
}

impl<T: Real> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Dual::new(self.value * rhs, self.derivative * rhs)
    }
}

impl<T: Real> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        Dual::new(self.value / rhs, self.derivative / rhs)
    }
}

impl<T: Real> Real for Dual<T> {
    fn constant(value: f64) -> Self {
        Dual::new(T::constant(value), T::constant(0.0))
    }
    fn value(self) -> f64 {
        self.value.value()
    }
    fn sin(self) -> Self {
        Dual::new(self.value.sin(), self.derivative * self.value.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.value.cos(), -(self.derivative * self.value.sin()))
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        Dual::new(e, self.derivative * e)
    }
    fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        Dual::new(r, self.derivative / (r * 2.0))
    }
    fn activation(self, act: Activation, order: usize) -> Self {
        Dual::new(
            self.value.activation(act, order),
            self.derivative * self.value.activation(act, order + 1),
        )
    }
}
