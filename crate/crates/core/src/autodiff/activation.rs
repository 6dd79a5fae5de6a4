use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    /// Exact erf form, `x * Φ(x)`.
    Gelu,
    Silu,
    Sigmoid,
}

/// Highest derivative order provided analytically.
pub const MAX_DERIVATIVE_ORDER: usize = 3;

fn sigmoid_derivatives(x: f64) -> [f64; 4] {
    let s = 1.0 / (1.0 + (-x).exp());
    let d1 = s * (1.0 - s);
    let d2 = d1 * (1.0 - 2.0 * s);
    let d3 = d1 * (1.0 - 6.0 * s + 6.0 * s * s);
    [s, d1, d2, d3]
}

impl Activation {
    /// The `order`-th derivative of the activation at `x` (order 0 is the value).
    ///
    /// Panics for `order > MAX_DERIVATIVE_ORDER`.
    pub fn derivative(self, order: usize, x: f64) -> f64 {
        assert!(
            order <= MAX_DERIVATIVE_ORDER,
            "activation derivative of order {order} not available"
        );
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                let d1 = 1.0 - t * t;
                [t, d1, -2.0 * t * d1, -2.0 * d1 * (1.0 - 3.0 * t * t)][order]
            }
            Activation::Sigmoid => sigmoid_derivatives(x)[order],
            Activation::Silu => {
                let s = sigmoid_derivatives(x);
                match order {
                    0 => x * s[0],
                    k => k as f64 * s[k - 1] + x * s[k],
                }
            }
            Activation::Gelu => {
                let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
                match order {
                    0 => x * 0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2)),
                    1 => 0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2)) + x * pdf,
                    2 => pdf * (2.0 - x * x),
                    _ => pdf * (x * x * x - 4.0 * x),
                }
            }
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Gelu => "gelu",
            Activation::Silu => "silu",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "gelu" => Ok(Activation::Gelu),
            "silu" => Ok(Activation::Silu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Activation; 4] = [
        Activation::Tanh,
        Activation::Gelu,
        Activation::Silu,
        Activation::Sigmoid,
    ];

    #[test]
    fn defining_identities() {
        for i in -40..=40 {
            let x = i as f64 * 0.15;
            let t = x.tanh();
            assert!((Activation::Tanh.derivative(1, x) - (1.0 - t * t)).abs() <= 1e-12);
            let s = Activation::Sigmoid.eval(x);
            assert!((Activation::Sigmoid.derivative(1, x) - s * (1.0 - s)).abs() <= 1e-12);
            assert!((Activation::Silu.eval(x) - x * s).abs() <= 1e-12);
            let d_silu = s + x * s * (1.0 - s);
            assert!((Activation::Silu.derivative(1, x) - d_silu).abs() <= 1e-12);
            let cdf = 0.5 * (1.0 + libm::erf(x / 2f64.sqrt()));
            assert!((Activation::Gelu.eval(x) - x * cdf).abs() <= 1e-12);
        }
    }

    #[test]
    fn higher_derivatives_match_finite_differences() {
        let h = 1e-5;
        for act in ALL {
            for i in -20..=20 {
                let x = i as f64 * 0.2 + 0.013;
                for order in 1..=MAX_DERIVATIVE_ORDER {
                    let fd = (act.derivative(order - 1, x + h) - act.derivative(order - 1, x - h))
                        / (2.0 * h);
                    let exact = act.derivative(order, x);
                    assert!(
                        (fd - exact).abs() <= 1e-8 * (1.0 + exact.abs()),
                        "{act} order {order} at {x}: {fd} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn tanh_slope_at_origin() {
        assert_eq!(Activation::Tanh.derivative(1, 0.0), 1.0);
    }

    #[test]
    fn parse_names() {
        for act in ALL {
            assert_eq!(act.name().parse::<Activation>().unwrap(), act);
        }
        assert!("relu".parse::<Activation>().is_err());
    }
}
