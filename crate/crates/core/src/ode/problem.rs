use crate::autodiff::{Dual, Real};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Physical constants of the pendulum on a cart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    /// Point mass, kg.
    pub mass: f64,
    /// Distance from the pivot to the centre of mass, m.
    pub arm: f64,
    /// Moment of inertia.
    pub inertia: f64,
    /// Friction coefficient, N·m·s.
    pub friction: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            mass: 0.3553,
            arm: 0.42,
            inertia: 0.0361,
            friction: 0.005,
            gravity: 9.81,
        }
    }
}

impl PendulumParams {
    /// `J + m a²`, the effective inertia about the pivot.
    pub fn total_inertia(&self) -> f64 {
        self.inertia + self.mass * self.arm * self.arm
    }

    /// Pendulum-only energy `(J + m a²) φ̇²/2 + m g a cos φ`, conserved
    /// without friction and control (φ = 0 is the upright position).
    pub fn energy(&self, state: &[f64]) -> f64 {
        0.5 * self.total_inertia() * state[1] * state[1]
            + self.mass * self.gravity * self.arm * state[0].cos()
    }
}

/// Right-hand side families. Both are written once over [`Real`] so that the
/// same code runs in plain, forward-mode and reverse-mode arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// `f(t, x) = A x`.
    Linear(Matrix),
    /// State `(φ, φ̇, s, ṡ)`, control `u` = cart acceleration.
    Pendulum(PendulumParams),
}

/// An initial-value problem `ẋ = f(t, x, u)`, `x(0) = x0` on `[0, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeProblem {
    pub name: String,
    pub dynamics: Dynamics,
    /// End of the time horizon; the horizon starts at 0.
    pub t_end: f64,
    /// Per-coordinate sampling interval for initial values.
    pub x0_box: Vec<(f64, f64)>,
    /// Per-coordinate sampling interval for the constant control; empty when
    /// the problem has no control input.
    pub u_box: Vec<(f64, f64)>,
    /// Whether the network takes the initial value as input. When false the
    /// network learns `t ↦ x(t)` for the single initial value in `x0_box`.
    pub vary_initial: bool,
}

impl OdeProblem {
    pub fn dim(&self) -> usize {
        match &self.dynamics {
            Dynamics::Linear(a) => a.rows(),
            Dynamics::Pendulum(_) => 4,
        }
    }

    pub fn control_dim(&self) -> usize {
        self.u_box.len()
    }

    /// Network input length: `t`, then `x0` when varied, then `u`.
    pub fn network_input_dim(&self) -> usize {
        1 + if self.vary_initial { self.dim() } else { 0 } + self.control_dim()
    }

    /// Assembles the network input `(t, x0[, u])` for this problem.
    pub fn network_input(&self, t: f64, x0: &[f64], u: &[f64]) -> Vec<f64> {
        let mut input = Vec::with_capacity(self.network_input_dim());
        input.push(t);
        if self.vary_initial {
            input.extend_from_slice(x0);
        }
        input.extend_from_slice(u);
        input
    }

    /// Per-input factors `1 / max(|lo|, |hi|)` over the sampling domain, in
    /// network input order (1 for inputs whose range is `{0}`).
    pub fn input_scales(&self) -> Vec<f64> {
        let scale = |lo: f64, hi: f64| {
            let m = lo.abs().max(hi.abs());
            if m > 0.0 {
                1.0 / m
            } else {
                1.0
            }
        };
        let mut scales = vec![scale(0.0, self.t_end)];
        if self.vary_initial {
            scales.extend(self.x0_box.iter().map(|&(lo, hi)| scale(lo, hi)));
        }
        scales.extend(self.u_box.iter().map(|&(lo, hi)| scale(lo, hi)));
        scales
    }

    /// Validates a state/control pair against the problem dimensions.
    pub fn check_state(&self, x0: &[f64], u: &[f64]) -> Result<()> {
        if x0.len() != self.dim() {
            return Err(Error::InputShape {
                expected: self.dim(),
                got: x0.len(),
            });
        }
        if u.len() != self.control_dim() {
            return Err(Error::InputShape {
                expected: self.control_dim(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// True when `t` lies in the horizon (the end point is accepted).
    pub fn contains_time(&self, t: f64) -> bool {
        (0.0..=self.t_end).contains(&t)
    }

    /// True when `x0` and `u` lie in the sampling boxes.
    pub fn contains_point(&self, x0: &[f64], u: &[f64]) -> bool {
        let inside = |v: &[f64], b: &[(f64, f64)]| {
            v.iter()
                .zip(b)
                .all(|(x, (lo, hi))| *x >= *lo - 1e-12 && *x <= *hi + 1e-12)
        };
        inside(x0, &self.x0_box) && inside(u, &self.u_box)
    }

    pub fn linear_part(&self) -> Option<&Matrix> {
        match &self.dynamics {
            Dynamics::Linear(a) => Some(a),
            Dynamics::Pendulum(_) => None,
        }
    }

    /// `f(t, x, u)` in any [`Real`] arithmetic.
    pub fn rhs<S: Real>(&self, _t: f64, x: &[S], u: &[f64]) -> Vec<S> {
        match &self.dynamics {
            Dynamics::Linear(a) => (0..a.rows())
                .map(|i| {
                    let row = a.row(i);
                    let mut acc = x[0] * row[0];
                    for j in 1..row.len() {
                        acc = acc + x[j] * row[j];
                    }
                    acc
                })
                .collect(),
            Dynamics::Pendulum(p) => {
                let accel = u.first().copied().unwrap_or(0.0);
                let (phi, omega, velocity) = (x[0], x[1], x[3]);
                let ma = p.mass * p.arm;
                let angular = (phi.sin() * (ma * p.gravity) - omega * p.friction
                    + phi.cos() * (ma * accel))
                    / p.total_inertia();
                vec![omega, angular, velocity, S::constant(accel)]
            }
        }
    }

    pub fn rhs_f64(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.rhs(t, x, u)
    }

    /// Analytic `∂f/∂x`.
    pub fn jacobian_x(&self, _t: f64, x: &[f64], u: &[f64]) -> Matrix {
        match &self.dynamics {
            Dynamics::Linear(a) => a.clone(),
            Dynamics::Pendulum(p) => {
                let accel = u.first().copied().unwrap_or(0.0);
                let ma = p.mass * p.arm;
                let jt = p.total_inertia();
                let mut jac = Matrix::zeros(4, 4);
                jac[(0, 1)] = 1.0;
                jac[(1, 0)] = (ma * p.gravity * x[0].cos() - ma * accel * x[0].sin()) / jt;
                jac[(1, 1)] = -p.friction / jt;
                jac[(2, 3)] = 1.0;
                jac
            }
        }
    }

    /// `∂f/∂x` by forward-mode differentiation of [`OdeProblem::rhs`].
    pub fn jacobian_autodiff(&self, t: f64, x: &[f64], u: &[f64]) -> Matrix {
        let n = self.dim();
        let mut jac = Matrix::zeros(n, n);
        for j in 0..n {
            let seeded: Vec<Dual> = x
                .iter()
                .enumerate()
                .map(|(k, &v)| Dual::new(v, if k == j { 1.0 } else { 0.0 }))
                .collect();
            for (i, d) in self.rhs(t, &seeded, u).into_iter().enumerate() {
                jac[(i, j)] = d.derivative;
            }
        }
        jac
    }

    /// Closed-form solution `exp(A t) x0` for linear problems.
    pub fn exact_solution(&self, x0: &[f64], t: f64) -> Option<Vec<f64>> {
        match &self.dynamics {
            Dynamics::Linear(a) if a.rows() == 1 => Some(vec![(a[(0, 0)] * t).exp() * x0[0]]),
            Dynamics::Linear(a) => Some(a.exp_scaled(t).matvec(x0)),
            Dynamics::Pendulum(_) => None,
        }
    }

    /// The fixed initial value used when `vary_initial` is false (the box
    /// midpoints, which coincide with the box for a degenerate box).
    pub fn nominal_initial(&self) -> Vec<f64> {
        self.x0_box.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// `ẋ = −2x`, `x(0) = 2` on `[0, 2]`; the initial value is not varied.
pub fn decay_1d() -> OdeProblem {
    OdeProblem {
        name: "decay1d".into(),
        dynamics: Dynamics::Linear(Matrix::from_rows(&[vec![-2.0]])),
        t_end: 2.0,
        x0_box: vec![(2.0, 2.0)],
        u_box: Vec::new(),
        vary_initial: false,
    }
}

/// Inverted pendulum on a cart with the cart acceleration as control.
///
/// Sampling domain: `t ∈ [0, 0.1]`, `φ ∈ [−π, π]`, `φ̇ ∈ [−6, 6]`,
/// `s ∈ [−1, 1]`, `ṡ ∈ [−3, 3]`, `u ∈ [−15, 15]`.
pub fn inverted_pendulum() -> OdeProblem {
    inverted_pendulum_with(PendulumParams::default())
}

pub fn inverted_pendulum_with(params: PendulumParams) -> OdeProblem {
    use std::f64::consts::PI;
    OdeProblem {
        name: "pendulum".into(),
        dynamics: Dynamics::Pendulum(params),
        t_end: 0.1,
        x0_box: vec![(-PI, PI), (-6.0, 6.0), (-1.0, 1.0), (-3.0, 3.0)],
        u_box: vec![(-15.0, 15.0)],
        vary_initial: true,
    }
}

/// A linear problem `ẋ = A x` with the initial value as network input.
pub fn linear(a: Matrix, t_end: f64, x0_box: Vec<(f64, f64)>) -> Result<OdeProblem> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::Config("linear dynamics need a non-empty square matrix".into()));
    }
    if x0_box.len() != a.rows() {
        return Err(Error::Config("x0 box dimension must match the matrix".into()));
    }
    Ok(OdeProblem {
        name: "linear".into(),
        dynamics: Dynamics::Linear(a),
        t_end,
        x0_box,
        u_box: Vec::new(),
        vary_initial: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn decay_rhs_jacobian_and_solution() {
        let p = decay_1d();
        assert_eq!(p.rhs_f64(0.0, &[2.0], &[]), vec![-4.0]);
        assert_eq!(p.jacobian_x(0.3, &[5.0], &[])[(0, 0)], -2.0);
        let x1 = p.exact_solution(&[2.0], 1.0).unwrap()[0];
        assert!((x1 - 0.27067).abs() < 5e-6);
        assert_eq!(p.network_input_dim(), 1);
        assert_eq!(p.nominal_initial(), vec![2.0]);
        assert_eq!(p.input_scales(), vec![0.5]);
    }

    #[test]
    fn pendulum_hand_evaluations() {
        let p = inverted_pendulum();
        assert_eq!(p.rhs_f64(0.0, &[0.0; 4], &[0.0]), vec![0.0; 4]);

        // φ̈ = m g a / (J + m a²) with m = 0.3553, g = 9.81, a = 0.42, J = 0.0361:
        // m g a = 1.46390706, J + m a² = 0.09877492 → 14.8206...
        let up = p.rhs_f64(0.0, &[FRAC_PI_2, 0.0, 0.0, 0.0], &[0.0]);
        assert!((up[1] - 1.46390706 / 0.09877492).abs() < 1e-6, "{}", up[1]);
        assert!((up[1] - 14.82).abs() < 0.01);

        let f = p.rhs_f64(0.0, &[0.0, 0.0, 0.0, 1.0], &[3.0]);
        let expected = 0.3553 * 0.42 * 3.0 / 0.09877492;
        assert_eq!(f[0], 0.0);
        assert!((f[1] - expected).abs() < 1e-12);
        assert_eq!((f[2], f[3]), (1.0, 3.0));
        assert_eq!(p.network_input_dim(), 6);
        assert_eq!(p.input_scales().len(), 6);
    }

    #[test]
    fn analytic_and_autodiff_jacobians_agree() {
        let p = inverted_pendulum();
        for &(phi, w, u) in &[(0.3, -1.0, 4.0), (-2.5, 5.0, -12.0), (3.1, 0.0, 0.0)] {
            let x = [phi, w, 0.2, -0.7];
            let a = p.jacobian_x(0.0, &x, &[u]);
            let b = p.jacobian_autodiff(0.0, &x, &[u]);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((a[(i, j)] - b[(i, j)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn linear_constructor_validates() {
        assert!(linear(Matrix::zeros(2, 3), 1.0, vec![(0.0, 1.0); 2]).is_err());
        assert!(linear(Matrix::identity(2), 1.0, vec![(0.0, 1.0)]).is_err());
        let p = linear(Matrix::identity(2), 1.0, vec![(0.0, 1.0); 2]).unwrap();
        assert_eq!(p.network_input_dim(), 3);
        assert!(p.check_state(&[1.0], &[]).is_err());
    }
}
