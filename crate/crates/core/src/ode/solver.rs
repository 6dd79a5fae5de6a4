use std::io::Write;

use super::OdeProblem;
use crate::csvfmt::write_rows;
use crate::{Error, Result};

/// Fixed-step integration scheme for reference trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ForwardEuler,
    Rk4,
}

/// Where a trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Producer {
    ReferenceSolver,
    Pinn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One row per time.
    pub states: Vec<Vec<f64>>,
    pub produced_by: Producer,
}

impl Trajectory {
    /// Writes `t,x1,...,xn[,u]`; the control column is emitted when `u` is
    /// non-empty (one column per control component).
    pub fn write_csv<W: Write>(&self, w: W, u: &[f64]) -> Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        match u.len() {
            0 => {}
            1 => header.push("u".into()),
            m => header.extend((1..=m).map(|i| format!("u{i}"))),
        }
        let rows: Vec<Vec<f64>> = self
            .times
            .iter()
            .zip(&self.states)
            .map(|(&t, x)| {
                let mut row = vec![t];
                row.extend_from_slice(x);
                row.extend_from_slice(u);
                row
            })
            .collect();
        write_rows(w, &header, &rows)
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

fn step(problem: &OdeProblem, method: Method, t: f64, x: &[f64], u: &[f64], h: f64) -> Vec<f64> {
    match method {
        Method::ForwardEuler => axpy(x, h, &problem.rhs_f64(t, x, u)),
        Method::Rk4 => {
            let k1 = problem.rhs_f64(t, x, u);
            let k2 = problem.rhs_f64(t + 0.5 * h, &axpy(x, 0.5 * h, &k1), u);
            let k3 = problem.rhs_f64(t + 0.5 * h, &axpy(x, 0.5 * h, &k2), u);
            let k4 = problem.rhs_f64(t + h, &axpy(x, h, &k3), u);
            x.iter()
                .enumerate()
                .map(|(i, xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    }
}

/// Integrates from `x0` at `t_grid[0] = 0` and reports the state at every
/// grid time. Between consecutive grid times the interval is split into the
/// fewest equal steps no longer than `max_step`.
pub fn solve_reference(
    problem: &OdeProblem,
    x0: &[f64],
    u: &[f64],
    t_grid: &[f64],
    method: Method,
    max_step: f64,
) -> Result<Trajectory> {
    problem.check_state(x0, u)?;
    if t_grid.first() != Some(&0.0) {
        return Err(Error::Config("time grid must start at 0".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("time grid must be strictly increasing".into()));
    }
    if !(max_step > 0.0) {
        return Err(Error::Config("max_step must be positive".into()));
    }
    let mut states = Vec::with_capacity(t_grid.len());
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = ((span / max_step) - 1e-9).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for k in 0..steps {
            let t = w[0] + k as f64 * h;
            x = step(problem, method, t, &x, u, h);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::BlowUp { time: t + h });
            }
        }
        states.push(x.clone());
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        produced_by: Producer::ReferenceSolver,
    })
}

/// `count` equally spaced times on `[0, t_end]` including both ends.
pub fn uniform_grid(t_end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| t_end * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::ode::{decay_1d, inverted_pendulum_with, linear, PendulumParams};

    #[test]
    fn zero_dynamics_stay_constant() {
        let p = linear(Matrix::zeros(2, 2), 1.0, vec![(0.0, 1.0); 2]).unwrap();
        let traj = solve_reference(&p, &[0.3, -0.4], &[], &uniform_grid(1.0, 11), Method::Rk4, 0.01)
            .unwrap();
        assert!(traj.states.iter().all(|s| s == &vec![0.3, -0.4]));
    }

    #[test]
    fn single_euler_step() {
        let traj = solve_reference(&decay_1d(), &[2.0], &[], &[0.0, 0.01], Method::ForwardEuler, 0.01)
            .unwrap();
        assert_eq!(traj.states[1][0], 2.0 * (1.0 - 0.02));
    }

    #[test]
    fn degenerate_grid_returns_initial_state() {
        let traj = solve_reference(&decay_1d(), &[2.0], &[], &[0.0], Method::Rk4, 0.1).unwrap();
        assert_eq!(traj.states, vec![vec![2.0]]);
    }

    #[test]
    fn rk4_matches_closed_form() {
        let grid = uniform_grid(2.0, 201);
        let traj = solve_reference(&decay_1d(), &[2.0], &[], &grid, Method::Rk4, 1e-3).unwrap();
        let max_dev = grid
            .iter()
            .zip(&traj.states)
            .map(|(t, x)| (x[0] - 2.0 * (-2.0 * t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(max_dev <= 1e-9, "{max_dev}");
    }

    #[test]
    fn rk4_observed_order() {
        let err = |h: f64| {
            let traj = solve_reference(&decay_1d(), &[2.0], &[], &[0.0, 2.0], Method::Rk4, h).unwrap();
            (traj.states[1][0] - 2.0 * (-4.0f64).exp()).abs()
        };
        let slopes: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| (err(h) / err(h / 2.0)).log2())
            .collect();
        assert!(slopes.iter().all(|&s| s >= 3.9), "{slopes:?}");
    }

    #[test]
    fn frictionless_pendulum_conserves_energy() {
        let params = PendulumParams {
            friction: 0.0,
            ..PendulumParams::default()
        };
        let p = inverted_pendulum_with(params);
        let x0 = [2.5, 1.0, 0.0, 0.0];
        let traj = solve_reference(&p, &x0, &[0.0], &uniform_grid(1.0, 11), Method::Rk4, 1e-4).unwrap();
        let e0 = params.energy(&x0);
        for s in &traj.states {
            assert!(((params.energy(s) - e0) / e0).abs() <= 1e-6);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let p = linear(Matrix::from_rows(&[vec![1.0e4]]), 1.0, vec![(1.0, 1.0)]).unwrap();
        let err = solve_reference(&p, &[1.0], &[], &[0.0, 1.0], Method::ForwardEuler, 1e-3);
        assert!(matches!(err, Err(Error::BlowUp { .. })));
    }

    #[test]
    fn invalid_grids() {
        let p = decay_1d();
        assert!(solve_reference(&p, &[2.0], &[], &[0.1, 0.2], Method::Rk4, 0.1).is_err());
        assert!(solve_reference(&p, &[2.0], &[], &[0.0, 0.2, 0.2], Method::Rk4, 0.1).is_err());
    }

    #[test]
    fn csv_header_and_precision() {
        let traj = solve_reference(&decay_1d(), &[2.0], &[], &[0.0, 0.5], Method::Rk4, 0.1).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x1\n"));
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, &[1.5]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,x1,u\n"));
    }
}
