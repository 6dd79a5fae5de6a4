use crate::autodiff::Network;
use crate::ode::{solve_reference, Method, OdeProblem};
use crate::{Error, Result};

/// Largest step of the rk4 reference used for validation.
pub const REFERENCE_STEP: f64 = 1e-4;

/// `‖x(t) − x̂(t)‖` on `t_grid` for validation.
///
/// Uses the closed-form solution when the problem has one and an rk4
/// reference with step at most [`REFERENCE_STEP`] otherwise. The grid must
/// be non-decreasing and non-negative.
pub fn actual_error(
    net: &Network,
    problem: &OdeProblem,
    x0: &[f64],
    u: &[f64],
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    problem.check_state(x0, u)?;
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Config("validation times must be non-negative".into()));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("validation times must be sorted".into()));
    }
    let exact: Vec<Vec<f64>> = match problem.exact_solution(x0, 0.0) {
        Some(_) => t_grid
            .iter()
            .map(|&t| problem.exact_solution(x0, t).expect("closed form available"))
            .collect(),
        None => {
            let mut solver_grid = vec![0.0];
            for &t in t_grid {
                if t > *solver_grid.last().unwrap() {
                    solver_grid.push(t);
                }
            }
            let traj = solve_reference(problem, x0, u, &solver_grid, Method::Rk4, REFERENCE_STEP)?;
            t_grid
                .iter()
                .map(|t| {
                    let i = solver_grid.partition_point(|s| s < t);
                    traj.states[i].clone()
                })
                .collect()
        }
    };
    t_grid
        .iter()
        .zip(&exact)
        .map(|(&t, x)| {
            let x_hat = net.forward(&problem.network_input(t, x0, u))?;
            Ok(x.iter()
                .zip(&x_hat)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt())
        })
        .collect()
}
