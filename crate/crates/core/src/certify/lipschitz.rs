use crate::linalg::largest_singular_value;
use crate::ode::OdeProblem;
use crate::train::CollocationSet;
use crate::{Error, Result};

/// Largest singular value of `∂f/∂x` over the collocation points.
///
/// This is a sampled estimate: too few points can under-estimate the true
/// Lipschitz constant.
pub fn estimate_lipschitz(problem: &OdeProblem, colloc: &CollocationSet) -> Result<f64> {
    if colloc.points.is_empty() {
        return Err(Error::Config("collocation set is empty".into()));
    }
    let mut best: f64 = 0.0;
    for p in &colloc.points {
        let jac = problem.jacobian_x(p.t, &p.x0, &p.u);
        if !jac.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite Jacobian at t = {}, x = {:?}",
                p.t, p.x0
            )));
        }
        best = best.max(largest_singular_value(&jac));
    }
    Ok(best)
}
