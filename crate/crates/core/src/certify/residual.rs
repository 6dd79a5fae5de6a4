use crate::autodiff::{Network, Real};
use crate::ode::OdeProblem;
use crate::train::CollocationSet;
use crate::{Error, Result};

/// `t ↦ d/dt φ̂(t, x0) − f(t, φ̂(t, x0), u)` for one trajectory of the network.
///
/// The time derivative is taken by forward-mode differentiation along the
/// time input.
#[derive(Debug, Clone)]
pub struct ResidualFn<'a> {
    net: &'a Network,
    problem: &'a OdeProblem,
    x0: Vec<f64>,
    u: Vec<f64>,
}

impl<'a> ResidualFn<'a> {
    pub fn new(net: &'a Network, problem: &'a OdeProblem, x0: &[f64], u: &[f64]) -> Result<Self> {
        problem.check_state(x0, u)?;
        if net.n_inputs() != problem.network_input_dim() {
            return Err(Error::InputShape {
                expected: problem.network_input_dim(),
                got: net.n_inputs(),
            });
        }
        if net.n_outputs() != problem.dim() {
            return Err(Error::Config(format!(
                "network has {} outputs, problem has dimension {}",
                net.n_outputs(),
                problem.dim()
            )));
        }
        Ok(ResidualFn {
            net,
            problem,
            x0: x0.to_vec(),
            u: u.to_vec(),
        })
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn problem(&self) -> &OdeProblem {
        self.problem
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Network prediction `x̂(t)`.
    pub fn prediction(&self, t: f64) -> Vec<f64> {
        let input = self.problem.network_input(t, &self.x0, &self.u);
        self.net.forward(&input).expect("input layout checked in constructor")
    }

    /// Residual at `t`; errors when `t` is outside the horizon.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        if !self.problem.contains_time(t) {
            return Err(Error::Domain(format!(
                "t = {t} outside the horizon [0, {}]",
                self.problem.t_end
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    /// Residual at `t` without the horizon check (the network is smooth
    /// everywhere; used for out-of-domain queries that are flagged upstream).
    pub fn eval_unchecked(&self, t: f64) -> Vec<f64> {
        let input = self.problem.network_input(t, &self.x0, &self.u);
        let (x_hat, dx_hat) = self
            .net
            .forward_tangent(&input, 0)
            .expect("input layout checked in constructor");
        let f = self.problem.rhs_f64(t, &x_hat, &self.u);
        dx_hat.iter().zip(&f).map(|(d, fi)| d - fi).collect()
    }

    pub fn norm_unchecked(&self, t: f64) -> f64 {
        euclidean_norm(&self.eval_unchecked(t))
    }
}

pub(crate) fn euclidean_norm<S: Real>(v: &[S]) -> f64 {
    v.iter().map(|x| x.value() * x.value()).sum::<f64>().sqrt()
}

/// Residual of the network for the trajectory starting at `x0` under control `u`.
pub fn residual(net: &Network, problem: &OdeProblem, x0: &[f64], u: &[f64], t: f64) -> Result<Vec<f64>> {
    ResidualFn::new(net, problem, x0, u)?.eval(t)
}

/// Mean residual norm over the collocation points, each with its own `x0`, `u`.
pub fn mean_residual_norm(net: &Network, problem: &OdeProblem, colloc: &CollocationSet) -> Result<f64> {
    if colloc.points.is_empty() {
        return Err(Error::Config("collocation set is empty".into()));
    }
    let mut sum = 0.0;
    for p in &colloc.points {
        sum += euclidean_norm(&residual(net, problem, &p.x0, &p.u, p.t)?);
    }
    Ok(sum / colloc.points.len() as f64)
}
