use super::{CollocationSet, DataSet, Eta};
use crate::autodiff::{Network, Tape, Var};
use crate::certify::residual;
use crate::ode::OdeProblem;
use crate::{Error, Result};

/// Points per tape recording; bounds the tape size for large sets.
const CHUNK: usize = 32;

/// Mean of `terms` summed in ascending order, so the result does not depend
/// on the order of the inputs.
fn order_free_mean(mut terms: Vec<f64>) -> f64 {
    let n = terms.len() as f64;
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>() / n
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean squared Euclidean distance between predictions and targets.
pub fn loss_data(net: &Network, problem: &OdeProblem, data: &DataSet) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Config("data set is empty".into()));
    }
    data.validate(problem)?;
    let terms = data
        .records
        .iter()
        .map(|r| {
            let pred = net.forward(&problem.network_input(r.t, &r.x0, &r.u))?;
            Ok(squared_distance(&pred, &r.target))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(order_free_mean(terms))
}

/// Mean of `η(t) ‖R(t)‖²` over the collocation points.
pub fn loss_physics(net: &Network, problem: &OdeProblem, colloc: &CollocationSet, eta: &Eta) -> Result<f64> {
    if colloc.is_empty() {
        return Err(Error::Config("collocation set is empty".into()));
    }
    let terms = colloc
        .points
        .iter()
        .map(|p| {
            let r = residual(net, problem, &p.x0, &p.u, p.t)?;
            Ok(eta.eval(p.t) * r.iter().map(|v| v * v).sum::<f64>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(order_free_mean(terms))
}

/// Loss value split into its weighted parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub data: f64,
    pub physics: f64,
}

impl LossParts {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.data.is_finite() && self.physics.is_finite()
    }
}

/// A differentiable scalar loss over a flat parameter vector.
pub trait Objective {
    fn dimension(&self) -> usize;

    fn value(&self, params: &[f64]) -> Result<LossParts>;

    fn value_and_gradient(&self, params: &[f64]) -> Result<(LossParts, Vec<f64>)>;
}

/// `γ_data · L_data + γ_phys · L_phys` for a network architecture.
///
/// `data` and `physics` in the reported parts are the unweighted losses.
pub struct PinnObjective<'a> {
    net: &'a Network,
    problem: &'a OdeProblem,
    data: &'a DataSet,
    colloc: &'a CollocationSet,
    eta: &'a Eta,
    gamma_data: f64,
    gamma_phys: f64,
}

impl<'a> PinnObjective<'a> {
    /// `net` provides the architecture; its parameters are ignored.
    pub fn new(
        net: &'a Network,
        problem: &'a OdeProblem,
        data: &'a DataSet,
        colloc: &'a CollocationSet,
        eta: &'a Eta,
        gamma_data: f64,
        gamma_phys: f64,
    ) -> Result<Self> {
        if !(gamma_data >= 0.0 && gamma_phys >= 0.0) || !(gamma_data > 0.0 || gamma_phys > 0.0) {
            return Err(Error::Config(format!(
                "loss weights must be non-negative with one positive, got {gamma_data} and {gamma_phys}"
            )));
        }
        if gamma_data > 0.0 && data.is_empty() {
            return Err(Error::Config("data loss is weighted but the data set is empty".into()));
        }
        if gamma_phys > 0.0 && colloc.is_empty() {
            return Err(Error::Config("physics loss is weighted but the collocation set is empty".into()));
        }
        if net.n_inputs() != problem.network_input_dim() {
            return Err(Error::InputShape {
                expected: problem.network_input_dim(),
                got: net.n_inputs(),
            });
        }
        if net.n_outputs() != problem.dim() {
            return Err(Error::InputShape {
                expected: problem.dim(),
                got: net.n_outputs(),
            });
        }
        data.validate(problem)?;
        for p in &colloc.points {
            problem.check_state(&p.x0, &p.u)?;
        }
        eta.validate()?;
        Ok(PinnObjective {
            net,
            problem,
            data,
            colloc,
            eta,
            gamma_data,
            gamma_phys,
        })
    }

    fn parts(&self, data: f64, physics: f64) -> LossParts {
        LossParts {
            total: self.gamma_data * data + self.gamma_phys * physics,
            data,
            physics,
        }
    }
}

impl Objective for PinnObjective<'_> {
    fn dimension(&self) -> usize {
        self.net.parameter_count()
    }

    fn value(&self, params: &[f64]) -> Result<LossParts> {
        let net = self.net.with_parameters(params)?;
        let data = if self.data.is_empty() {
            0.0
        } else {
            loss_data(&net, self.problem, self.data)?
        };
        let physics = if self.colloc.is_empty() {
            0.0
        } else {
            loss_physics(&net, self.problem, self.colloc, self.eta)?
        };
        Ok(self.parts(data, physics))
    }

    fn value_and_gradient(&self, params: &[f64]) -> Result<(LossParts, Vec<f64>)> {
        let net = self.net.with_parameters(params)?;
        let mut gradient = vec![0.0; params.len()];
        let mut tape = Tape::new();
        let mut accumulate = |tape: &Tape, loss: Var<'_>, vars: &[Var<'_>]| -> Result<()> {
            if loss.is_recorded() {
                for (g, d) in gradient.iter_mut().zip(tape.parameter_gradient(vars, loss)?) {
                    *g += d;
                }
            }
            Ok(())
        };

        let mut data_terms = Vec::with_capacity(self.data.len());
        if !self.data.is_empty() {
            let weight = self.gamma_data / self.data.len() as f64;
            for chunk in self.data.records.chunks(CHUNK) {
                {
                    let vars = net.parameter_vars(&tape);
                    let mut loss = Var::constant(0.0);
                    for r in chunk {
                        let input = self.problem.network_input(r.t, &r.x0, &r.u);
                        let (pred, _) = net.forward_on_tape(&tape, &vars, &input, None)?;
                        let mut sq = Var::constant(0.0);
                        for (p, target) in pred.iter().zip(&r.target) {
                            let d = *p - *target;
                            sq = sq + d * d;
                        }
                        data_terms.push(sq.val());
                        loss = loss + sq * weight;
                    }
                    if weight > 0.0 {
                        accumulate(&tape, loss, &vars)?;
                    }
                }
                tape.clear();
            }
        }

        let mut phys_terms = Vec::with_capacity(self.colloc.len());
        if !self.colloc.is_empty() {
            let weight = self.gamma_phys / self.colloc.len() as f64;
            for chunk in self.colloc.points.chunks(CHUNK) {
                {
                    let vars = net.parameter_vars(&tape);
                    let mut loss = Var::constant(0.0);
                    for p in chunk {
                        if !self.problem.contains_time(p.t) {
                            return Err(Error::Domain(format!(
                                "collocation time {} outside the horizon",
                                p.t
                            )));
                        }
                        let input = self.problem.network_input(p.t, &p.x0, &p.u);
                        let (pred, dpred) = net.forward_on_tape(&tape, &vars, &input, Some(0))?;
                        let dpred = dpred.expect("tangent requested");
                        let f = self.problem.rhs(p.t, &pred, &p.u);
                        let mut sq = Var::constant(0.0);
                        for (d, fi) in dpred.iter().zip(&f) {
                            let r = *d - *fi;
                            sq = sq + r * r;
                        }
                        let eta = self.eta.eval(p.t);
                        phys_terms.push(eta * sq.val());
                        loss = loss + sq * (eta * weight);
                    }
                    if weight > 0.0 {
                        accumulate(&tape, loss, &vars)?;
                    }
                }
                tape.clear();
            }
        }

        let data = if data_terms.is_empty() { 0.0 } else { order_free_mean(data_terms) };
        let physics = if phys_terms.is_empty() { 0.0 } else { order_free_mean(phys_terms) };
        Ok((self.parts(data, physics), gradient))
    }
}
