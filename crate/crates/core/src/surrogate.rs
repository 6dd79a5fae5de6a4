//! Error-indicator networks that approximate the certified bound.
//!
//! An indicator is cheap to evaluate but carries no guarantee. It is
//! trained on certificate totals with a loss that punishes underestimation
//! more than overestimation, so it tends to wrap the bound from above.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, Network, Tape, Var};
use crate::certify::{CertifyConfig, TrajectoryCertifier};
use crate::csvfmt::{write_rows, Table};
use crate::ode::OdeProblem;
use crate::train::{minimize, sample_collocation, LossParts, Objective, Optimizer};
use crate::{Error, Result};

/// One generated input with its certified bound as target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSample {
    pub t: f64,
    pub x0: Vec<f64>,
    pub u: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateDataset {
    pub samples: Vec<SurrogateSample>,
    pub seed: u64,
}

fn annotate(err: Error, index: usize, s: &SurrogateSample) -> Error {
    let at = format!("at generated point {index} (t = {}, x0 = {:?}, u = {:?})", s.t, s.x0, s.u);
    match err {
        Error::Config(m) => Error::Config(format!("{m} {at}")),
        Error::Domain(m) => Error::Domain(format!("{m} {at}")),
        other => other,
    }
}

/// Certifies `count` seeded uniform points of the domain.
pub fn generate_surrogate_data(
    net: &Network,
    problem: &OdeProblem,
    count: usize,
    seed: u64,
    config: &CertifyConfig,
) -> Result<SurrogateDataset> {
    let points = sample_collocation(problem, count, seed)?;
    let samples = points
        .points
        .into_iter()
        .map(|p| SurrogateSample {
            t: p.t,
            x0: p.x0,
            u: p.u,
            target: 0.0,
        })
        .collect();
    let mut dataset = SurrogateDataset { samples, seed };
    certify_samples(net, problem, &mut dataset.samples, config)?;
    Ok(dataset)
}

/// Fills in `target` for every sample; consecutive samples on the same
/// trajectory share one certifier.
pub fn certify_samples(
    net: &Network,
    problem: &OdeProblem,
    samples: &mut [SurrogateSample],
    config: &CertifyConfig,
) -> Result<()> {
    let mut current: Option<(Vec<f64>, Vec<f64>, TrajectoryCertifier<'_>)> = None;
    for (i, s) in samples.iter_mut().enumerate() {
        let reuse = matches!(&current, Some((x0, u, _)) if *x0 == s.x0 && *u == s.u);
        if !reuse {
            let certifier =
                TrajectoryCertifier::new(net, problem, &s.x0, &s.u, config).map_err(|e| annotate(e, i, s))?;
            current = Some((s.x0.clone(), s.u.clone(), certifier));
        }
        let (_, _, certifier) = current.as_mut().expect("certifier set above");
        s.target = certifier.certify(s.t).map_err(|e| annotate(e, i, s))?.total;
    }
    Ok(())
}

fn sample_header(problem: &OdeProblem, last: &str) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=problem.dim()).map(|i| format!("x0_{i}")));
    match problem.control_dim() {
        0 => {}
        1 => header.push("u".into()),
        m => header.extend((1..=m).map(|i| format!("u{i}"))),
    }
    header.push(last.into());
    header
}

fn sample_row(s: &SurrogateSample) -> Vec<f64> {
    let mut row = vec![s.t];
    row.extend_from_slice(&s.x0);
    row.extend_from_slice(&s.u);
    row
}

impl SurrogateDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Writes `t,x0_1..x0_n[,u],e_target`.
    pub fn write_csv<W: Write>(&self, w: W, problem: &OdeProblem) -> Result<()> {
        let rows: Vec<Vec<f64>> = self
            .samples
            .iter()
            .map(|s| {
                let mut row = sample_row(s);
                row.push(s.target);
                row
            })
            .collect();
        write_rows(w, &sample_header(problem, "e_target"), &rows)
    }

    pub fn read_csv(text: &str, problem: &OdeProblem, seed: u64) -> Result<Self> {
        let table = Table::parse(text)?;
        let expected = sample_header(problem, "e_target");
        if table.header != expected {
            return Err(Error::Parse(format!(
                "surrogate data header {:?} does not match {:?}",
                table.header, expected
            )));
        }
        let (n, m) = (problem.dim(), problem.control_dim());
        let samples = table
            .rows
            .iter()
            .map(|cells| {
                let row = cells
                    .iter()
                    .map(|c| c.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: '{c}'"))))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(SurrogateSample {
                    t: row[0],
                    x0: row[1..1 + n].to_vec(),
                    u: row[1 + n..1 + n + m].to_vec(),
                    target: row[1 + n + m],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SurrogateDataset { samples, seed })
    }

    /// Seeded shuffle, then the first `1 − holdout` share for training and
    /// the rest for evaluation.
    pub fn split(&self, holdout: f64, seed: u64) -> Result<(SurrogateDataset, SurrogateDataset)> {
        if !(0.0..1.0).contains(&holdout) {
            return Err(Error::Config(format!("holdout share must be in [0, 1), got {holdout}")));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = self.len() - (holdout * self.len() as f64).round() as usize;
        let pick = |idx: &[usize]| SurrogateDataset {
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            seed: self.seed,
        };
        Ok((pick(&order[..n_train]), pick(&order[n_train..])))
    }
}

/// `(pred − target)²`, multiplied by `under_weight` when `pred < target`.
pub fn asymmetric_loss(pred: f64, target: f64, under_weight: f64) -> f64 {
    let d = pred - target;
    if d < 0.0 {
        under_weight * d * d
    } else {
        d * d
    }
}

/// Hidden layer widths and activation of an error network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorNetArch {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

/// Data-driven error indicator `E_NN(t, x0[, u])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorNet {
    pub network: Network,
}

impl ErrorNet {
    pub fn eval(&self, problem: &OdeProblem, t: f64, x0: &[f64], u: &[f64]) -> Result<f64> {
        Ok(self.network.forward(&problem.network_input(t, x0, u))?[0])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.network.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let network = Network::load(path)?;
        if network.n_outputs() != 1 {
            return Err(Error::Config(format!(
                "error network must have one output, found {}",
                network.n_outputs()
            )));
        }
        Ok(ErrorNet { network })
    }

    /// Share of samples where the indicator is at least the target.
    pub fn overestimation_fraction(&self, problem: &OdeProblem, data: &SurrogateDataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Config("evaluation set is empty".into()));
        }
        let mut over = 0usize;
        for s in &data.samples {
            if self.eval(problem, s.t, &s.x0, &s.u)? >= s.target {
                over += 1;
            }
        }
        Ok(over as f64 / data.len() as f64)
    }
}

struct AsymmetricObjective<'a> {
    net: &'a Network,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    under_weight: f64,
}

impl Objective for AsymmetricObjective<'_> {
    fn dimension(&self) -> usize {
        self.net.parameter_count()
    }

    fn value(&self, params: &[f64]) -> Result<LossParts> {
        let net = self.net.with_parameters(params)?;
        let mut sum = 0.0;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            sum += asymmetric_loss(net.forward(x)?[0], *y, self.under_weight);
        }
        let total = sum / self.inputs.len() as f64;
        Ok(LossParts {
            total,
            data: total,
            physics: 0.0,
        })
    }

    fn value_and_gradient(&self, params: &[f64]) -> Result<(LossParts, Vec<f64>)> {
        let net = self.net.with_parameters(params)?;
        let tape = Tape::new();
        let vars = net.parameter_vars(&tape);
        let scale = 1.0 / self.inputs.len() as f64;
        let mut loss = Var::constant(0.0);
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            let (out, _) = net.forward_on_tape(&tape, &vars, x, None)?;
            let d = out[0] - *y;
            let w = if d.val() < 0.0 { self.under_weight } else { 1.0 };
            loss = loss + d * d * (w * scale);
        }
        let grad = if loss.is_recorded() {
            tape.parameter_gradient(&vars, loss)?
        } else {
            vec![0.0; params.len()]
        };
        let total = loss.val();
        Ok((
            LossParts {
                total,
                data: total,
                physics: 0.0,
            },
            grad,
        ))
    }
}

/// Fits an error network to the certificate totals of `data`.
///
/// Targets are divided by their largest value during training and the
/// factor is folded back into the output layer, so the returned network
/// predicts on the original scale. Inputs are scaled by the domain size at
/// initialization.
pub fn train_error_net(
    data: &SurrogateDataset,
    problem: &OdeProblem,
    arch: &ErrorNetArch,
    optimizer: Optimizer,
    epochs: usize,
    under_weight: f64,
    seed: u64,
) -> Result<ErrorNet> {
    if data.is_empty() {
        return Err(Error::Config("surrogate data set is empty".into()));
    }
    if !(under_weight >= 1.0) {
        return Err(Error::Config(format!("under_weight must be >= 1, got {under_weight}")));
    }
    if data.samples.iter().any(|s| !(s.target >= 0.0) || !s.target.is_finite()) {
        return Err(Error::Config("surrogate targets must be finite and non-negative".into()));
    }
    let mut dims = vec![problem.network_input_dim()];
    dims.extend_from_slice(&arch.hidden);
    dims.push(1);
    let mut net = Network::glorot_uniform(&dims, arch.activation, seed)?;
    net.scale_input_columns(&problem.input_scales())?;
    let scale = data.samples.iter().map(|s| s.target).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let objective = AsymmetricObjective {
        net: &net,
        inputs: data
            .samples
            .iter()
            .map(|s| problem.network_input(s.t, &s.x0, &s.u))
            .collect(),
        targets: data.samples.iter().map(|s| s.target / scale).collect(),
        under_weight,
    };
    let result = minimize(&objective, &net.parameters(), optimizer, epochs)?;
    let mut network = net.with_parameters(&result.params)?;
    network.scale_output(scale);
    network.set_metadata("kind", "error_indicator");
    network.set_metadata("under_weight", under_weight.to_string());
    network.set_metadata("target_scale", format!("{scale:e}"));
    Ok(ErrorNet { network })
}

/// Writes `t,x0_1..x0_n[,u],e_certified,e_nn` for `data`.
pub fn write_comparison_csv<W: Write>(
    w: W,
    problem: &OdeProblem,
    data: &SurrogateDataset,
    error_net: &ErrorNet,
) -> Result<()> {
    let mut header = sample_header(problem, "e_certified");
    header.push("e_nn".into());
    let rows = data
        .samples
        .iter()
        .map(|s| {
            let mut row = sample_row(s);
            row.push(s.target);
            row.push(error_net.eval(problem, s.t, &s.x0, &s.u)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    write_rows(w, &header, &rows)
}
