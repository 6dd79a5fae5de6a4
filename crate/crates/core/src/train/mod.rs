//! Physics-informed training: data and residual losses, collocation
//! sampling and full-batch optimizers.

mod collocation;
mod data;
mod eta;
mod loss;
mod optim;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use collocation::{sample_collocation, CollocationPoint, CollocationSet};
pub use data::{exact_samples, initial_value_data, reference_data, DataRecord, DataSet};
pub use eta::Eta;
pub use loss::{loss_data, loss_physics, LossParts, Objective, PinnObjective};
pub use optim::{minimize, AdamState, LossRecord, Minimized, Optimizer};

use crate::autodiff::Network;
use crate::csvfmt::write_rows;
use crate::ode::OdeProblem;
use crate::{Error, Result};

/// Settings of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRun {
    pub gamma_data: f64,
    pub gamma_phys: f64,
    #[serde(default)]
    pub eta: Eta,
    pub optimizer: Optimizer,
    pub epochs: usize,
    /// Recorded with the trained network; training itself is deterministic.
    pub seed: u64,
}

impl TrainingRun {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_data >= 0.0 && self.gamma_phys >= 0.0) {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        if !(self.gamma_data > 0.0 || self.gamma_phys > 0.0) {
            return Err(Error::Config("at least one loss weight must be positive".into()));
        }
        self.eta.validate()?;
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    /// Network with the lowest total loss seen during the run.
    pub network: Network,
    pub initial: LossRecord,
    /// One record per completed epoch.
    pub loss_history: Vec<LossRecord>,
    /// Loss of the returned network.
    pub final_loss: LossRecord,
}

/// Minimizes `γ_data · L_data + γ_phys · L_phys` starting from `net`.
pub fn train(
    net: &Network,
    problem: &OdeProblem,
    data: &DataSet,
    colloc: &CollocationSet,
    run: &TrainingRun,
) -> Result<TrainingOutcome> {
    run.validate()?;
    let objective = PinnObjective::new(net, problem, data, colloc, &run.eta, run.gamma_data, run.gamma_phys)?;
    let result = minimize(&objective, &net.parameters(), run.optimizer, run.epochs)?;
    let final_loss = result.best();
    let mut network = net.with_parameters(&result.params)?;
    network.set_metadata("training_seed", run.seed.to_string());
    network.set_metadata("epochs", run.epochs.to_string());
    network.set_metadata("final_loss", format!("{:e}", final_loss.total));
    Ok(TrainingOutcome {
        network,
        initial: result.initial,
        loss_history: result.history,
        final_loss,
    })
}

/// Writes `epoch,loss_total,loss_data,loss_phys`, starting with epoch 0.
pub fn write_loss_csv<W: Write>(w: W, initial: &LossRecord, history: &[LossRecord]) -> Result<()> {
    let header: Vec<String> = ["epoch", "loss_total", "loss_data", "loss_phys"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<f64>> = std::iter::once(initial)
        .chain(history)
        .map(|r| vec![r.epoch as f64, r.total, r.data, r.physics])
        .collect();
    write_rows(w, &header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Activation;
    use crate::ode::decay_1d;

    #[test]
    fn zero_epochs_keeps_network() {
        let problem = decay_1d();
        let net = Network::glorot_uniform(&[1, 4, 1], Activation::Tanh, 1).unwrap();
        let colloc = sample_collocation(&problem, 10, 1).unwrap();
        let data = initial_value_data(&problem, &colloc);
        let run = TrainingRun {
            gamma_data: 1.0,
            gamma_phys: 1.0,
            eta: Eta::default(),
            optimizer: Optimizer::adam(0.01),
            epochs: 0,
            seed: 1,
        };
        let out = train(&net, &problem, &data, &colloc, &run).unwrap();
        assert_eq!(out.network.parameters(), net.parameters());
        assert!(out.loss_history.is_empty());
    }

    #[test]
    fn short_run_decreases_loss() {
        let problem = decay_1d();
        let net = Network::glorot_uniform(&[1, 4, 4, 1], Activation::Tanh, 2).unwrap();
        let colloc = sample_collocation(&problem, 50, 1).unwrap();
        let data = initial_value_data(&problem, &colloc);
        for optimizer in [Optimizer::adam(0.01), Optimizer::lbfgs()] {
            let run = TrainingRun {
                gamma_data: 1.0,
                gamma_phys: 1.0,
                eta: Eta::default(),
                optimizer,
                epochs: 50,
                seed: 0,
            };
            let out = train(&net, &problem, &data, &colloc, &run).unwrap();
            assert!(out.final_loss.total < out.initial.total);
            assert!(out.loss_history.iter().all(|r| r.total.is_finite()));
            let again = train(&net, &problem, &data, &colloc, &run).unwrap();
            assert_eq!(again.network.parameters(), out.network.parameters());
        }
    }

    #[test]
    fn loss_csv_layout() {
        let rec = |epoch| LossRecord {
            epoch,
            total: 1.0,
            data: 0.5,
            physics: 0.5,
        };
        let mut buf = Vec::new();
        write_loss_csv(&mut buf, &rec(0), &[rec(1), rec(2)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epoch,loss_total,loss_data,loss_phys\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
