use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{LossParts, Objective};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_adam_eps")]
        eps: f64,
    },
    /// Limited-memory BFGS with Armijo backtracking; one iteration per epoch.
    Lbfgs {
        #[serde(default = "default_memory")]
        memory: usize,
    },
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_adam_eps() -> f64 {
    1e-8
}

fn default_memory() -> usize {
    10
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_adam_eps(),
        }
    }

    pub fn lbfgs() -> Self {
        Optimizer::Lbfgs {
            memory: default_memory(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Optimizer::Adam { lr, beta1, beta2, eps } => {
                if !(lr > 0.0) || !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                    return Err(Error::Config(format!(
                        "invalid adam settings lr={lr} beta1={beta1} beta2={beta2} eps={eps}"
                    )));
                }
            }
            Optimizer::Lbfgs { memory } => {
                if memory == 0 {
                    return Err(Error::Config("lbfgs memory must be at least 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Loss after a given number of epochs (0 is the starting point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub total: f64,
    pub data: f64,
    pub physics: f64,
}

impl LossRecord {
    fn new(epoch: usize, parts: LossParts) -> Self {
        LossRecord {
            epoch,
            total: parts.total,
            data: parts.data,
            physics: parts.physics,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimized {
    /// Parameters with the lowest total loss seen, the start included.
    pub params: Vec<f64>,
    pub initial: LossRecord,
    /// One record per completed epoch, in order.
    pub history: Vec<LossRecord>,
}

impl Minimized {
    pub fn best(&self) -> LossRecord {
        std::iter::once(&self.initial)
            .chain(&self.history)
            .copied()
            .min_by(|a, b| a.total.total_cmp(&b.total))
            .expect("initial record present")
    }
}

struct Tracker {
    best_params: Vec<f64>,
    best_total: f64,
    initial: Option<LossRecord>,
    history: Vec<LossRecord>,
}

impl Tracker {
    fn new(params: &[f64]) -> Self {
        Tracker {
            best_params: params.to_vec(),
            best_total: f64::INFINITY,
            initial: None,
            history: Vec::new(),
        }
    }

    fn record(&mut self, epoch: usize, params: &[f64], parts: LossParts) -> Result<()> {
        if !parts.is_finite() {
            return Err(Error::Divergence {
                epoch,
                reason: format!("non-finite loss {}", parts.total),
            });
        }
        let rec = LossRecord::new(epoch, parts);
        if epoch == 0 {
            self.initial = Some(rec);
        } else {
            self.history.push(rec);
        }
        if parts.total < self.best_total {
            self.best_total = parts.total;
            self.best_params.copy_from_slice(params);
        }
        Ok(())
    }

    fn finish(self) -> Minimized {
        Minimized {
            params: self.best_params,
            initial: self.initial.expect("initial loss recorded"),
            history: self.history,
        }
    }
}

fn check_gradient(epoch: usize, g: &[f64]) -> Result<()> {
    if g.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            epoch,
            reason: "non-finite gradient".into(),
        })
    }
}

/// Minimizes `objective` from `start` for `epochs` full-batch iterations.
///
/// Non-finite losses or gradients abort with a divergence error naming the
/// epoch. L-BFGS stops early when no descent step can be found.
pub fn minimize<O: Objective>(
    objective: &O,
    start: &[f64],
    optimizer: Optimizer,
    epochs: usize,
) -> Result<Minimized> {
    optimizer.validate()?;
    if start.len() != objective.dimension() {
        return Err(Error::InputShape {
            expected: objective.dimension(),
            got: start.len(),
        });
    }
    match optimizer {
        Optimizer::Adam { lr, beta1, beta2, eps } => adam(objective, start, epochs, AdamConfig { lr, beta1, beta2, eps }),
        Optimizer::Lbfgs { memory } => lbfgs(objective, start, epochs, memory),
    }
}

#[derive(Debug, Clone, Copy)]
struct AdamConfig {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

/// Bias-corrected first and second moment estimates.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step: 0,
        }
    }

    /// Applies one update to `params` given the gradient at `params`.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64, beta1: f64, beta2: f64, eps: f64) {
        self.step += 1;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

fn adam<O: Objective>(objective: &O, start: &[f64], epochs: usize, cfg: AdamConfig) -> Result<Minimized> {
    let mut params = start.to_vec();
    let mut tracker = Tracker::new(start);
    let mut state = AdamState::new(params.len());
    for epoch in 0..epochs {
        let (parts, grad) = objective.value_and_gradient(&params)?;
        tracker.record(epoch, &params, parts)?;
        check_gradient(epoch + 1, &grad)?;
        state.update(&mut params, &grad, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    }
    let parts = objective.value(&params)?;
    tracker.record(epochs, &params, parts)?;
    Ok(tracker.finish())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: approximates `−H⁻¹ g` from the stored pairs.
fn lbfgs_direction(grad: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

fn lbfgs<O: Objective>(objective: &O, start: &[f64], epochs: usize, memory: usize) -> Result<Minimized> {
    const ARMIJO: f64 = 1e-4;
    const MAX_BACKTRACKS: usize = 40;
    let mut params = start.to_vec();
    let mut tracker = Tracker::new(start);
    let (mut parts, mut grad) = objective.value_and_gradient(&params)?;
    tracker.record(0, &params, parts)?;
    check_gradient(0, &grad)?;
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(memory);
    for epoch in 1..=epochs {
        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                pairs.clear();
            }
            let mut dir = lbfgs_direction(&grad, &pairs);
            let mut slope = dot(&grad, &dir);
            if !(slope < 0.0) {
                dir = grad.iter().map(|g| -g).collect();
                slope = -dot(&grad, &grad);
            }
            if slope == 0.0 {
                break;
            }
            let mut step = if pairs.is_empty() {
                (1.0 / dot(&grad, &grad).sqrt()).min(1.0)
            } else {
                1.0
            };
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + step * d).collect();
                let value = objective.value(&trial)?;
                if value.total.is_finite() && value.total <= parts.total + ARMIJO * step * slope {
                    accepted = Some(trial);
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some(next) = accepted else {
            break;
        };
        let (next_parts, next_grad) = objective.value_and_gradient(&next)?;
        tracker.record(epoch, &next, next_parts)?;
        check_gradient(epoch, &next_grad)?;
        let s: Vec<f64> = next.iter().zip(&params).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if pairs.len() == memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        params = next;
        parts = next_parts;
        grad = next_grad;
    }
    Ok(tracker.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `½ Σ cᵢ (pᵢ − aᵢ)²`.
    struct Quadratic {
        c: Vec<f64>,
        a: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dimension(&self) -> usize {
            self.c.len()
        }

        fn value(&self, p: &[f64]) -> Result<LossParts> {
            let total = 0.5 * (0..p.len()).map(|i| self.c[i] * (p[i] - self.a[i]).powi(2)).sum::<f64>();
            Ok(LossParts {
                total,
                data: total,
                physics: 0.0,
            })
        }

        fn value_and_gradient(&self, p: &[f64]) -> Result<(LossParts, Vec<f64>)> {
            let g = (0..p.len()).map(|i| self.c[i] * (p[i] - self.a[i])).collect();
            Ok((self.value(p)?, g))
        }
    }

    #[test]
    fn single_adam_step_by_hand() {
        let q = Quadratic {
            c: vec![2.0, 0.5],
            a: vec![1.0, -3.0],
        };
        let start = [0.0, 0.0];
        let g = [-2.0, 1.5];
        let (lr, b1, b2, eps) = (0.01, 0.9, 0.999, 1e-8);
        let expected: Vec<f64> = (0..2)
            .map(|i| {
                let m_hat = (1.0 - b1) * g[i] / (1.0 - b1);
                let v_hat = (1.0 - b2) * g[i] * g[i] / (1.0 - b2);
                start[i] - lr * m_hat / (f64::sqrt(v_hat) + eps)
            })
            .collect();
        let mut params = start.to_vec();
        let mut state = AdamState::new(2);
        state.update(&mut params, &q.value_and_gradient(&start).unwrap().1, lr, b1, b2, eps);
        for i in 0..2 {
            assert!((params[i] - expected[i]).abs() < 1e-12);
        }
        // The first step moves each coordinate by about lr against the gradient sign.
        assert!((params[0] - 0.01).abs() < 1e-9 && (params[1] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn adam_converges_and_records_every_epoch() {
        let q = Quadratic {
            c: vec![1.0, 4.0, 0.25],
            a: vec![1.0, 2.0, -1.0],
        };
        let out = minimize(&q, &[0.0; 3], Optimizer::adam(0.05), 2000).unwrap();
        assert_eq!(out.history.len(), 2000);
        assert_eq!(out.history.last().unwrap().epoch, 2000);
        assert!(out.best().total <= out.initial.total);
        assert!(out.best().total < 1e-8);
    }

    #[test]
    fn zero_epochs_returns_start() {
        let q = Quadratic { c: vec![1.0], a: vec![1.0] };
        let out = minimize(&q, &[0.3], Optimizer::adam(0.1), 0).unwrap();
        assert_eq!(out.params, vec![0.3]);
        assert!(out.history.is_empty());
        let out = minimize(&q, &[0.3], Optimizer::lbfgs(), 0).unwrap();
        assert_eq!(out.params, vec![0.3]);
    }

    #[test]
    fn lbfgs_solves_ill_conditioned_quadratic() {
        let q = Quadratic {
            c: vec![1.0, 100.0, 0.01, 10.0],
            a: vec![1.0, -1.0, 3.0, 0.5],
        };
        let out = minimize(&q, &[0.0; 4], Optimizer::lbfgs(), 100).unwrap();
        assert!(out.best().total < 1e-14, "{:?}", out.best());
        for (p, a) in out.params.iter().zip(&q.a) {
            assert!((p - a).abs() < 1e-6);
        }
    }

    struct Nan;

    impl Objective for Nan {
        fn dimension(&self) -> usize {
            1
        }

        fn value(&self, _: &[f64]) -> Result<LossParts> {
            Ok(LossParts {
                total: f64::NAN,
                data: f64::NAN,
                physics: 0.0,
            })
        }

        fn value_and_gradient(&self, p: &[f64]) -> Result<(LossParts, Vec<f64>)> {
            Ok((self.value(p)?, vec![0.0]))
        }
    }

    #[test]
    fn nan_loss_is_divergence() {
        assert!(matches!(
            minimize(&Nan, &[0.0], Optimizer::adam(0.1), 3),
            Err(Error::Divergence { epoch: 0, .. })
        ));
    }

    #[test]
    fn optimizer_config_parses() {
        let opt: Optimizer = serde_json::from_str(r#"{"kind":"adam","lr":0.02}"#).unwrap();
        assert_eq!(opt, Optimizer::adam(0.02));
        let opt: Optimizer = serde_json::from_str(r#"{"kind":"lbfgs"}"#).unwrap();
        assert_eq!(opt, Optimizer::lbfgs());
        assert!(Optimizer::adam(0.0).validate().is_err());
    }
}
