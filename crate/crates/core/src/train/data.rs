use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CollocationSet;
use crate::ode::{solve_reference, Method, OdeProblem};
use crate::{Error, Result};

/// A supervised sample `φ(t, x0, u) ≈ target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRecord {
    pub t: f64,
    pub x0: Vec<f64>,
    pub u: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    pub records: Vec<DataRecord>,
}

impl DataSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks every record against the problem dimensions.
    pub fn validate(&self, problem: &OdeProblem) -> Result<()> {
        for r in &self.records {
            problem.check_state(&r.x0, &r.u)?;
            if r.target.len() != problem.dim() {
                return Err(Error::InputShape {
                    expected: problem.dim(),
                    got: r.target.len(),
                });
            }
        }
        Ok(())
    }

    pub fn extend(&mut self, other: DataSet) {
        self.records.extend(other.records);
    }
}

/// Records `(0, x0, u) ↦ x0` that anchor the initial value.
///
/// For a fixed initial value this is the single nominal record; otherwise
/// one record per distinct `(x0, u)` of the collocation set.
pub fn initial_value_data(problem: &OdeProblem, colloc: &CollocationSet) -> DataSet {
    if !problem.vary_initial {
        let x0 = problem.nominal_initial();
        let u = colloc
            .points
            .first()
            .map(|p| p.u.clone())
            .unwrap_or_else(|| problem.u_box.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect());
        return DataSet {
            records: vec![DataRecord {
                t: 0.0,
                target: x0.clone(),
                x0,
                u,
            }],
        };
    }
    let mut records: Vec<DataRecord> = Vec::with_capacity(colloc.len());
    for p in &colloc.points {
        if records.iter().any(|r| r.x0 == p.x0 && r.u == p.u) {
            continue;
        }
        records.push(DataRecord {
            t: 0.0,
            x0: p.x0.clone(),
            u: p.u.clone(),
            target: p.x0.clone(),
        });
    }
    DataSet { records }
}

/// `count` samples of the true solution at uniform random `(t, x0, u)`,
/// integrated with rk4 at step `max_step`.
pub fn reference_data(problem: &OdeProblem, count: usize, seed: u64, max_step: f64) -> Result<DataSet> {
    let points = super::sample_collocation(problem, count, seed)?;
    let mut records = Vec::with_capacity(count);
    for p in points.points {
        let target = match problem.exact_solution(&p.x0, p.t) {
            Some(x) => x,
            None if p.t == 0.0 => p.x0.clone(),
            None => {
                let traj = solve_reference(problem, &p.x0, &p.u, &[0.0, p.t], Method::Rk4, max_step)?;
                traj.states[1].clone()
            }
        };
        records.push(DataRecord {
            t: p.t,
            x0: p.x0,
            u: p.u,
            target,
        });
    }
    Ok(DataSet { records })
}

/// `count` exact samples `(t_i, x(t_i))` on a uniform random time grid for
/// problems with a closed-form solution and a fixed initial value.
pub fn exact_samples(problem: &OdeProblem, count: usize, seed: u64) -> Result<DataSet> {
    if count == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let x0 = problem.nominal_initial();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(0.0, problem.t_end);
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let t = dist.sample(&mut rng);
        let target = problem
            .exact_solution(&x0, t)
            .ok_or_else(|| Error::Config(format!("problem '{}' has no closed form", problem.name)))?;
        records.push(DataRecord {
            t,
            x0: x0.clone(),
            u: Vec::new(),
            target,
        });
    }
    Ok(DataSet { records })
}
