use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ode::OdeProblem;
use crate::{Error, Result};

/// A network input `(t, x0, u)` at which the residual is penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationPoint {
    pub t: f64,
    pub x0: Vec<f64>,
    /// Empty for problems without control.
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationSet {
    pub points: Vec<CollocationPoint>,
    pub seed: u64,
}

impl CollocationSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn interval(lo: f64, hi: f64, what: &str) -> Result<Uniform<f64>> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::Config(format!("empty sampling interval [{lo}, {hi}] for {what}")));
    }
    Ok(Uniform::new_inclusive(lo, hi))
}

/// Draws `count` i.i.d. uniform points from `[0, t_end] × x0_box × u_box`.
///
/// Each point draws `t`, then the state coordinates, then the controls. When
/// the problem does not vary the initial value, `x0` is the nominal one.
pub fn sample_collocation(problem: &OdeProblem, count: usize, seed: u64) -> Result<CollocationSet> {
    if count == 0 {
        return Err(Error::Config("collocation count must be at least 1".into()));
    }
    let t_dist = interval(0.0, problem.t_end, "t")?;
    let x_dists = problem
        .x0_box
        .iter()
        .map(|&(lo, hi)| interval(lo, hi, "x0"))
        .collect::<Result<Vec<_>>>()?;
    let u_dists = problem
        .u_box
        .iter()
        .map(|&(lo, hi)| interval(lo, hi, "u"))
        .collect::<Result<Vec<_>>>()?;
    let nominal = problem.nominal_initial();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..count)
        .map(|_| {
            let t = t_dist.sample(&mut rng);
            let x0 = if problem.vary_initial {
                x_dists.iter().map(|d| d.sample(&mut rng)).collect()
            } else {
                nominal.clone()
            };
            let u = u_dists.iter().map(|d| d.sample(&mut rng)).collect();
            CollocationPoint { t, x0, u }
        })
        .collect();
    Ok(CollocationSet { points, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{decay_1d, inverted_pendulum};

    #[test]
    fn point_mass_box() {
        let set = sample_collocation(&decay_1d(), 1, 0).unwrap();
        assert_eq!(set.points[0].x0, vec![2.0]);
        assert!(set.points[0].u.is_empty());
    }

    #[test]
    fn decay_points_stay_in_the_horizon() {
        let set = sample_collocation(&decay_1d(), 200, 42).unwrap();
        assert_eq!(set.len(), 200);
        assert!(set.points.iter().all(|p| (0.0..=2.0).contains(&p.t) && p.x0 == [2.0]));
    }

    #[test]
    fn deterministic_and_inside_the_box() {
        let problem = inverted_pendulum();
        let a = sample_collocation(&problem, 300, 9).unwrap();
        let b = sample_collocation(&problem, 300, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_collocation(&problem, 300, 10).unwrap());
        for p in &a.points {
            assert!(problem.contains_time(p.t));
            assert!(problem.contains_point(&p.x0, &p.u));
        }
    }

    #[test]
    fn bad_requests() {
        assert!(sample_collocation(&decay_1d(), 0, 0).is_err());
        let mut problem = decay_1d();
        problem.x0_box = vec![(1.0, 0.0)];
        assert!(matches!(sample_collocation(&problem, 3, 0), Err(Error::Config(_))));
    }
}
