use super::ResidualFn;
use crate::{Error, Result};

/// How the smoothing constant μ is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuPolicy {
    /// μ = mean collocation residual norm / 10.
    TenthOfMean { mean_residual: f64 },
    Explicit(f64),
}

impl MuPolicy {
    pub fn resolve(self) -> Result<f64> {
        let mu = match self {
            MuPolicy::TenthOfMean { mean_residual } => 0.1 * mean_residual,
            MuPolicy::Explicit(mu) => mu,
        };
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::Config(format!("mu must be finite and non-negative, got {mu}")));
        }
        Ok(mu)
    }
}

/// Smooth majorant `δ(t) = sqrt(‖R(t)‖² + μ²)` of the residual norm.
#[derive(Debug, Clone)]
pub struct SmoothDelta<'a> {
    residual: ResidualFn<'a>,
    mu: f64,
}

impl<'a> SmoothDelta<'a> {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn residual(&self) -> &ResidualFn<'a> {
        &self.residual
    }

    pub fn eval(&self, t: f64) -> f64 {
        smooth_norm(self.residual.norm_unchecked(t), self.mu)
    }
}

/// `sqrt(r² + μ²)` without intermediate overflow.
pub fn smooth_norm(residual_norm: f64, mu: f64) -> f64 {
    residual_norm.hypot(mu)
}

pub fn make_delta<'a>(residual: ResidualFn<'a>, policy: MuPolicy) -> Result<SmoothDelta<'a>> {
    Ok(SmoothDelta {
        residual,
        mu: policy.resolve()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Activation, Network};
    use crate::ode::decay_1d;
    use rand::{Rng, SeedableRng};

    #[test]
    fn pythagorean() {
        assert_eq!(smooth_norm(3.0, 4.0), 5.0);
        assert_eq!(smooth_norm(0.0, 0.0), 0.0);
    }

    #[test]
    fn mu_policies() {
        let mu = MuPolicy::TenthOfMean { mean_residual: 0.2 }.resolve().unwrap();
        assert!((mu - 0.02).abs() < 1e-17);
        assert!(MuPolicy::Explicit(-1.0).resolve().is_err());
        assert!(MuPolicy::Explicit(f64::NAN).resolve().is_err());
    }

    #[test]
    fn delta_dominates_residual_and_mu() {
        let problem = decay_1d();
        let net = Network::glorot_uniform(&[1, 4, 4, 1], Activation::Tanh, 2).unwrap();
        let rf = ResidualFn::new(&net, &problem, &[2.0], &[]).unwrap();
        let delta = make_delta(rf.clone(), MuPolicy::Explicit(0.01)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let t = rng.gen_range(0.0..=2.0);
            let d = delta.eval(t);
            assert!(d >= rf.norm_unchecked(t));
            assert!(d >= 0.01);
        }
    }
}
