use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Time weighting of the physics loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eta {
    Constant(f64),
    /// `(t, weight)` breakpoints, linearly interpolated and held constant
    /// beyond the first and last breakpoint.
    Table(Vec<(f64, f64)>),
}

impl Default for Eta {
    fn default() -> Self {
        Eta::Constant(1.0)
    }
}

impl Eta {
    pub fn validate(&self) -> Result<()> {
        match self {
            Eta::Constant(w) if *w >= 0.0 && w.is_finite() => Ok(()),
            Eta::Constant(w) => Err(Error::Config(format!("eta weight must be non-negative, got {w}"))),
            Eta::Table(points) => {
                if points.is_empty() {
                    return Err(Error::Config("eta table is empty".into()));
                }
                if points.iter().any(|(t, w)| !t.is_finite() || !(*w >= 0.0) || !w.is_finite()) {
                    return Err(Error::Config("eta table needs finite times and non-negative weights".into()));
                }
                if points.windows(2).any(|p| p[1].0 <= p[0].0) {
                    return Err(Error::Config("eta breakpoints must be strictly increasing in t".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Eta::Constant(w) => *w,
            Eta::Table(points) => {
                let i = points.partition_point(|(ti, _)| *ti <= t);
                if i == 0 {
                    return points[0].1;
                }
                if i == points.len() {
                    return points[i - 1].1;
                }
                let (t0, w0) = points[i - 1];
                let (t1, w1) = points[i];
                w0 + (w1 - w0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolation() {
        let eta = Eta::Table(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 3.0)]);
        eta.validate().unwrap();
        assert_eq!(eta.eval(-1.0), 1.0);
        assert_eq!(eta.eval(0.5), 2.0);
        assert_eq!(eta.eval(1.0), 3.0);
        assert_eq!(eta.eval(5.0), 3.0);
        assert_eq!(Eta::default().eval(0.3), 1.0);
    }

    #[test]
    fn invalid_tables() {
        assert!(Eta::Table(vec![]).validate().is_err());
        assert!(Eta::Table(vec![(1.0, 1.0), (1.0, 2.0)]).validate().is_err());
        assert!(Eta::Constant(-1.0).validate().is_err());
    }
}
