//! Piecewise-constant control schedules for the pendulum.

use std::path::Path;

use pinn_cert::csvfmt::{write_rows, Table};
use pinn_cert::ode::OdeProblem;
use pinn_cert::{Error, Result};

pub const SCHEDULE_INTERVALS: usize = 50;
pub const SCHEDULE_HORIZON: f64 = 4.0;

/// Stabilizing schedule shipped with the pendulum preset, computed offline
/// by scripts/pendulum_schedule.py.
pub const DEFAULT_SCHEDULE: &str = include_str!("../presets/pendulum_schedule.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct ControlInterval {
    pub t_start: f64,
    pub u: Vec<f64>,
    /// State at the start of the interval.
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub intervals: Vec<ControlInterval>,
}

impl Schedule {
    pub fn interval_length() -> f64 {
        SCHEDULE_HORIZON / SCHEDULE_INTERVALS as f64
    }

    /// Parses `interval,t_start,u,x0_1..x0_n` and checks it against `problem`.
    pub fn parse(text: &str, problem: &OdeProblem) -> Result<Self> {
        let table = Table::parse(text).map_err(|e| Error::Config(format!("schedule: {e}")))?;
        let n = problem.dim();
        let m = problem.control_dim();
        let mut expected = vec!["interval".to_string(), "t_start".to_string()];
        match m {
            1 => expected.push("u".into()),
            _ => expected.extend((1..=m).map(|i| format!("u{i}"))),
        }
        expected.extend((1..=n).map(|i| format!("x0_{i}")));
        if table.header != expected {
            return Err(Error::Config(format!(
                "schedule header must be `{}`, got `{}`",
                expected.join(","),
                table.header.join(",")
            )));
        }
        if table.rows.len() != SCHEDULE_INTERVALS {
            return Err(Error::Config(format!(
                "schedule must have {SCHEDULE_INTERVALS} intervals, got {}",
                table.rows.len()
            )));
        }
        let h = Self::interval_length();
        let mut intervals = Vec::with_capacity(table.rows.len());
        for (k, row) in table.rows.iter().enumerate() {
            let values = row
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::Config(format!("schedule row {}: bad number `{c}`", k + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("schedule row {}: non-finite value", k + 1)));
            }
            if values[0] != k as f64 {
                return Err(Error::Config(format!(
                    "schedule row {} has interval index {}, expected {k}",
                    k + 1,
                    values[0]
                )));
            }
            if (values[1] - k as f64 * h).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "interval {k} starts at {}, expected {}",
                    values[1],
                    k as f64 * h
                )));
            }
            let u = values[2..2 + m].to_vec();
            let x0 = values[2 + m..].to_vec();
            problem.check_state(&x0, &u)?;
            intervals.push(ControlInterval { t_start: values[1], u, x0 });
        }
        Ok(Schedule { intervals })
    }

    pub fn load(path: &Path, problem: &OdeProblem) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, problem)
    }

    pub fn default_for(problem: &OdeProblem) -> Result<Self> {
        Self::parse(DEFAULT_SCHEDULE, problem)
    }

    pub fn to_csv(&self) -> Result<String> {
        let m = self.intervals.first().map_or(0, |i| i.u.len());
        let n = self.intervals.first().map_or(0, |i| i.x0.len());
        let mut header = vec!["interval".to_string(), "t_start".to_string()];
        match m {
            1 => header.push("u".into()),
            _ => header.extend((1..=m).map(|i| format!("u{i}"))),
        }
        header.extend((1..=n).map(|i| format!("x0_{i}")));
        let rows: Vec<Vec<f64>> = self
            .intervals
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let mut row = vec![k as f64, c.t_start];
                row.extend_from_slice(&c.u);
                row.extend_from_slice(&c.x0);
                row
            })
            .collect();
        let mut buf = Vec::new();
        write_rows(&mut buf, &header, &rows)?;
        Ok(String::from_utf8(buf).expect("csv is ascii"))
    }
}
