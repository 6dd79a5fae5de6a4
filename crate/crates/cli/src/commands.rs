//! The four subcommands. Each returns a report and writes its artifacts
//! plus a copy of the resolved configuration into the output directory.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use pinn_cert::autodiff::Network;
use pinn_cert::certify::{
    actual_error, calibrate, certificate_table, CertificateRow, CertifyConfig, ConstantsUsed,
    TrajectoryCertifier, REFERENCE_STEP,
};
use pinn_cert::csvfmt::{write_rows, Table};
use pinn_cert::ode::{uniform_grid, OdeProblem};
use pinn_cert::surrogate::{
    certify_samples, generate_surrogate_data, train_error_net, write_comparison_csv, ErrorNetArch,
    SurrogateDataset, SurrogateSample,
};
use pinn_cert::train::{
    initial_value_data, reference_data, sample_collocation, train, write_loss_csv, CollocationSet,
    DataSet, LossRecord,
};
use pinn_cert::{Error, Result};

use crate::config::{streams, ExperimentConfig};
use crate::schedule::Schedule;

pub const NETWORK_FILE: &str = "network.json";
pub const LOSS_FILE: &str = "loss.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const CERTIFICATES_FILE: &str = "certificates.csv";
pub const CERTIFICATES_SIDECAR: &str = "certificates.json";
pub const SURROGATE_DATA_FILE: &str = "surrogate_data.csv";
pub const ERROR_NET_FILE: &str = "error_net.json";
pub const COMPARISON_FILE: &str = "comparison.csv";

/// Certificates may fall below the reference error by this much before a
/// row counts as a rigor violation; it absorbs rounding in the reference.
pub const RIGOR_SLACK: f64 = 1e-12;

fn prepare_out(config: &ExperimentConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(CONFIG_FILE), config.to_toml()?)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn collocation(config: &ExperimentConfig, problem: &OdeProblem) -> Result<CollocationSet> {
    sample_collocation(
        problem,
        config.training.collocation,
        config.seed.wrapping_add(streams::COLLOCATION),
    )
}

fn training_data(config: &ExperimentConfig, problem: &OdeProblem, colloc: &CollocationSet) -> Result<DataSet> {
    let mut data = initial_value_data(problem, colloc);
    if config.training.reference_samples > 0 {
        data.extend(reference_data(
            problem,
            config.training.reference_samples,
            config.seed.wrapping_add(streams::REFERENCE_DATA),
            REFERENCE_STEP,
        )?);
    }
    Ok(data)
}

/// The untrained network of a configuration.
pub fn initial_network(config: &ExperimentConfig, problem: &OdeProblem) -> Result<Network> {
    let mut net = Network::glorot_uniform(
        &config.layer_dims(problem),
        config.network.activation,
        config.seed.wrapping_add(streams::NETWORK),
    )?;
    if config.network.scale_inputs {
        net.scale_input_columns(&problem.input_scales())?;
    }
    Ok(net)
}

fn load_network(config: &ExperimentConfig, problem: &OdeProblem, path: &Path) -> Result<Network> {
    let net = Network::load(path)?;
    let expected = config.layer_dims(problem);
    if net.layer_dims() != expected.as_slice() {
        return Err(Error::Config(format!(
            "{} has layers {:?}, the configuration expects {:?}",
            path.display(),
            net.layer_dims(),
            expected
        )));
    }
    Ok(net)
}

fn calibrated(config: &ExperimentConfig, problem: &OdeProblem, net: &Network) -> Result<CertifyConfig> {
    let colloc = collocation(config, problem)?;
    calibrate(net, problem, &colloc, &config.calibration())
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub initial: LossRecord,
    pub final_loss: LossRecord,
    pub epochs: usize,
    pub network_path: PathBuf,
}

impl fmt::Display for TrainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "initial loss: total {:.6e}  data {:.6e}  physics {:.6e}",
            self.initial.total, self.initial.data, self.initial.physics
        )?;
        writeln!(
            f,
            "final loss:   total {:.6e}  data {:.6e}  physics {:.6e}  (best of {} epochs, epoch {})",
            self.final_loss.total, self.final_loss.data, self.final_loss.physics, self.epochs, self.final_loss.epoch
        )?;
        write!(f, "network written to {}", self.network_path.display())
    }
}

/// Trains the configured network and writes `network.json` and `loss.csv`.
pub fn cmd_train(config: &ExperimentConfig, out: &Path) -> Result<TrainReport> {
    let problem = config.problem();
    prepare_out(config, out)?;
    let colloc = collocation(config, &problem)?;
    let data = training_data(config, &problem, &colloc)?;
    let net = initial_network(config, &problem)?;
    let outcome = train(&net, &problem, &data, &colloc, &config.training_run())?;
    let mut network = outcome.network;
    network.set_metadata("preset", format!("{:?}", config.preset).to_lowercase());
    let network_path = out.join(NETWORK_FILE);
    network.save(&network_path)?;
    write_loss_csv(create(&out.join(LOSS_FILE))?, &outcome.initial, &outcome.loss_history)?;
    Ok(TrainReport {
        initial: outcome.initial,
        final_loss: outcome.final_loss,
        epochs: config.training.epochs,
        network_path,
    })
}

/// Options of [`cmd_certify`].
#[derive(Debug, Clone, Default)]
pub struct CertifyOptions {
    /// Trained network; `out/network.json` when absent.
    pub network: Option<PathBuf>,
    /// Control schedule for problems with a control input; the bundled
    /// schedule when absent.
    pub schedule: Option<PathBuf>,
    pub with_reference: bool,
}

#[derive(Debug, Clone, Serialize)]
struct TrajectorySummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    interval: Option<usize>,
    x0: Vec<f64>,
    u: Vec<f64>,
    initial_error: f64,
    /// Constants of the last certificate on the trajectory.
    constants: ConstantsUsed,
}

#[derive(Debug, Clone, Serialize)]
struct CertifySidecar {
    config: CertifyConfig,
    trajectories: Vec<TrajectorySummary>,
}

#[derive(Debug, Clone)]
pub struct CertifyReport {
    pub rows: usize,
    pub out_of_domain: usize,
    pub max_total: f64,
    /// Present with `--with-reference`.
    pub violations: Option<usize>,
    pub warnings: Vec<String>,
    pub path: PathBuf,
}

impl fmt::Display for CertifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        writeln!(f, "certificates: {} rows, max total {:.6e}", self.rows, self.max_total)?;
        if self.out_of_domain > 0 {
            writeln!(f, "warning: {} rows outside the trained domain (flag = 1)", self.out_of_domain)?;
        }
        if let Some(v) = self.violations {
            writeln!(f, "rigor violations against the reference: {v}")?;
        }
        write!(f, "written to {}", self.path.display())
    }
}

struct Segment {
    interval: Option<usize>,
    t_offset: f64,
    x0: Vec<f64>,
    u: Vec<f64>,
    times: Vec<f64>,
}

fn segments(config: &ExperimentConfig, problem: &OdeProblem, schedule: Option<&Path>) -> Result<Vec<Segment>> {
    if problem.control_dim() == 0 {
        let t_max = config.certify.t_max.unwrap_or(problem.t_end);
        return Ok(vec![Segment {
            interval: None,
            t_offset: 0.0,
            x0: problem.nominal_initial(),
            u: Vec::new(),
            times: uniform_grid(t_max, config.certify.grid_points),
        }]);
    }
    let schedule = match schedule {
        Some(path) => Schedule::load(path, problem)?,
        None => Schedule::default_for(problem)?,
    };
    let count = config.certify.intervals.unwrap_or(schedule.intervals.len());
    if count == 0 || count > schedule.intervals.len() {
        return Err(Error::Config(format!(
            "certify.intervals must be in 1..={}, got {count}",
            schedule.intervals.len()
        )));
    }
    let h = Schedule::interval_length();
    let m = config.certify.times_per_interval;
    Ok(schedule
        .intervals
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(k, c)| Segment {
            interval: Some(k),
            t_offset: c.t_start,
            x0: c.x0,
            u: c.u,
            times: (1..=m).map(|j| h * j as f64 / m as f64).collect(),
        })
        .collect())
}

/// Certifies the configured query grid (or each control interval of the
/// schedule) and writes `certificates.csv` with a JSON sidecar of the
/// constants used.
pub fn cmd_certify(config: &ExperimentConfig, out: &Path, options: &CertifyOptions) -> Result<CertifyReport> {
    let problem = config.problem();
    let network_path = options.network.clone().unwrap_or_else(|| out.join(NETWORK_FILE));
    let net = load_network(config, &problem, &network_path)?;
    prepare_out(config, out)?;
    let certify_config = calibrated(config, &problem, &net)?;
    let segments = segments(config, &problem, options.schedule.as_deref())?;

    let mut prefixes: Vec<Vec<f64>> = Vec::new();
    let mut rows: Vec<CertificateRow> = Vec::new();
    let mut trajectories = Vec::new();
    let mut warnings = Vec::new();
    for seg in &segments {
        let mut certifier = TrajectoryCertifier::new(&net, &problem, &seg.x0, &seg.u, &certify_config)?;
        let reference = if options.with_reference {
            Some(actual_error(&net, &problem, &seg.x0, &seg.u, &seg.times)?)
        } else {
            None
        };
        let inside = problem.contains_point(&seg.x0, &seg.u);
        let mut last = None;
        for (i, &t) in seg.times.iter().enumerate() {
            let certificate = certifier.certify(t)?;
            if let Some(w) = &certificate.constants.warning {
                if !warnings.contains(w) {
                    warnings.push(w.clone());
                }
            }
            if let Some(k) = seg.interval {
                prefixes.push(vec![k as f64, seg.t_offset + t]);
            }
            last = Some(certificate.constants.clone());
            rows.push(CertificateRow {
                certificate,
                actual_error: reference.as_ref().map(|r| r[i]),
                out_of_domain: !(inside && problem.contains_time(t)),
            });
        }
        if let Some(constants) = last {
            trajectories.push(TrajectorySummary {
                interval: seg.interval,
                x0: seg.x0.clone(),
                u: seg.u.clone(),
                initial_error: certifier.initial_error(),
                constants,
            });
        }
    }

    let (mut header, mut table) = certificate_table(&rows);
    if !prefixes.is_empty() {
        header.splice(0..0, ["interval".to_string(), "t_global".to_string()]);
        for (row, prefix) in table.iter_mut().zip(&prefixes) {
            row.splice(0..0, prefix.iter().copied());
        }
    }
    let path = out.join(CERTIFICATES_FILE);
    write_rows(create(&path)?, &header, &table)?;
    let sidecar = CertifySidecar {
        config: certify_config,
        trajectories,
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(out.join(CERTIFICATES_SIDECAR), json + "\n")?;

    let violations = options.with_reference.then(|| {
        rows.iter()
            .filter(|r| r.certificate.total < r.actual_error.unwrap_or(0.0) - RIGOR_SLACK)
            .count()
    });
    Ok(CertifyReport {
        rows: rows.len(),
        out_of_domain: rows.iter().filter(|r| r.out_of_domain).count(),
        max_total: rows.iter().map(|r| r.certificate.total).fold(0.0, f64::max),
        violations,
        warnings,
        path,
    })
}

/// Options of [`cmd_surrogate`].
#[derive(Debug, Clone, Default)]
pub struct SurrogateOptions {
    pub network: Option<PathBuf>,
    /// Previously generated `surrogate_data.csv`; skips certification of
    /// the training points.
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SurrogateReport {
    pub training_points: usize,
    pub reused_data: bool,
    pub evaluation_points: usize,
    /// Share of evaluation points where the indicator is at least the
    /// certified bound.
    pub overestimation_fraction: f64,
    pub wrap_target: f64,
    pub path: PathBuf,
}

impl fmt::Display for SurrogateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "surrogate trained on {} points ({})",
            self.training_points,
            if self.reused_data { "reused data" } else { "generated" }
        )?;
        writeln!(
            f,
            "overestimation on {} held-out points: {:.2}% (target {:.0}%)",
            self.evaluation_points,
            100.0 * self.overestimation_fraction,
            100.0 * self.wrap_target
        )?;
        write!(f, "comparison written to {}", self.path.display())
    }
}

/// Held-out evaluation inputs: a uniform time grid when only time varies,
/// otherwise seeded uniform samples of the domain.
fn evaluation_samples(config: &ExperimentConfig, problem: &OdeProblem) -> Result<Vec<SurrogateSample>> {
    let count = config.surrogate.eval_points;
    if !problem.vary_initial && problem.control_dim() == 0 {
        let x0 = problem.nominal_initial();
        return Ok(uniform_grid(problem.t_end, count)
            .into_iter()
            .map(|t| SurrogateSample {
                t,
                x0: x0.clone(),
                u: Vec::new(),
                target: 0.0,
            })
            .collect());
    }
    let points = sample_collocation(problem, count, config.seed.wrapping_add(streams::SURROGATE_EVAL))?;
    Ok(points
        .points
        .into_iter()
        .map(|p| SurrogateSample {
            t: p.t,
            x0: p.x0,
            u: p.u,
            target: 0.0,
        })
        .collect())
}

/// Generates (or reads) certified training points, fits the error
/// indicator and writes it with a held-out comparison CSV.
pub fn cmd_surrogate(config: &ExperimentConfig, out: &Path, options: &SurrogateOptions) -> Result<SurrogateReport> {
    let problem = config.problem();
    let network_path = options.network.clone().unwrap_or_else(|| out.join(NETWORK_FILE));
    let net = load_network(config, &problem, &network_path)?;
    let data_seed = config.seed.wrapping_add(streams::SURROGATE_DATA);
    let reused = match &options.data {
        Some(path) => Some(SurrogateDataset::read_csv(&std::fs::read_to_string(path)?, &problem, data_seed)?),
        None => None,
    };
    prepare_out(config, out)?;
    let certify_config = calibrated(config, &problem, &net)?;
    let reused_data = reused.is_some();
    let data = match reused {
        Some(data) => data,
        None => generate_surrogate_data(&net, &problem, config.surrogate.count, data_seed, &certify_config)?,
    };
    data.write_csv(create(&out.join(SURROGATE_DATA_FILE))?, &problem)?;

    let arch = ErrorNetArch {
        hidden: config.surrogate.hidden.clone(),
        activation: config.surrogate.activation,
    };
    let error_net = train_error_net(
        &data,
        &problem,
        &arch,
        config.surrogate.optimizer,
        config.surrogate.epochs,
        config.surrogate.under_weight,
        config.seed.wrapping_add(streams::SURROGATE_INIT),
    )?;
    error_net.save(out.join(ERROR_NET_FILE))?;

    let mut samples = evaluation_samples(config, &problem)?;
    certify_samples(&net, &problem, &mut samples, &certify_config)?;
    let evaluation = SurrogateDataset {
        samples,
        seed: config.seed.wrapping_add(streams::SURROGATE_EVAL),
    };
    let path = out.join(COMPARISON_FILE);
    write_comparison_csv(create(&path)?, &problem, &evaluation, &error_net)?;
    Ok(SurrogateReport {
        training_points: data.len(),
        reused_data,
        evaluation_points: evaluation.len(),
        overestimation_fraction: error_net.overestimation_fraction(&problem, &evaluation)?,
        wrap_target: config.surrogate.wrap_target,
        path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: usize,
    /// Rows with a positive reference error inside the factor window.
    pub factor_rows: usize,
    pub max_factor: Option<f64>,
    pub mean_factor: Option<f64>,
    /// `(t, factor)` at the last row, when its reference error is positive.
    pub final_factor: Option<(f64, f64)>,
    pub violations: Option<usize>,
    pub surrogate_fraction: Option<f64>,
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows: {}", self.rows)?;
        match (self.max_factor, self.mean_factor) {
            (Some(max), Some(mean)) => {
                writeln!(f, "overestimation factor: max {max:.4}  mean {mean:.4}  ({} rows)", self.factor_rows)?
            }
            _ => writeln!(f, "overestimation factor: n/a (no reference column)")?,
        }
        if let Some((t, factor)) = self.final_factor {
            writeln!(f, "overestimation factor at t = {t}: {factor:.4}")?;
        }
        match self.violations {
            Some(v) => writeln!(f, "rigor violations: {v}")?,
            None => writeln!(f, "rigor violations: n/a (no reference column)")?,
        }
        match self.surrogate_fraction {
            Some(s) => write!(f, "surrogate overestimation fraction: {:.2}%", 100.0 * s),
            None => write!(f, "surrogate overestimation fraction: n/a"),
        }
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    let table = Table::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if table.rows.is_empty() {
        return Err(Error::Config(format!("{} has no rows", path.display())));
    }
    Ok(table)
}

fn column(table: &Table, name: &str, path: &Path) -> Result<Vec<f64>> {
    table
        .column_f64(name)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Summarizes a certificate CSV and, optionally, a surrogate comparison CSV
/// on the same time grid. Overestimation factors use rows with `t >= t_min`.
pub fn cmd_compare(certificates: &Path, surrogate: Option<&Path>, t_min: f64) -> Result<CompareReport> {
    let table = read_table(certificates)?;
    let t = column(&table, "t", certificates)?;
    let total = column(&table, "total", certificates)?;
    let actual = match table.column_index("actual_error") {
        Some(_) => Some(column(&table, "actual_error", certificates)?),
        None => None,
    };

    let mut report = CompareReport {
        rows: t.len(),
        factor_rows: 0,
        max_factor: None,
        mean_factor: None,
        final_factor: None,
        violations: None,
        surrogate_fraction: None,
    };
    if let Some(actual) = &actual {
        let factors: Vec<f64> = t
            .iter()
            .zip(total.iter().zip(actual))
            .filter(|(&ti, (_, &a))| ti >= t_min && a > 0.0)
            .map(|(_, (&c, &a))| c / a)
            .collect();
        report.factor_rows = factors.len();
        if !factors.is_empty() {
            report.max_factor = Some(factors.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            report.mean_factor = Some(factors.iter().sum::<f64>() / factors.len() as f64);
        }
        let last = t.len() - 1;
        if actual[last] > 0.0 {
            report.final_factor = Some((t[last], total[last] / actual[last]));
        }
        report.violations = Some(
            total
                .iter()
                .zip(actual)
                .filter(|(&c, &a)| c < a - RIGOR_SLACK)
                .count(),
        );
    }

    if let Some(path) = surrogate {
        let sur = read_table(path)?;
        let sur_t = column(&sur, "t", path)?;
        if sur_t != t {
            return Err(Error::Config(format!(
                "time grids of {} ({} rows) and {} ({} rows) are not aligned",
                certificates.display(),
                t.len(),
                path.display(),
                sur_t.len()
            )));
        }
        let certified = column(&sur, "e_certified", path)?;
        let nn = column(&sur, "e_nn", path)?;
        let over = nn.iter().zip(&certified).filter(|(n, c)| n >= c).count();
        report.surrogate_fraction = Some(over as f64 / nn.len() as f64);
    }
    Ok(report)
}
