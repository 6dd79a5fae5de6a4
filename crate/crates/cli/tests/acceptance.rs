//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pinn_cert::autodiff::{Activation, Network, Tape};
use pinn_cert::certify::{
    calibrate, estimate_k_for, make_delta, subinterval_count, trapezoid_bound_integral, MuPolicy, ResidualFn,
};
use pinn_cert::csvfmt::Table;
use pinn_cert::linalg::Matrix;
use pinn_cert::ode::{decay_1d, linear};
use pinn_cert::train::sample_collocation;
use pinn_cert::certify::estimate_lipschitz;
use pinn_cert_cli::commands::{CERTIFICATES_FILE, NETWORK_FILE, RIGOR_SLACK};
use pinn_cert_cli::{
    cmd_certify, cmd_compare, cmd_surrogate, cmd_train, CertifyOptions, ExperimentConfig, SurrogateOptions,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

type Check = Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn read_table(path: &Path) -> Result<Table, String> {
    Table::parse(&std::fs::read_to_string(path).map_err(err)?).map_err(err)
}

/// Trains and certifies the decay preset with the reference column.
fn decay_run(out: &Path) -> Result<f64, String> {
    let config = ExperimentConfig::decay1d();
    let start = Instant::now();
    cmd_train(&config, out).map_err(err)?;
    let options = CertifyOptions {
        with_reference: true,
        ..Default::default()
    };
    cmd_certify(&config, out, &options).map_err(err)?;
    Ok(start.elapsed().as_secs_f64())
}

fn criterion_rigor_decay(out: &Path, seconds: f64) -> Check {
    let table = read_table(&out.join(CERTIFICATES_FILE))?;
    let t = table.column_f64("t").map_err(err)?;
    let total = table.column_f64("total").map_err(err)?;
    let actual = table.column_f64("actual_error").map_err(err)?;
    let violations = total.iter().zip(&actual).filter(|(c, a)| **c < **a - RIGOR_SLACK).count();
    let on_grid = t.len() == 101 && t[0] == 0.0 && (t[100] - 2.0).abs() < 1e-15;
    Ok(outcome(
        violations == 0 && on_grid && seconds <= 300.0,
        format!("{violations} violations on {} grid times, {seconds:.1} s", t.len()),
    ))
}

fn criterion_tightness(out: &Path) -> Check {
    let report = cmd_compare(&out.join(CERTIFICATES_FILE), None, 0.5).map_err(err)?;
    let factor = report.max_factor.ok_or("no overestimation factor")?;
    let at_end = report.final_factor.map(|(_, f)| f).unwrap_or(f64::NAN);
    Ok(outcome(
        factor <= 100.0,
        format!("max factor on [0.5, 2] = {factor:.3}, factor at t = 2 is {at_end:.3}"),
    ))
}

fn criterion_quadrature() -> Check {
    let exact = ((2.0f64).exp() - 1.0) / 2.0;
    let mut errors = Vec::new();
    let mut bounded = true;
    for n in [4, 8, 16, 32] {
        let (i_hat, e_int) = trapezoid_bound_integral(|_| 1.0, 2.0, 1.0, n, 4.0).map_err(err)?;
        let e = (i_hat - exact).abs();
        bounded &= e <= e_int;
        errors.push(e);
    }
    let slopes: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let in_band = slopes.iter().all(|s| (1.9..=2.1).contains(s));
    Ok(outcome(
        bounded && in_band,
        format!("errors within E_Int: {bounded}, slopes {slopes:.3?}"),
    ))
}

fn criterion_subintervals(out: &Path) -> Check {
    let config = ExperimentConfig::decay1d();
    let problem = decay_1d();
    let net = Network::load(out.join(NETWORK_FILE)).map_err(err)?;
    let colloc = sample_collocation(&problem, config.training.collocation, config.seed).map_err(err)?;
    let cfg = calibrate(&net, &problem, &colloc, &config.calibration()).map_err(err)?;
    let lipschitz = cfg.lipschitz.ok_or("no Lipschitz constant")?;
    let x0 = problem.nominal_initial();
    let residual = ResidualFn::new(&net, &problem, &x0, &[]).map_err(err)?;
    let e0 = (x0[0] - residual.prediction(0.0)[0]).abs();
    let delta = make_delta(residual, MuPolicy::Explicit(cfg.mu)).map_err(err)?;
    let k = estimate_k_for(&delta, lipschitz, problem.t_end, cfg.k_grid, cfg.k_safety).map_err(err)?;
    let n = subinterval_count(2.0, e0, lipschitz, k, cfg.mean_residual, 0.33).map_err(err)?;
    Ok(outcome(
        (100..=600).contains(&n),
        format!("N_SI = {n} (L = {lipschitz}, K = {k:.3e}, e0 = {e0:.3e}, mean residual = {:.3e})", cfg.mean_residual),
    ))
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max).max(1e-8);
    diff / scale
}

fn criterion_differentiation() -> Check {
    let activations = [Activation::Tanh, Activation::Gelu, Activation::Silu, Activation::Sigmoid];
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![rng.gen_range(1..=3)];
        for _ in 0..rng.gen_range(1..=2) {
            dims.push(rng.gen_range(2..=6));
        }
        dims.push(rng.gen_range(1..=3));
        let net = Network::glorot_uniform(&dims, activations[seed as usize % 4], seed).map_err(err)?;
        let input: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let params = net.parameters();

        // Reverse-mode gradients of every output and of its time derivative.
        let tape = Tape::new();
        let vars = net.parameter_vars(&tape);
        let (out, tangent) = net.forward_on_tape(&tape, &vars, &input, Some(0)).map_err(err)?;
        let tangent = tangent.ok_or("tangent not recorded")?;
        for k in 0..out.len() {
            let grad = tape.parameter_gradient(&vars, out[k]).map_err(err)?;
            let grad_dot = tape.parameter_gradient(&vars, tangent[k]).map_err(err)?;
            let mut fd = Vec::with_capacity(params.len());
            let mut fd_dot = Vec::with_capacity(params.len());
            for i in 0..params.len() {
                let mut plus = params.clone();
                let mut minus = params.clone();
                plus[i] += h;
                minus[i] -= h;
                let np = net.with_parameters(&plus).map_err(err)?;
                let nm = net.with_parameters(&minus).map_err(err)?;
                fd.push((np.forward(&input).map_err(err)?[k] - nm.forward(&input).map_err(err)?[k]) / (2.0 * h));
                let tp = np.forward_tangent(&input, 0).map_err(err)?.1[k];
                let tm = nm.forward_tangent(&input, 0).map_err(err)?.1[k];
                fd_dot.push((tp - tm) / (2.0 * h));
            }
            worst = worst.max(rel_err(&grad, &fd)).max(rel_err(&grad_dot, &fd_dot));
        }

        // Forward-mode input derivatives.
        for j in 0..input.len() {
            let (_, dir) = net.forward_tangent(&input, j).map_err(err)?;
            let mut plus = input.clone();
            let mut minus = input.clone();
            plus[j] += h;
            minus[j] -= h;
            let fp = net.forward(&plus).map_err(err)?;
            let fm = net.forward(&minus).map_err(err)?;
            let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            worst = worst.max(rel_err(&dir, &fd));
        }
    }
    Ok(outcome(worst <= 1e-6, format!("worst relative error {worst:.3e} over 20 nets")))
}

fn criterion_lipschitz() -> Check {
    let problem = decay_1d();
    let colloc = sample_collocation(&problem, 200, 0).map_err(err)?;
    let decay = estimate_lipschitz(&problem, &colloc).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let n = rng.gen_range(1..=4);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let system = linear(Matrix::from_rows(&rows), 1.0, vec![(-1.0, 1.0); n]).map_err(err)?;
        let points = sample_collocation(&system, 20, rng.gen()).map_err(err)?;
        let estimate = estimate_lipschitz(&system, &points).map_err(err)?;
        let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let oracle = (a.transpose() * &a)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(0.0, f64::max)
            .sqrt();
        worst = worst.max((estimate - oracle).abs());
    }
    let decay_dev = (decay - 2.0).abs();
    Ok(outcome(
        decay_dev <= 1e-12 && worst <= 1e-10,
        format!("decay estimate {decay}, worst deviation from the JᵀJ oracle {worst:.3e}"),
    ))
}

fn criterion_pendulum(out: &Path) -> Check {
    let mut config = ExperimentConfig::pendulum(true);
    config.certify.intervals = Some(5);
    config.certify.times_per_interval = 20;
    let start = Instant::now();
    let train = cmd_train(&config, out).map_err(err)?;
    let options = CertifyOptions {
        with_reference: true,
        ..Default::default()
    };
    let report = cmd_certify(&config, out, &options).map_err(err)?;
    let seconds = start.elapsed().as_secs_f64();
    let violations = report.violations.ok_or("no reference column")?;
    Ok(outcome(
        violations == 0 && report.rows == 100 && seconds <= 1800.0,
        format!(
            "{violations} violations on {} rows, final loss {:.3e}, max total {:.3e}, {seconds:.1} s",
            report.rows, train.final_loss.total, report.max_total
        ),
    ))
}

fn criterion_surrogate(out: &Path, weight_one: &Path) -> Check {
    let config = ExperimentConfig::decay1d();
    let heavy = cmd_surrogate(&config, out, &SurrogateOptions::default()).map_err(err)?;
    let mut light_config = config.clone();
    light_config.surrogate.under_weight = 1.0;
    let options = SurrogateOptions {
        network: Some(out.join(NETWORK_FILE)),
        data: Some(out.join(pinn_cert_cli::commands::SURROGATE_DATA_FILE)),
    };
    let light = cmd_surrogate(&light_config, weight_one, &options).map_err(err)?;
    Ok(outcome(
        heavy.training_points == 100
            && heavy.evaluation_points == 200
            && heavy.overestimation_fraction >= heavy.wrap_target
            && light.overestimation_fraction < heavy.overestimation_fraction,
        format!(
            "overestimation {:.1}% with weight 1000 (target {:.0}%), {:.1}% with weight 1",
            100.0 * heavy.overestimation_fraction,
            100.0 * heavy.wrap_target,
            100.0 * light.overestimation_fraction
        ),
    ))
}

fn criterion_determinism(first: &Path, second: &Path) -> Check {
    decay_run(second)?;
    cmd_surrogate(&ExperimentConfig::decay1d(), second, &SurrogateOptions::default()).map_err(err)?;
    let mut names: Vec<String> = std::fs::read_dir(first)
        .map_err(err)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    names.sort();
    let mut differing = Vec::new();
    for name in &names {
        let a = std::fs::read(first.join(name)).map_err(err)?;
        let b = std::fs::read(second.join(name)).unwrap_or_default();
        if a != b {
            differing.push(name.clone());
        }
    }
    Ok(outcome(
        differing.is_empty() && !names.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts byte-identical", names.len())
        } else {
            format!("differing artifacts: {differing:?}")
        },
    ))
}

fn report(failed: &mut usize, number: usize, title: &str, check: Check) {
    let (passed, detail) = match check {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if !passed {
        *failed += 1;
    }
    println!("criterion {number} [{}] {title}: {detail}", if passed { "PASS" } else { "FAIL" });
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().expect("temporary directory");
    let decay = root.path().join("decay");
    let decay_weight_one = root.path().join("decay_weight_one");
    let decay_repeat = root.path().join("decay_repeat");
    let pendulum = root.path().join("pendulum");
    let mut failed = 0;

    let run = decay_run(&decay);
    match run {
        Ok(seconds) => {
            report(&mut failed, 1, "rigor on decay", criterion_rigor_decay(&decay, seconds));
            report(&mut failed, 2, "tightness on decay", criterion_tightness(&decay));
        }
        Err(e) => {
            report(&mut failed, 1, "rigor on decay", Err(e.clone()));
            report(&mut failed, 2, "tightness on decay", Err(e));
        }
    }
    report(&mut failed, 3, "quadrature certificate", criterion_quadrature());
    report(&mut failed, 4, "subinterval count", criterion_subintervals(&decay));
    report(&mut failed, 5, "differentiation", criterion_differentiation());
    report(&mut failed, 6, "Lipschitz estimator", criterion_lipschitz());
    report(&mut failed, 7, "pendulum at desk scale", criterion_pendulum(&pendulum));
    report(&mut failed, 8, "surrogate wrapping", criterion_surrogate(&decay, &decay_weight_one));
    report(&mut failed, 9, "determinism", criterion_determinism(&decay, &decay_repeat));

    if failed == 0 {
        println!("all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
