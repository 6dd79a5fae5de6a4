use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pinn_cert_cli::{
    cmd_certify, cmd_compare, cmd_surrogate, cmd_train, exit_code, CertifyOptions, ExperimentConfig, Preset,
    SurrogateOptions,
};

#[derive(Parser)]
#[command(name = "pinn-cert", version, about = "Train physics-informed networks and certify their errors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file overlaid on the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Reduced pendulum settings that run on a single core in minutes.
    #[arg(long)]
    desk_scale: bool,
}

impl Common {
    fn resolve(&self) -> pinn_cert::Result<ExperimentConfig> {
        ExperimentConfig::resolve(self.config.as_deref(), self.preset, self.desk_scale, self.seed)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the network and write network.json and loss.csv.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Certify the query grid or control schedule and write certificates.csv.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Trained network (default: <out>/network.json).
        #[arg(long)]
        network: Option<PathBuf>,
        /// Control schedule CSV for the pendulum (default: bundled stabilizing schedule).
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Add the reference error column.
        #[arg(long)]
        with_reference: bool,
    },
    /// Train the error indicator and write error_net.json and comparison.csv.
    Surrogate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        network: Option<PathBuf>,
        /// Reuse a surrogate_data.csv instead of generating one.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Summarize certificates and, optionally, a surrogate comparison.
    Compare {
        #[arg(long)]
        certificates: PathBuf,
        /// comparison.csv on the same time grid.
        #[arg(long)]
        surrogate: Option<PathBuf>,
        /// Overestimation factors consider rows with t >= this value.
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
    },
}

fn run(cli: Cli) -> pinn_cert::Result<String> {
    Ok(match cli.command {
        Command::Train { common } => cmd_train(&common.resolve()?, &common.out)?.to_string(),
        Command::Certify {
            common,
            network,
            schedule,
            with_reference,
        } => {
            let options = CertifyOptions {
                network,
                schedule,
                with_reference,
            };
            cmd_certify(&common.resolve()?, &common.out, &options)?.to_string()
        }
        Command::Surrogate { common, network, data } => {
            let options = SurrogateOptions { network, data };
            cmd_surrogate(&common.resolve()?, &common.out, &options)?.to_string()
        }
        Command::Compare {
            certificates,
            surrogate,
            t_min,
        } => cmd_compare(&certificates, surrogate.as_deref(), t_min)?.to_string(),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
