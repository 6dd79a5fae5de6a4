//! Experiment driver for physics-informed networks with certified error
//! bounds: configuration, the decay and pendulum presets, and the `train`,
//! `certify`, `surrogate` and `compare` subcommands.

pub mod commands;
pub mod config;
pub mod schedule;

pub use commands::{
    cmd_certify, cmd_compare, cmd_surrogate, cmd_train, CertifyOptions, CertifyReport, CompareReport,
    SurrogateOptions, SurrogateReport, TrainReport,
};
pub use config::{ExperimentConfig, Preset};
pub use schedule::Schedule;

/// Process exit code for a failed command: 3 for numeric failures, 2 for
/// everything caused by configuration or input.
pub fn exit_code(err: &pinn_cert::Error) -> i32 {
    if err.is_numeric() {
        3
    } else {
        2
    }
}
