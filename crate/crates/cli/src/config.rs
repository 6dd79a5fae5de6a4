use std::path::Path;

use serde::{Deserialize, Serialize};

use pinn_cert::autodiff::Activation;
use pinn_cert::certify::{
    BoundMode, Calibration, DEFAULT_EPS, DEFAULT_K_GRID, DEFAULT_K_SAFETY, DEFAULT_MAX_SUBINTERVALS,
};
use pinn_cert::ode::{decay_1d, inverted_pendulum, OdeProblem};
use pinn_cert::train::{Eta, Optimizer, TrainingRun};
use pinn_cert::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Decay1d,
    Pendulum,
}

impl Preset {
    pub fn problem(self) -> OdeProblem {
        match self {
            Preset::Decay1d => decay_1d(),
            Preset::Pendulum => inverted_pendulum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Scale first-layer weights by the inverse input ranges after
    /// initialization.
    pub scale_inputs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub collocation: usize,
    /// Reference-solution samples added to the initial-value anchors.
    pub reference_samples: usize,
    pub gamma_data: f64,
    pub gamma_phys: f64,
    pub eta: Eta,
    pub optimizer: Optimizer,
    pub epochs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuRule {
    TenthOfMean,
}

/// μ as a rule name or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSetting {
    Explicit(f64),
    Rule(MuRule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub mode: BoundMode,
    pub eps: f64,
    pub mu: MuSetting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Lipschitz sampling density relative to the training collocation.
    pub lipschitz_density: usize,
    pub k_grid: usize,
    pub k_safety: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subintervals: Option<usize>,
    pub max_subintervals: usize,
    /// Query grid size for problems certified on a time grid.
    pub grid_points: usize,
    /// End of the query grid; defaults to the horizon end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Leading schedule intervals to certify; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
    pub times_per_interval: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateSection {
    pub count: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub under_weight: f64,
    /// Size of the held-out evaluation set written to the comparison CSV.
    pub eval_points: usize,
    /// Share of evaluation points the indicator should wrap from above.
    pub wrap_target: f64,
}

/// Everything that determines an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub desk_scale: bool,
    pub seed: u64,
    pub network: NetworkSection,
    pub training: TrainingSection,
    pub certify: CertifySection,
    pub surrogate: SurrogateSection,
}

/// Offsets from the master seed for each random stream.
pub mod streams {
    pub const NETWORK: u64 = 0;
    pub const COLLOCATION: u64 = 0;
    pub const REFERENCE_DATA: u64 = 1;
    pub const LIPSCHITZ: u64 = 2;
    pub const SURROGATE_DATA: u64 = 3;
    pub const SURROGATE_INIT: u64 = 4;
    pub const SURROGATE_EVAL: u64 = 5;
}

impl ExperimentConfig {
    /// The 1D decay preset: a 1-4-4-1 tanh network, 200 collocation points
    /// and 5000 adam epochs, certified with the semigroup bound. The error
    /// indicator is a 1-4-4-1 tanh network fitted with 20 000 L-BFGS epochs
    /// on 100 certified points.
    pub fn decay1d() -> Self {
        ExperimentConfig {
            preset: Preset::Decay1d,
            desk_scale: false,
            seed: 17,
            network: NetworkSection {
                hidden: vec![4, 4],
                activation: Activation::Tanh,
                scale_inputs: false,
            },
            training: TrainingSection {
                collocation: 200,
                reference_samples: 0,
                gamma_data: 1.0,
                gamma_phys: 1.0,
                eta: Eta::Constant(1.0),
                optimizer: Optimizer::adam(1e-2),
                epochs: 5000,
            },
            certify: CertifySection {
                mode: BoundMode::Linear,
                eps: DEFAULT_EPS,
                mu: MuSetting::Rule(MuRule::TenthOfMean),
                lipschitz: None,
                lipschitz_density: 2,
                k_grid: DEFAULT_K_GRID,
                k_safety: DEFAULT_K_SAFETY,
                subintervals: None,
                max_subintervals: DEFAULT_MAX_SUBINTERVALS,
                grid_points: 101,
                t_max: None,
                intervals: None,
                times_per_interval: 20,
            },
            surrogate: SurrogateSection {
                count: 100,
                hidden: vec![4, 4],
                activation: Activation::Tanh,
                optimizer: Optimizer::lbfgs(),
                epochs: 20_000,
                under_weight: 1000.0,
                eval_points: 200,
                wrap_target: 0.95,
            },
        }
    }

    /// The pendulum preset. Full scale is 10 000 collocation points and
    /// 100 000 L-BFGS epochs; desk scale trains far less and is meant for
    /// checking rigor, not accuracy.
    pub fn pendulum(desk_scale: bool) -> Self {
        let (collocation, optimizer, epochs) = if desk_scale {
            (500, Optimizer::adam(1e-3), 1500)
        } else {
            (10_000, Optimizer::lbfgs(), 100_000)
        };
        let (count, hidden, sur_epochs) = if desk_scale {
            (400, vec![32, 32], 500)
        } else {
            (25_000, vec![32; 8], 100_000)
        };
        ExperimentConfig {
            preset: Preset::Pendulum,
            desk_scale,
            seed: 0,
            network: NetworkSection {
                hidden: vec![32; 4],
                activation: Activation::Tanh,
                scale_inputs: true,
            },
            training: TrainingSection {
                collocation,
                reference_samples: 50,
                gamma_data: 1.0,
                gamma_phys: 1.0,
                eta: Eta::Constant(1.0),
                optimizer,
                epochs,
            },
            certify: CertifySection {
                mode: BoundMode::Nonlinear,
                eps: DEFAULT_EPS,
                mu: MuSetting::Rule(MuRule::TenthOfMean),
                lipschitz: None,
                lipschitz_density: 2,
                k_grid: DEFAULT_K_GRID,
                k_safety: DEFAULT_K_SAFETY,
                subintervals: None,
                max_subintervals: DEFAULT_MAX_SUBINTERVALS,
                grid_points: 101,
                t_max: None,
                intervals: None,
                times_per_interval: 20,
            },
            surrogate: SurrogateSection {
                count,
                hidden,
                activation: Activation::Tanh,
                optimizer: Optimizer::lbfgs(),
                epochs: sur_epochs,
                under_weight: 1.0,
                eval_points: 200,
                wrap_target: 0.95,
            },
        }
    }

    pub fn preset(preset: Preset, desk_scale: bool) -> Self {
        match preset {
            Preset::Decay1d => Self::decay1d(),
            Preset::Pendulum => Self::pendulum(desk_scale),
        }
    }

    /// Resolves a configuration: the preset named by the flag or the file
    /// (decay1d otherwise), overlaid with the file's entries, then with the
    /// seed flag.
    pub fn resolve(
        file: Option<&Path>,
        preset: Option<Preset>,
        desk_scale: bool,
        seed: Option<u64>,
    ) -> Result<Self> {
        let overlay = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Some(
                    text.parse::<toml::Table>()
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
                )
            }
            None => None,
        };
        let file_preset = match overlay.as_ref().and_then(|t| t.get("preset")) {
            Some(v) => Some(
                Preset::deserialize(v.clone())
                    .map_err(|e| Error::Config(format!("invalid preset: {e}")))?,
            ),
            None => None,
        };
        let file_desk = overlay
            .as_ref()
            .and_then(|t| t.get("desk_scale"))
            .and_then(toml::Value::as_bool)
            .unwrap_or(false);
        let chosen = preset.or(file_preset).unwrap_or(Preset::Decay1d);
        let desk = desk_scale || file_desk;
        let mut base = toml::Table::try_from(Self::preset(chosen, desk))
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(overlay) = overlay {
            merge(&mut base, overlay);
        }
        base.insert("preset".into(), toml::Value::try_from(chosen).expect("preset serializes"));
        base.insert("desk_scale".into(), toml::Value::Boolean(desk));
        if let Some(seed) = seed {
            base.insert("seed".into(), toml::Value::Integer(seed as i64));
        }
        let config: ExperimentConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e| Error::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.network.hidden.iter().any(|&w| w == 0) || self.surrogate.hidden.iter().any(|&w| w == 0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        if self.training.collocation == 0 {
            return Err(Error::Config("training.collocation must be at least 1".into()));
        }
        self.training_run().validate()?;
        if self.certify.grid_points < 2 {
            return Err(Error::Config("certify.grid_points must be at least 2".into()));
        }
        if self.certify.times_per_interval == 0 {
            return Err(Error::Config("certify.times_per_interval must be at least 1".into()));
        }
        if let MuSetting::Explicit(mu) = self.certify.mu {
            if !(mu >= 0.0) {
                return Err(Error::Config(format!("certify.mu must be non-negative, got {mu}")));
            }
        }
        if let Some(t) = self.certify.t_max {
            if !(t > 0.0) {
                return Err(Error::Config(format!("certify.t_max must be positive, got {t}")));
            }
        }
        if self.surrogate.count == 0 || self.surrogate.eval_points == 0 {
            return Err(Error::Config("surrogate counts must be at least 1".into()));
        }
        if !(self.surrogate.under_weight >= 1.0) {
            return Err(Error::Config("surrogate.under_weight must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.surrogate.wrap_target) {
            return Err(Error::Config("surrogate.wrap_target must lie in [0, 1]".into()));
        }
        self.surrogate.optimizer.validate()
    }

    pub fn problem(&self) -> OdeProblem {
        self.preset.problem()
    }

    pub fn layer_dims(&self, problem: &OdeProblem) -> Vec<usize> {
        let mut dims = vec![problem.network_input_dim()];
        dims.extend_from_slice(&self.network.hidden);
        dims.push(problem.dim());
        dims
    }

    pub fn training_run(&self) -> TrainingRun {
        TrainingRun {
            gamma_data: self.training.gamma_data,
            gamma_phys: self.training.gamma_phys,
            eta: self.training.eta.clone(),
            optimizer: self.training.optimizer,
            epochs: self.training.epochs,
            seed: self.seed,
        }
    }

    pub fn calibration(&self) -> Calibration {
        Calibration {
            mode: self.certify.mode,
            eps: self.certify.eps,
            mu: match self.certify.mu {
                MuSetting::Explicit(mu) => Some(mu),
                MuSetting::Rule(MuRule::TenthOfMean) => None,
            },
            lipschitz: self.certify.lipschitz,
            lipschitz_seed: self.seed.wrapping_add(streams::LIPSCHITZ),
            lipschitz_density: self.certify.lipschitz_density,
            k_grid: self.certify.k_grid,
            k_safety: self.certify.k_safety,
            subintervals: self.certify.subintervals,
            max_subintervals: self.certify.max_subintervals,
        }
    }
}

/// Recursively overlays `overlay` onto `base`; tables merge, other values
/// replace.
fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}
