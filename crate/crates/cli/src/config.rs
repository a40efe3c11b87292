//! Experiment configuration.
//!
//! Specs are TOML. Every key is optional; an empty file yields
//! [`ExperimentSpec::default`]:
//!
//! ```toml
//! signals = ["thz-0.22", "mmwave-28"]
//! n_values = [4, 7, 10]
//! outputs = ["ps", "stages", "consensus", "delays", "sim"]
//! threshold_unit = "db"          # or "linear"
//! eq11 = "printed"               # or "normalized"
//!
//! [[settings]]
//! snr_threshold = 6.0
//! density = 2.0
//!
//! [sim]
//! trials = 10000
//! seed = 1
//! mode = "iid-link"              # or "geometric"
//! confidence_level = 0.99
//!
//! [profiles.sub-thz]             # custom profile, usable in `signals`
//! transmit_power = 1.0
//! noise_power = 0.2
//! bandwidth = 5e9
//! capacity = 40e9
//! rate = 20e9
//! path_loss_exponent = 2.0
//! carrier_frequency = 0.14e12
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use wpbft_core::channel::linear_to_db;
use wpbft_core::latency::{DelayModel, Eq11Form};
use wpbft_core::simulator::{SimConfig, SimMode};
use wpbft_core::SignalProfile;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdUnit {
    #[default]
    Db,
    Linear,
}

/// One `(z, γ)` operating point. `snr_threshold` is in the spec's threshold
/// unit.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Setting {
    pub snr_threshold: f64,
    pub density: f64,
}

impl Setting {
    pub fn threshold_db(&self, unit: ThresholdUnit) -> f64 {
        match unit {
            ThresholdUnit::Db => self.snr_threshold,
            ThresholdUnit::Linear => linear_to_db(self.snr_threshold),
        }
    }
}

/// Column groups of the sweep table, in emission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputGroup {
    Ps,
    Stages,
    Consensus,
    Delays,
    Sim,
}

impl OutputGroup {
    pub const ALL: [OutputGroup; 5] = [
        OutputGroup::Ps,
        OutputGroup::Stages,
        OutputGroup::Consensus,
        OutputGroup::Delays,
        OutputGroup::Sim,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub config: SimConfig,
    /// Reuse receiver positions across phases within a trial.
    pub fixed_positions: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub profiles: Vec<SignalProfile>,
    pub settings: Vec<Setting>,
    pub threshold_unit: ThresholdUnit,
    pub n_values: Vec<u64>,
    pub sim: Option<SimSettings>,
    pub outputs: Vec<OutputGroup>,
    pub delay_model: DelayModel,
}

pub fn default_settings() -> Vec<Setting> {
    vec![
        Setting { snr_threshold: 6.0, density: 2.0 },
        Setting { snr_threshold: 6.0, density: 5.0 },
        Setting { snr_threshold: 4.0, density: 5.0 },
    ]
}

pub fn default_n_values() -> Vec<u64> {
    (4..=100).step_by(3).collect()
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            profiles: vec![SignalProfile::thz(), SignalProfile::mmwave()],
            settings: default_settings(),
            threshold_unit: ThresholdUnit::Db,
            n_values: default_n_values(),
            sim: None,
            outputs: OutputGroup::ALL[..4].to_vec(),
            delay_model: DelayModel::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.profiles.is_empty() {
            return Err(CliError::Config("at least one signal profile is required".into()));
        }
        if self.settings.is_empty() {
            return Err(CliError::Config("at least one (threshold, density) setting is required".into()));
        }
        for s in &self.settings {
            if !(s.density > 0.0) || !s.density.is_finite() {
                return Err(CliError::Config(format!("density must be > 0, got {}", s.density)));
            }
            let db = s.threshold_db(self.threshold_unit);
            if db.is_nan() || db == f64::INFINITY {
                return Err(CliError::Config(format!(
                    "snr threshold {} is not usable in unit {:?}",
                    s.snr_threshold, self.threshold_unit
                )));
            }
        }
        if self.n_values.is_empty() {
            return Err(CliError::Config("n_values must not be empty".into()));
        }
        for &n in &self.n_values {
            if n < 4 || (n - 1) % 3 != 0 {
                return Err(CliError::Config(format!("n must equal 3f+1 with f >= 1, got n = {n}")));
            }
        }
        if self.outputs.is_empty() {
            return Err(CliError::Config("outputs must not be empty".into()));
        }
        if self.outputs.contains(&OutputGroup::Sim) && self.sim.is_none() {
            return Err(CliError::Config("output \"sim\" requested without a [sim] section".into()));
        }
        if let Some(sim) = &self.sim {
            if sim.config.trials == 0 {
                return Err(CliError::Config("sim.trials must be at least 1".into()));
            }
            let cl = sim.config.confidence_level;
            if !(cl > 0.0 && cl < 1.0) {
                return Err(CliError::Config(format!("sim.confidence_level must lie in (0, 1), got {cl}")));
            }
        }
        Ok(())
    }

    /// Turns on simulation with default settings if it is off, and adds the
    /// sim columns.
    pub fn enable_sim(&mut self) -> &mut SimSettings {
        if !self.outputs.contains(&OutputGroup::Sim) {
            self.outputs.push(OutputGroup::Sim);
        }
        self.sim.get_or_insert(SimSettings {
            config: SimConfig::new(10_000, 1),
            fixed_positions: false,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    transmit_power: f64,
    noise_power: f64,
    bandwidth: f64,
    capacity: f64,
    rate: f64,
    path_loss_exponent: f64,
    carrier_frequency: f64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RawMode {
    IidLink,
    Geometric,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    trials: Option<u64>,
    seed: Option<u64>,
    mode: Option<RawMode>,
    confidence_level: Option<f64>,
    fixed_positions: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawEq11 {
    Printed,
    Normalized,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    signals: Option<Vec<String>>,
    settings: Option<Vec<Setting>>,
    n_values: Option<Vec<u64>>,
    outputs: Option<Vec<OutputGroup>>,
    threshold_unit: Option<ThresholdUnit>,
    eq11: Option<RawEq11>,
    sim: Option<RawSim>,
    #[serde(default)]
    profiles: BTreeMap<String, RawProfile>,
}

/// Parses and validates a spec from TOML text.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, CliError> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let mut spec = ExperimentSpec::default();

    let mut custom = BTreeMap::new();
    for (name, p) in raw.profiles {
        if SignalProfile::preset(&name).is_some() {
            return Err(CliError::Config(format!("profile {name} shadows a built-in preset")));
        }
        let profile = SignalProfile::new(
            name.clone(),
            p.transmit_power,
            p.noise_power,
            p.bandwidth,
            p.capacity,
            p.rate,
            p.path_loss_exponent,
            p.carrier_frequency,
        )
        .map_err(|e| CliError::Config(format!("profiles.{name}: {e}")))?;
        custom.insert(name, profile);
    }
    if let Some(names) = raw.signals {
        spec.profiles = names
            .iter()
            .map(|name| {
                SignalProfile::preset(name)
                    .or_else(|| custom.get(name).cloned())
                    .ok_or_else(|| {
                        CliError::Config(format!(
                            "unknown signal profile {name:?} (built-in: {})",
                            SignalProfile::preset_names().join(", ")
                        ))
                    })
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(settings) = raw.settings {
        spec.settings = settings;
    }
    if let Some(n_values) = raw.n_values {
        spec.n_values = n_values;
    }
    if let Some(unit) = raw.threshold_unit {
        spec.threshold_unit = unit;
    }
    if let Some(form) = raw.eq11 {
        spec.delay_model.form = match form {
            RawEq11::Printed => Eq11Form::Printed,
            RawEq11::Normalized => Eq11Form::Normalized,
        };
    }
    if let Some(sim) = raw.sim {
        let mut config = SimConfig::new(sim.trials.unwrap_or(10_000), sim.seed.unwrap_or(1));
        if let Some(mode) = sim.mode {
            config.mode = match mode {
                RawMode::IidLink => SimMode::IidLink,
                RawMode::Geometric => SimMode::Geometric,
            };
        }
        if let Some(cl) = sim.confidence_level {
            config.confidence_level = cl;
        }
        spec.sim = Some(SimSettings {
            config,
            fixed_positions: sim.fixed_positions.unwrap_or(false),
        });
    }
    match raw.outputs {
        Some(mut outputs) => {
            outputs.sort();
            outputs.dedup();
            spec.outputs = outputs;
        }
        None if spec.sim.is_some() => spec.outputs = OutputGroup::ALL.to_vec(),
        None => {}
    }
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
