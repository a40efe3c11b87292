use rayon::prelude::*;

use wpbft_core::channel::{avg_success_prob, NetworkGeometry};
use wpbft_core::consensus::{marginal_stage_rates, FaultBudget, StageReport};
use wpbft_core::latency::DelayReport;
use wpbft_core::simulator::{
    estimate_consensus_rate, GeometricLinks, LinkModel, SimConfig, SimEstimate, SimMode,
};
use wpbft_core::SignalProfile;

use crate::config::{ExperimentSpec, OutputGroup, Setting, SimSettings};
use crate::error::CliError;

/// One evaluated `(profile, setting, n)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub signal: String,
    pub z_db: f64,
    pub gamma: f64,
    pub n: u64,
    pub f: u64,
    pub ps: f64,
    pub stages: Option<StageReport>,
    pub delays: Option<DelayReport>,
    pub sim: Option<SimEstimate>,
}

// SplitMix64 finaliser; gives each row its own simulation key.
fn row_seed(seed: u64, row: u64) -> u64 {
    let mut z = seed ^ row.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Evaluates a single point.
pub fn evaluate_point(
    spec: &ExperimentSpec,
    profile: &SignalProfile,
    setting: &Setting,
    n: u64,
    row_index: u64,
) -> Result<SweepRow, CliError> {
    let z_db = setting.threshold_db(spec.threshold_unit);
    let budget = FaultBudget::new(n)?;
    let geometry = NetworkGeometry::new(n, setting.density, z_db)?;
    let ps = avg_success_prob(profile, &geometry)?;
    let wants = |g: OutputGroup| spec.outputs.contains(&g);

    let stages = if wants(OutputGroup::Stages) || wants(OutputGroup::Consensus) {
        Some(marginal_stage_rates(&budget, ps)?)
    } else {
        None
    };
    let delays = if wants(OutputGroup::Delays) {
        if ps >= 1.0 {
            return Err(CliError::Model(wpbft_core::Error::Domain(format!(
                "P_s = 1 for {} at z = {z_db} dB; delays are undefined",
                profile.name()
            ))));
        }
        Some(spec.delay_model.delay_report_for_ps(profile, n, ps)?)
    } else {
        None
    };
    let sim = match (&spec.sim, wants(OutputGroup::Sim)) {
        (Some(settings), true) => Some(simulate(settings, profile, geometry, &budget, ps, row_index)?),
        _ => None,
    };

    Ok(SweepRow {
        signal: profile.name().to_string(),
        z_db,
        gamma: setting.density,
        n,
        f: budget.fault_tolerance(),
        ps,
        stages,
        delays,
        sim,
    })
}

fn simulate(
    settings: &SimSettings,
    profile: &SignalProfile,
    geometry: NetworkGeometry,
    budget: &FaultBudget,
    ps: f64,
    row_index: u64,
) -> Result<SimEstimate, CliError> {
    let config = SimConfig {
        seed: row_seed(settings.config.seed, row_index),
        ..settings.config
    };
    let link = match config.mode {
        SimMode::IidLink => LinkModel::Fixed { ps },
        SimMode::Geometric => {
            let mut links = GeometricLinks::new(profile.clone(), geometry);
            links.fixed_positions = settings.fixed_positions;
            LinkModel::Geometric(links)
        }
    };
    Ok(estimate_consensus_rate(&config, budget, &link)?)
}

/// Evaluates every `(profile, setting, n)` in parallel; rows come back ordered
/// by profile, then setting, then `n` as listed in the spec.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>, CliError> {
    spec.validate()?;
    let points: Vec<(&SignalProfile, &Setting, u64)> = spec
        .profiles
        .iter()
        .flat_map(|p| {
            spec.settings
                .iter()
                .flat_map(move |s| spec.n_values.iter().map(move |&n| (p, s, n)))
        })
        .collect();
    points
        .par_iter()
        .enumerate()
        .map(|(idx, (p, s, n))| evaluate_point(spec, p, s, *n, idx as u64))
        .collect()
}
