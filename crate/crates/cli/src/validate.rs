//! Simulator-versus-analytic agreement suite.

use rayon::prelude::*;

use wpbft_core::consensus::{consensus_success, FaultBudget};
use wpbft_core::simulator::{estimate_consensus_rate, LinkModel, SimConfig, SimEstimate};

use crate::error::CliError;

pub const GRID_NODES: [u64; 4] = [4, 7, 10, 13];
pub const GRID_LINK_SUCCESS: [f64; 3] = [0.8, 0.9, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementCheck {
    pub n: u64,
    pub ps: f64,
    pub analytic: f64,
    pub estimate: SimEstimate,
}

impl AgreementCheck {
    pub fn passed(&self) -> bool {
        self.estimate.contains(self.analytic)
    }

    pub fn line(&self) -> String {
        format!(
            "{} n={} ps={} analytic={:.6} sim={:.6} ci=[{:.6}, {:.6}]",
            if self.passed() { "PASS" } else { "FAIL" },
            self.n,
            self.ps,
            self.analytic,
            self.estimate.p_hat,
            self.estimate.ci_low,
            self.estimate.ci_high
        )
    }
}

/// Runs the iid-link simulator on every grid point. Point `k` uses seed
/// `seed + k`.
pub fn agreement_grid(trials: u64, seed: u64, confidence_level: f64) -> Result<Vec<AgreementCheck>, CliError> {
    let points: Vec<(u64, f64)> = GRID_NODES
        .iter()
        .flat_map(|&n| GRID_LINK_SUCCESS.iter().map(move |&ps| (n, ps)))
        .collect();
    points
        .par_iter()
        .enumerate()
        .map(|(k, &(n, ps))| {
            let budget = FaultBudget::new(n)?;
            let mut config = SimConfig::new(trials, seed.wrapping_add(k as u64));
            config.confidence_level = confidence_level;
            let estimate = estimate_consensus_rate(&config, &budget, &LinkModel::Fixed { ps })?;
            Ok(AgreementCheck {
                n,
                ps,
                analytic: consensus_success(&budget, ps)?,
                estimate,
            })
        })
        .collect()
}
