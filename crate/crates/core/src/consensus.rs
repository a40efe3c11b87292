//! Analytic success rates of a four-phase PBFT round over lossy links.
//!
//! Each node-to-node delivery in a phase is an independent Bernoulli trial
//! that succeeds with probability `ps`. Failures accumulate across
//! pre-prepare, prepare, commit and reply and are charged against a single
//! budget `f`. Receiver populations per phase are
//!
//! | phase       | receivers       | failures allowed |
//! |-------------|-----------------|------------------|
//! | pre-prepare | `n-1`           | `f`              |
//! | prepare     | `n-1-i`         | `f-i`            |
//! | commit      | `n-i-j`         | `f-i-j`          |
//! | reply       | `n-i-j-k`       | `f-i-j-k`        |
//!
//! Commit and reply do not subtract the primary, since it also broadcasts
//! its commit.

use crate::error::{Error, Result};
use crate::numerics::{binomial_cdf, binomial_pmf};

/// Node count and tolerated faults with `n = 3f + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FaultBudget {
    node_count: u64,
    fault_tolerance: u64,
}

impl FaultBudget {
    pub fn new(node_count: u64) -> Result<Self> {
        if node_count < 4 {
            return Err(Error::invalid(format!(
                "node count must be at least 4, got {node_count}"
            )));
        }
        if (node_count - 1) % 3 != 0 {
            return Err(Error::invalid(format!(
                "n must equal 3f+1, got n = {node_count}"
            )));
        }
        Ok(FaultBudget {
            node_count,
            fault_tolerance: (node_count - 1) / 3,
        })
    }

    pub fn from_fault_tolerance(fault_tolerance: u64) -> Result<Self> {
        Self::new(3 * fault_tolerance + 1)
    }

    pub fn node_count(&self) -> u64 {
        self.node_count
    }

    pub fn fault_tolerance(&self) -> u64 {
        self.fault_tolerance
    }
}

/// Per-phase and end-to-end success probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageReport {
    pub pre_prepare: f64,
    pub prepare: f64,
    pub commit: f64,
    pub reply: f64,
    pub consensus: f64,
}

fn check_ps(ps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ps) {
        return Err(Error::domain(format!("link success must lie in [0, 1], got {ps}")));
    }
    Ok(())
}

fn remaining_budget(budget: &FaultBudget, spent: u64) -> Result<u64> {
    budget.fault_tolerance.checked_sub(spent).ok_or_else(|| {
        Error::domain(format!(
            "prior failures ({spent}) exceed the fault budget f = {}",
            budget.fault_tolerance
        ))
    })
}

pub fn stage_pre_prepare(budget: &FaultBudget, ps: f64) -> Result<f64> {
    check_ps(ps)?;
    Ok(binomial_cdf(budget.node_count - 1, budget.fault_tolerance, 1.0 - ps))
}

pub fn stage_prepare(budget: &FaultBudget, i: u64, ps: f64) -> Result<f64> {
    check_ps(ps)?;
    let allowed = remaining_budget(budget, i)?;
    Ok(binomial_cdf(budget.node_count - 1 - i, allowed, 1.0 - ps))
}

pub fn stage_commit(budget: &FaultBudget, i: u64, j: u64, ps: f64) -> Result<f64> {
    check_ps(ps)?;
    let allowed = remaining_budget(budget, i + j)?;
    Ok(binomial_cdf(budget.node_count - i - j, allowed, 1.0 - ps))
}

pub fn stage_reply(budget: &FaultBudget, i: u64, j: u64, k: u64, ps: f64) -> Result<f64> {
    check_ps(ps)?;
    let allowed = remaining_budget(budget, i + j + k)?;
    Ok(binomial_cdf(budget.node_count - i - j - k, allowed, 1.0 - ps))
}

/// Probability that all four phases finish within the cumulative budget.
///
/// Innermost reply sums are collapsed into a CDF, leaving `O(f³)` CDF calls.
pub fn consensus_success(budget: &FaultBudget, ps: f64) -> Result<f64> {
    check_ps(ps)?;
    let n = budget.node_count;
    let f = budget.fault_tolerance;
    let q = 1.0 - ps;

    let mut total = 0.0;
    for i in 0..=f {
        let w_i = binomial_pmf(n - 1, i, q);
        if w_i == 0.0 {
            continue;
        }
        let mut sum_j = 0.0;
        for j in 0..=(f - i) {
            let w_j = binomial_pmf(n - 1 - i, j, q);
            if w_j == 0.0 {
                continue;
            }
            let mut sum_k = 0.0;
            for k in 0..=(f - i - j) {
                let w_k = binomial_pmf(n - i - j, k, q);
                if w_k == 0.0 {
                    continue;
                }
                sum_k += w_k * binomial_cdf(n - i - j - k, f - i - j - k, q);
            }
            sum_j += w_j * sum_k;
        }
        total += w_i * sum_j;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Per-phase rates assuming no failures in earlier phases, plus the nested
/// end-to-end rate.
pub fn marginal_stage_rates(budget: &FaultBudget, ps: f64) -> Result<StageReport> {
    Ok(StageReport {
        pre_prepare: stage_pre_prepare(budget, ps)?,
        prepare: stage_prepare(budget, 0, ps)?,
        commit: stage_commit(budget, 0, 0, ps)?,
        reply: stage_reply(budget, 0, 0, 0, ps)?,
        consensus: consensus_success(budget, ps)?,
    })
}
