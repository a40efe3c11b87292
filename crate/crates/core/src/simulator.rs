//! Seeded Monte Carlo estimator of the PBFT consensus rate.
//!
//! A trial replays the four-phase failure-counting process with one Bernoulli
//! draw per receiver and phase. Link outcomes come either from a fixed success
//! probability or from the geometric model, where every message redraws its
//! distance (density `2r/R²`) and Rayleigh power gain.
//!
//! Trial `t` of a run seeded with `s` uses the ChaCha stream `t` of key `s`, so
//! estimates do not depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{snr, NetworkGeometry, SignalProfile};
use crate::consensus::FaultBudget;
use crate::error::{Error, Result};
use crate::numerics::q_inverse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    PrePrepare,
    Prepare,
    Commit,
    Reply,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::PrePrepare, Stage::Prepare, Stage::Commit, Stage::Reply];

    pub fn name(self) -> &'static str {
        match self {
            Stage::PrePrepare => "pre-prepare",
            Stage::Prepare => "prepare",
            Stage::Commit => "commit",
            Stage::Reply => "reply",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimMode {
    #[default]
    IidLink,
    Geometric,
}

/// Power gain used by geometric links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingGain {
    /// Exp(1) draw per message.
    Rayleigh,
    Fixed(f64),
}

/// Geometric link model: random distance and fading per message.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricLinks {
    pub profile: SignalProfile,
    pub geometry: NetworkGeometry,
    pub fading: FadingGain,
    /// Sampled distances are clamped to at most this value.
    pub distance_cap: Option<f64>,
    /// Draw receiver distances once per trial and reuse them in every phase.
    /// Correlates phases; not part of the analytic model.
    pub fixed_positions: bool,
}

impl GeometricLinks {
    pub fn new(profile: SignalProfile, geometry: NetworkGeometry) -> Self {
        GeometricLinks {
            profile,
            geometry,
            fading: FadingGain::Rayleigh,
            distance_cap: None,
            fixed_positions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkModel {
    Fixed { ps: f64 },
    Geometric(GeometricLinks),
}

impl LinkModel {
    pub fn mode(&self) -> SimMode {
        match self {
            LinkModel::Fixed { .. } => SimMode::IidLink,
            LinkModel::Geometric(_) => SimMode::Geometric,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LinkModel::Fixed { ps } => {
                if !(0.0..=1.0).contains(ps) {
                    return Err(Error::invalid(format!("link success must lie in [0, 1], got {ps}")));
                }
            }
            LinkModel::Geometric(g) => {
                if let FadingGain::Fixed(h) = g.fading {
                    if !(h >= 0.0) || !h.is_finite() {
                        return Err(Error::invalid(format!("fixed fading gain must be >= 0, got {h}")));
                    }
                }
                if let Some(cap) = g.distance_cap {
                    if !(cap > 0.0) {
                        return Err(Error::invalid(format!("distance cap must be > 0, got {cap}")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub mode: SimMode,
    pub confidence_level: f64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        SimConfig {
            trials,
            seed,
            mode: SimMode::IidLink,
            confidence_level: 0.99,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::invalid(format!(
                "confidence level must lie in (0, 1), got {}",
                self.confidence_level
            )));
        }
        Ok(())
    }
}

/// Failure counts of one trial; `None` for phases never reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub success: bool,
    pub failures: [Option<u64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Per phase, `table[x]` counts trials that reached the phase and saw
    /// exactly `x` failures in it.
    pub stage_failure_histogram: [Vec<u64>; 4],
}

impl SimEstimate {
    pub fn histogram(&self, stage: Stage) -> &[u64] {
        &self.stage_failure_histogram[stage.index()]
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Inverse-CDF map for the disk distance density `2r/R²`.
pub fn distance_from_uniform(radius: f64, u: f64) -> f64 {
    radius * u.sqrt()
}

/// Inverse-CDF map for Exp(1).
pub fn fading_from_uniform(u: f64) -> f64 {
    -u.ln()
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

pub fn sample_distance<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> f64 {
    distance_from_uniform(radius, open_unit(rng))
}

pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    fading_from_uniform(open_unit(rng))
}

/// Random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

struct LinkSampler<'a> {
    model: &'a LinkModel,
    z_linear: f64,
    radius: f64,
}

impl<'a> LinkSampler<'a> {
    fn new(model: &'a LinkModel) -> Self {
        match model {
            LinkModel::Fixed { .. } => LinkSampler {
                model,
                z_linear: 0.0,
                radius: 0.0,
            },
            LinkModel::Geometric(g) => LinkSampler {
                model,
                z_linear: g.geometry.z_linear(),
                radius: g.geometry.radius(),
            },
        }
    }

    fn distance<R: Rng + ?Sized>(&self, g: &GeometricLinks, rng: &mut R) -> f64 {
        let r = sample_distance(rng, self.radius);
        match g.distance_cap {
            Some(cap) => r.min(cap),
            None => r,
        }
    }

    fn delivered_at<R: Rng + ?Sized>(&self, g: &GeometricLinks, distance: f64, rng: &mut R) -> bool {
        if self.z_linear == 0.0 {
            return true;
        }
        let h = match g.fading {
            FadingGain::Rayleigh => sample_fading(rng),
            FadingGain::Fixed(h) => h,
        };
        snr(&g.profile, h, distance).map(|s| s > self.z_linear).unwrap_or(false)
    }

    fn delivered<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        match self.model {
            LinkModel::Fixed { ps } => rng.random::<f64>() < *ps,
            LinkModel::Geometric(g) => {
                let d = self.distance(g, rng);
                self.delivered_at(g, d, rng)
            }
        }
    }

    fn count_failures<R: Rng + ?Sized>(&self, population: u64, rng: &mut R) -> u64 {
        (0..population).filter(|_| !self.delivered(rng)).count() as u64
    }
}

fn finish(failures: [Option<u64>; 4], success: bool) -> TrialOutcome {
    TrialOutcome { success, failures }
}

fn run_counting<R: Rng + ?Sized>(
    rng: &mut R,
    budget: &FaultBudget,
    sampler: &LinkSampler<'_>,
) -> TrialOutcome {
    let n = budget.node_count();
    let f = budget.fault_tolerance();
    let mut failures = [None; 4];

    let i = sampler.count_failures(n - 1, rng);
    failures[0] = Some(i);
    if i > f {
        return finish(failures, false);
    }
    let j = sampler.count_failures(n - 1 - i, rng);
    failures[1] = Some(j);
    if i + j > f {
        return finish(failures, false);
    }
    let k = sampler.count_failures(n - i - j, rng);
    failures[2] = Some(k);
    if i + j + k > f {
        return finish(failures, false);
    }
    let l = sampler.count_failures(n - i - j - k, rng);
    failures[3] = Some(l);
    finish(failures, i + j + k + l <= f)
}

// Replica distances fixed for the whole trial; the primary's own commit/reply
// slot gets one extra fixed distance.
fn run_fixed_positions<R: Rng + ?Sized>(
    rng: &mut R,
    budget: &FaultBudget,
    sampler: &LinkSampler<'_>,
    g: &GeometricLinks,
) -> TrialOutcome {
    let n = budget.node_count() as usize;
    let f = budget.fault_tolerance();
    let mut alive: Vec<f64> = (0..n - 1).map(|_| sampler.distance(g, rng)).collect();
    let primary_slot = sampler.distance(g, rng);
    let mut failures = [None; 4];
    let mut spent = 0;

    for (stage, include_primary) in [(0, false), (1, false), (2, true), (3, true)] {
        if include_primary && stage == 2 {
            alive.push(primary_slot);
        }
        let before = alive.len();
        alive.retain(|&d| sampler.delivered_at(g, d, rng));
        let lost = (before - alive.len()) as u64;
        failures[stage] = Some(lost);
        spent += lost;
        if spent > f {
            return finish(failures, false);
        }
    }
    finish(failures, true)
}

/// One PBFT round under the given link model.
pub fn run_trial<R: Rng + ?Sized>(
    rng: &mut R,
    budget: &FaultBudget,
    link_model: &LinkModel,
) -> TrialOutcome {
    let sampler = LinkSampler::new(link_model);
    match link_model {
        LinkModel::Geometric(g) if g.fixed_positions => run_fixed_positions(rng, budget, &sampler, g),
        _ => run_counting(rng, budget, &sampler),
    }
}

#[derive(Debug, Clone)]
struct Tally {
    successes: u64,
    histogram: [Vec<u64>; 4],
}

impl Tally {
    fn new(width: usize) -> Self {
        Tally {
            successes: 0,
            histogram: std::array::from_fn(|_| vec![0; width]),
        }
    }

    fn add(mut self, outcome: TrialOutcome) -> Self {
        if outcome.success {
            self.successes += 1;
        }
        for (table, count) in self.histogram.iter_mut().zip(outcome.failures) {
            if let Some(x) = count {
                table[x as usize] += 1;
            }
        }
        self
    }

    fn merge(mut self, other: Tally) -> Self {
        self.successes += other.successes;
        for (a, b) in self.histogram.iter_mut().zip(other.histogram) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence_level: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::invalid(format!("bad counts {successes}/{trials}")));
    }
    let z = q_inverse(0.5 * (1.0 - confidence_level))?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = (center - half).clamp(0.0, 1.0).min(p);
    let high = (center + half).clamp(0.0, 1.0).max(p);
    Ok((low, high))
}

/// Runs `config.trials` independent rounds in parallel.
pub fn estimate_consensus_rate(
    config: &SimConfig,
    budget: &FaultBudget,
    link_model: &LinkModel,
) -> Result<SimEstimate> {
    config.validate()?;
    link_model.validate()?;
    if config.mode != link_model.mode() {
        return Err(Error::invalid(format!(
            "simulation mode {:?} does not match the link model ({:?})",
            config.mode,
            link_model.mode()
        )));
    }
    let width = budget.node_count() as usize + 1;
    let tally = (0..config.trials)
        .into_par_iter()
        .fold(
            || Tally::new(width),
            |acc, t| {
                let mut rng = trial_rng(config.seed, t);
                acc.add(run_trial(&mut rng, budget, link_model))
            },
        )
        .reduce(|| Tally::new(width), Tally::merge);

    let (ci_low, ci_high) = wilson_interval(tally.successes, config.trials, config.confidence_level)?;
    Ok(SimEstimate {
        successes: tally.successes,
        trials: config.trials,
        p_hat: tally.successes as f64 / config.trials as f64,
        ci_low,
        ci_high,
        stage_failure_histogram: tally.histogram,
    })
}
