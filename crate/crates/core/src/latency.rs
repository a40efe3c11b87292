//! Finite-blocklength delay model.
//!
//! The block error probability of one transmission lasting `T` seconds is
//!
//! ```text
//! ε(T) = Q( (m·C − m·R + log(m)/2) / (log(e)·√m) ),   m = N·T·B
//! ```
//!
//! with `N = 1` subcarrier. Setting `ε = 1 − P_s` and solving for `T` gives the
//! per-transmission delay; the phase delays follow as `t1 = (n−1)·T`,
//! `t2 = T` and `t_total = 3·t1 + t2`.
//!
//! Two readings of the capacity/rate terms are supported. [`Eq11Form::Printed`]
//! uses `C` and `R` in bit/s exactly as written, which yields attosecond-scale
//! delays for the Table I presets. [`Eq11Form::Normalized`] divides both by the
//! bandwidth (bits per channel use), the dimensionally consistent form of the
//! normal approximation.

use crate::channel::{avg_success_prob, NetworkGeometry, SignalProfile};
use crate::error::{Error, Result};
use crate::numerics::{q_function, q_inverse, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Eq11Form {
    /// `C` and `R` in bit/s.
    #[default]
    Printed,
    /// `C/B` and `R/B` in bits per channel use.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Two,
    E,
    Ten,
}

impl LogBase {
    fn ln_base(self) -> f64 {
        match self {
            LogBase::Two => std::f64::consts::LN_2,
            LogBase::E => 1.0,
            LogBase::Ten => std::f64::consts::LN_10,
        }
    }

    fn log(self, x: f64) -> f64 {
        x.ln() / self.ln_base()
    }
}

/// Knobs of the error-probability relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModel {
    pub form: Eq11Form,
    pub log_base: LogBase,
    pub subcarriers: u32,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            form: Eq11Form::Printed,
            log_base: LogBase::Two,
            subcarriers: 1,
        }
    }
}

/// Per-transmission duration and the phase delays built from it. All values in
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayReport {
    pub symbol_duration: f64,
    pub broadcast_delay: f64,
    pub reply_delay: f64,
    pub total_delay: f64,
}

impl DelayReport {
    pub fn from_symbol_duration(node_count: u64, symbol_duration: f64) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::domain(format!("need at least 2 nodes, got {node_count}")));
        }
        if !(symbol_duration > 0.0) || !symbol_duration.is_finite() {
            return Err(Error::domain(format!(
                "symbol duration must be finite and > 0, got {symbol_duration}"
            )));
        }
        let broadcast_delay = (node_count - 1) as f64 * symbol_duration;
        let reply_delay = symbol_duration;
        Ok(DelayReport {
            symbol_duration,
            broadcast_delay,
            reply_delay,
            total_delay: 3.0 * broadcast_delay + reply_delay,
        })
    }
}

impl DelayModel {
    pub fn normalized() -> Self {
        DelayModel {
            form: Eq11Form::Normalized,
            ..Self::default()
        }
    }

    /// Capacity minus rate in the units selected by `form`.
    pub fn rate_margin(&self, profile: &SignalProfile) -> f64 {
        let margin = profile.capacity() - profile.rate();
        match self.form {
            Eq11Form::Printed => margin,
            Eq11Form::Normalized => margin / profile.bandwidth(),
        }
    }

    pub fn blocklength(&self, profile: &SignalProfile, duration: f64) -> f64 {
        self.subcarriers as f64 * duration * profile.bandwidth()
    }

    /// Argument of the Q function at blocklength `m`.
    pub fn q_argument(&self, profile: &SignalProfile, blocklength: f64) -> f64 {
        let m = blocklength;
        let margin = self.rate_margin(profile);
        let base = self.log_base;
        (m * margin + 0.5 * base.log(m)) / (base.log(std::f64::consts::E) * m.sqrt())
    }

    pub fn error_prob_for_duration(&self, profile: &SignalProfile, duration: f64) -> Result<f64> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::domain(format!("duration must be finite and > 0, got {duration}")));
        }
        q_function(self.q_argument(profile, self.blocklength(profile, duration)))
    }

    /// Smallest blocklength of the branch on which the Q argument increases.
    ///
    /// The sign of the argument's derivative is that of
    /// `g(m) = Δ·m/2 + 1/(2 ln b) − log_b(m)/4`, which is convex with its
    /// minimum at `m* = 1/(2Δ ln b)`. If `g(m*) > 0` the argument increases on
    /// all of `m > 0` and the floor is zero; otherwise it is the larger root.
    pub fn branch_floor(&self, profile: &SignalProfile) -> f64 {
        let margin = self.rate_margin(profile);
        let ln_b = self.log_base.ln_base();
        let g = |m: f64| 0.5 * margin * m + 0.5 / ln_b - 0.25 * m.ln() / ln_b;
        let m_star = 1.0 / (2.0 * margin * ln_b);
        if g(m_star) > 0.0 {
            return 0.0;
        }
        let mut lo = m_star;
        let mut hi = 2.0 * m_star;
        while g(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Duration `T` at which the block error probability equals `1 − ps`.
    pub fn solve_symbol_duration(
        &self,
        profile: &SignalProfile,
        ps: f64,
        tol: Tolerance,
    ) -> Result<f64> {
        if !(ps > 0.0 && ps < 1.0) {
            return Err(Error::domain(format!(
                "symbol duration needs P_s strictly inside (0, 1), got {ps}"
            )));
        }
        let target_error = 1.0 - ps;
        let target = q_inverse(target_error)?;
        let arg = |m: f64| self.q_argument(profile, m);
        let floor = self.branch_floor(profile);
        let mut iterations = 0usize;
        let mut bump = |what: &str, estimate: f64| -> Result<()> {
            iterations += 1;
            if iterations > tol.max_iterations() {
                return Err(Error::Numerical {
                    message: format!("delay solver exhausted its iterations while {what}"),
                    estimate,
                    error_bound: f64::INFINITY,
                });
            }
            Ok(())
        };

        let (mut lo, mut hi);
        if floor > 0.0 {
            if arg(floor) > target {
                return Err(Error::Numerical {
                    message: format!(
                        "no blocklength on the increasing branch reaches error {target_error:e}"
                    ),
                    estimate: floor,
                    error_bound: f64::INFINITY,
                });
            }
            lo = floor;
            hi = floor.max(1.0);
        } else {
            lo = 1.0;
            hi = 1.0;
            while arg(lo) > target {
                bump("bracketing from below", lo)?;
                lo *= 1e-3;
                if lo == 0.0 {
                    return Err(Error::Numerical {
                        message: "lower bracket underflowed".into(),
                        estimate: 0.0,
                        error_bound: f64::INFINITY,
                    });
                }
            }
        }
        while arg(hi) < target {
            bump("bracketing from above", hi)?;
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Numerical {
                    message: "upper bracket overflowed".into(),
                    estimate: lo,
                    error_bound: f64::INFINITY,
                });
            }
        }

        // Bisect on the geometric midpoint until the bracket cannot shrink.
        loop {
            let mid = (lo * hi).sqrt();
            let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
            if mid <= lo || mid >= hi {
                break;
            }
            bump("bisecting", mid)?;
            if arg(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let m = if (arg(lo) - target).abs() <= (arg(hi) - target).abs() { lo } else { hi };

        let duration = m / (self.subcarriers as f64 * profile.bandwidth());
        let residual = (self.error_prob_for_duration(profile, duration)? - target_error).abs();
        if residual > tol.absolute().max(tol.relative() * target_error) {
            return Err(Error::Numerical {
                message: "delay solver residual above tolerance".into(),
                estimate: duration,
                error_bound: residual,
            });
        }
        Ok(duration)
    }

    pub fn delay_report_for_ps(
        &self,
        profile: &SignalProfile,
        node_count: u64,
        ps: f64,
    ) -> Result<DelayReport> {
        let t = self.solve_symbol_duration(profile, ps, Tolerance::default())?;
        DelayReport::from_symbol_duration(node_count, t)
    }

    pub fn delay_report(
        &self,
        profile: &SignalProfile,
        geometry: &NetworkGeometry,
    ) -> Result<DelayReport> {
        let ps = avg_success_prob(profile, geometry)?;
        if ps >= 1.0 {
            return Err(Error::domain(
                "P_s = 1 leaves no block error to trade for delay",
            ));
        }
        self.delay_report_for_ps(profile, geometry.node_count(), ps)
    }
}

/// [`DelayModel::error_prob_for_duration`] with the default model.
pub fn error_prob_for_duration(profile: &SignalProfile, duration: f64) -> Result<f64> {
    DelayModel::default().error_prob_for_duration(profile, duration)
}

/// [`DelayModel::solve_symbol_duration`] with the default model.
pub fn solve_symbol_duration(profile: &SignalProfile, ps: f64, tol: Tolerance) -> Result<f64> {
    DelayModel::default().solve_symbol_duration(profile, ps, tol)
}

/// [`DelayModel::delay_report`] with the default model.
pub fn delay_report(profile: &SignalProfile, geometry: &NetworkGeometry) -> Result<DelayReport> {
    DelayModel::default().delay_report(profile, geometry)
}
