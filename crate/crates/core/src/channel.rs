//! Physical layer: signal presets, Rayleigh-fading SNR, close-in free-space
//! path loss and transmission success probabilities over a Poisson disk.
//!
//! SNR thresholds are configured in dB and converted with [`db_to_linear`]
//! before entering any formula. The log-distance path loss of
//! [`path_loss_db`] is a standalone dB quantity; inside the SNR chain the only
//! distance effect is `r^(-α)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numerics::{integrate, Tolerance};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const THZ_PRESET: &str = "thz-0.22";
pub const MMWAVE_PRESET: &str = "mmwave-28";

/// Physical parameters of one signal class.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalProfile {
    name: String,
    transmit_power: f64,
    noise_power: f64,
    bandwidth: f64,
    capacity: f64,
    rate: f64,
    path_loss_exponent: f64,
    carrier_frequency: f64,
}

impl SignalProfile {
    /// Builds a profile. Powers in W, bandwidth and carrier in Hz, capacity and
    /// rate in bit/s.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        transmit_power: f64,
        noise_power: f64,
        bandwidth: f64,
        capacity: f64,
        rate: f64,
        path_loss_exponent: f64,
        carrier_frequency: f64,
    ) -> Result<Self> {
        let name = name.into();
        let positive = [
            ("transmit_power", transmit_power),
            ("noise_power", noise_power),
            ("bandwidth", bandwidth),
            ("rate", rate),
            ("path_loss_exponent", path_loss_exponent),
            ("carrier_frequency", carrier_frequency),
        ];
        for (field, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::invalid(format!(
                    "profile {name}: {field} must be finite and > 0, got {value}"
                )));
            }
        }
        if !(capacity > rate) || !capacity.is_finite() {
            return Err(Error::invalid(format!(
                "profile {name}: capacity ({capacity}) must exceed rate ({rate})"
            )));
        }
        Ok(SignalProfile {
            name,
            transmit_power,
            noise_power,
            bandwidth,
            capacity,
            rate,
            path_loss_exponent,
            carrier_frequency,
        })
    }

    /// 0.22 THz indoor profile.
    pub fn thz() -> Self {
        SignalProfile::new(THZ_PRESET, 1.0, 0.2, 10e9, 80e9, 40e9, 2.229, 0.22e12)
            .expect("preset is valid")
    }

    /// 28 GHz profile.
    pub fn mmwave() -> Self {
        SignalProfile::new(MMWAVE_PRESET, 1.0, 0.2, 800e6, 8e9, 4e9, 1.7, 28e9)
            .expect("preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            THZ_PRESET => Some(Self::thz()),
            MMWAVE_PRESET => Some(Self::mmwave()),
            _ => None,
        }
    }

    pub fn preset_names() -> [&'static str; 2] {
        [THZ_PRESET, MMWAVE_PRESET]
    }

    /// Returns a copy with a different path-loss exponent.
    pub fn with_path_loss_exponent(&self, alpha: f64) -> Result<Self> {
        SignalProfile::new(
            self.name.clone(),
            self.transmit_power,
            self.noise_power,
            self.bandwidth,
            self.capacity,
            self.rate,
            alpha,
            self.carrier_frequency,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
    pub fn capacity(&self) -> f64 {
        self.capacity
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }
    pub fn path_loss_exponent(&self) -> f64 {
        self.path_loss_exponent
    }
    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }
}

/// Node population on a disk around the sender.
///
/// Nodes follow a 2-D Poisson process of the given density; `n` nodes occupy a
/// disk of radius `sqrt(n / (π·density))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkGeometry {
    node_count: u64,
    density: f64,
    snr_threshold_db: f64,
    radius: f64,
}

impl NetworkGeometry {
    /// `snr_threshold_db` may be `-inf` (a zero linear threshold).
    pub fn new(node_count: u64, density: f64, snr_threshold_db: f64) -> Result<Self> {
        if node_count < 4 {
            return Err(Error::invalid(format!(
                "node_count must be at least 4, got {node_count}"
            )));
        }
        if !(density > 0.0) || !density.is_finite() {
            return Err(Error::invalid(format!("density must be finite and > 0, got {density}")));
        }
        if snr_threshold_db.is_nan() || snr_threshold_db == f64::INFINITY {
            return Err(Error::invalid(format!(
                "snr threshold must be a number below +inf dB, got {snr_threshold_db}"
            )));
        }
        let radius = (node_count as f64 / (PI * density)).sqrt();
        Ok(NetworkGeometry {
            node_count,
            density,
            snr_threshold_db,
            radius,
        })
    }

    pub fn node_count(&self) -> u64 {
        self.node_count
    }
    pub fn density(&self) -> f64 {
        self.density
    }
    pub fn snr_threshold_db(&self) -> f64 {
        self.snr_threshold_db
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn z_linear(&self) -> f64 {
        db_to_linear(self.snr_threshold_db)
    }
}

/// Parameters and one shadowing realisation of the log-distance model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossSample {
    reference_distance: f64,
    shadowing_sigma: f64,
    shadow_draw: f64,
}

impl PathLossSample {
    pub fn new(reference_distance: f64, shadowing_sigma: f64, shadow_draw: f64) -> Result<Self> {
        if !(reference_distance > 0.0) || !reference_distance.is_finite() {
            return Err(Error::invalid(format!(
                "reference distance must be finite and > 0, got {reference_distance}"
            )));
        }
        if !(shadowing_sigma >= 0.0) || !shadowing_sigma.is_finite() {
            return Err(Error::invalid(format!(
                "shadowing sigma must be finite and >= 0, got {shadowing_sigma}"
            )));
        }
        if !shadow_draw.is_finite() {
            return Err(Error::invalid("shadow draw must be finite"));
        }
        Ok(PathLossSample {
            reference_distance,
            shadowing_sigma,
            shadow_draw,
        })
    }

    /// Reference distance 1 m, no shadowing.
    pub fn deterministic() -> Self {
        PathLossSample {
            reference_distance: 1.0,
            shadowing_sigma: 0.0,
            shadow_draw: 0.0,
        }
    }

    /// Draws `X_σ ~ N(0, σ²)` in dB.
    pub fn draw<R: Rng + ?Sized>(
        rng: &mut R,
        reference_distance: f64,
        shadowing_sigma: f64,
    ) -> Result<Self> {
        let shadow_draw = if shadowing_sigma == 0.0 {
            0.0
        } else {
            Normal::new(0.0, shadowing_sigma)
                .map_err(|e| Error::invalid(e.to_string()))?
                .sample(rng)
        };
        PathLossSample::new(reference_distance, shadowing_sigma, shadow_draw)
    }

    pub fn reference_distance(&self) -> f64 {
        self.reference_distance
    }
    pub fn shadowing_sigma(&self) -> f64 {
        self.shadowing_sigma
    }
    pub fn shadow_draw(&self) -> f64 {
        self.shadow_draw
    }
}

pub fn db_to_linear(value_db: f64) -> f64 {
    10f64.powf(value_db / 10.0)
}

pub fn linear_to_db(value: f64) -> f64 {
    10.0 * value.log10()
}

/// Received SNR `P_T·h·r^(-α) / P_N` (linear).
pub fn snr(profile: &SignalProfile, fading_gain: f64, distance: f64) -> Result<f64> {
    if !(fading_gain >= 0.0) {
        return Err(Error::domain(format!("fading gain must be >= 0, got {fading_gain}")));
    }
    check_distance(distance)?;
    Ok(profile.transmit_power * fading_gain * distance.powf(-profile.path_loss_exponent)
        / profile.noise_power)
}

/// Free-space loss at the reference distance, `20·log10(4π·r₀·f_c / c)`.
pub fn free_space_loss_db(carrier_frequency: f64, reference_distance: f64) -> f64 {
    20.0 * (4.0 * PI * reference_distance * carrier_frequency / SPEED_OF_LIGHT).log10()
}

/// Close-in reference-distance path loss in dB:
/// `PL(r₀) + 10·α·log10(r/r₀) + X_σ`.
pub fn path_loss_db(profile: &SignalProfile, sample: &PathLossSample, distance: f64) -> Result<f64> {
    check_distance(distance)?;
    let r0 = sample.reference_distance;
    Ok(free_space_loss_db(profile.carrier_frequency, r0)
        + 10.0 * profile.path_loss_exponent * (distance / r0).log10()
        + sample.shadow_draw)
}

/// `P{SNR > z}` at a fixed distance when the power gain is Exp(1).
pub fn link_success_prob(profile: &SignalProfile, z_linear: f64, distance: f64) -> Result<f64> {
    if !(z_linear >= 0.0) {
        return Err(Error::domain(format!("threshold must be >= 0, got {z_linear}")));
    }
    check_distance(distance)?;
    Ok(link_success_unchecked(profile, z_linear, distance))
}

fn link_success_unchecked(profile: &SignalProfile, z_linear: f64, distance: f64) -> f64 {
    if z_linear == 0.0 {
        return 1.0;
    }
    (-profile.noise_power * distance.powf(profile.path_loss_exponent) * z_linear
        / profile.transmit_power)
        .exp()
}

/// Average transmission success `P_s` over receivers distributed with density
/// `2r/R²` on the disk.
pub fn avg_success_prob(profile: &SignalProfile, geometry: &NetworkGeometry) -> Result<f64> {
    avg_success_prob_with(profile, geometry, Tolerance::default())
}

pub fn avg_success_prob_with(
    profile: &SignalProfile,
    geometry: &NetworkGeometry,
    tol: Tolerance,
) -> Result<f64> {
    let z = geometry.z_linear();
    if z == 0.0 {
        return Ok(1.0);
    }
    let radius = geometry.radius;
    let integral = integrate(
        |r| link_success_unchecked(profile, z, r) * r,
        0.0,
        radius,
        tol,
    )?;
    Ok((2.0 * integral / (radius * radius)).clamp(0.0, 1.0))
}

/// Distance at which the SNR with gain `h` falls exactly to the threshold,
/// `(P_T·h / (z·P_N))^(1/α)`.
pub fn active_distance(profile: &SignalProfile, z_linear: f64, fading_gain: f64) -> Result<f64> {
    if !(z_linear > 0.0) || !z_linear.is_finite() {
        return Err(Error::domain(format!(
            "active distance needs a finite threshold > 0, got {z_linear}"
        )));
    }
    if !(fading_gain > 0.0) || !fading_gain.is_finite() {
        return Err(Error::domain(format!(
            "active distance needs a fading gain > 0, got {fading_gain}"
        )));
    }
    let ratio = profile.transmit_power * fading_gain / (z_linear * profile.noise_power);
    Ok(ratio.powf(profile.path_loss_exponent.recip()))
}

fn check_distance(distance: f64) -> Result<()> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::domain(format!("distance must be finite and > 0, got {distance}")));
    }
    Ok(())
}
