//! Acousto-optic beam-splitter physics, interferometer frequency-shift
//! bookkeeping, photon coherence length, and fiber chromatic-dispersion
//! budgets.
//!
//! The traveling acoustic wave inside the modulator acts as a moving
//! diffraction grating: reflection is maximal at the Bragg angle
//! 2 lambda_s sin(theta_B) = lambda / n, the reflectance is
//! sin^2(sqrt(alpha I)), and the reflected beam is frequency shifted by the
//! acoustic frequency — exactly the Doppler shift of a mirror moving at the
//! acoustic speed.

use serde::{Deserialize, Serialize};

use crate::models::Arm;
use crate::relativity::FrameVelocity;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Acousto-optic modulator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AomParams {
    /// Acoustic wave speed in the crystal (m/s).
    pub acoustic_speed: f64,
    /// RF drive frequency (Hz); equals the frequency shift per pass.
    pub rf_frequency: f64,
    /// Refractive index of the crystal.
    pub refractive_index: f64,
    /// Acousto-optic coupling constant (1/W); device and wavelength specific.
    pub coupling: f64,
    /// Acoustic drive power (W).
    pub acoustic_power: f64,
    /// Sign of the acoustic propagation direction along the lab axis.
    pub travel_direction: i8,
    /// Spectral acceptance of the deflected beam (m); the modulator acts as
    /// a band-pass filter of roughly this width.
    pub passband: f64,
}

impl AomParams {
    /// Signed grating velocity along the lab axis (m/s).
    pub fn grating_velocity(&self) -> f64 {
        f64::from(self.travel_direction) * self.acoustic_speed
    }

    /// Rest frame of the moving grating.
    pub fn frame(&self) -> Result<FrameVelocity> {
        FrameVelocity::new(self.grating_velocity())
    }

    /// Reflectance at the configured drive power.
    pub fn reflectance(&self) -> f64 {
        reflectance(self.coupling, self.acoustic_power)
    }
}

/// One unbalanced Michelson analyzer with an AOM beam splitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interferometer {
    /// Optical path imbalance, long minus short (m).
    pub arm_imbalance: f64,
    /// Controllable phase between the arms (rad).
    pub phase: f64,
    /// Overall transmission of the analyzer, (0, 1].
    pub transmission: f64,
    /// The beam splitter.
    pub aom: AomParams,
    /// Position on the lab axis (m).
    pub position: f64,
    /// AOM passes per use of the reflected branch (2 for a Michelson
    /// collected through the input port).
    pub passes_per_reflection: u32,
    /// Which arm is fed by the diffracted (frequency-shifted) beam.
    pub shifted_arm: Arm,
}

impl Interferometer {
    /// Travel-time difference between long and short arm (s).
    pub fn arm_delay(&self) -> f64 {
        self.arm_imbalance / SPEED_OF_LIGHT
    }

    /// Frequency shift picked up by a photon that takes the given arm (Hz).
    ///
    /// The diffracted branch is shifted by the acoustic frequency once per
    /// pass, with the sign set by the acoustic propagation direction; the
    /// other branch is unshifted.
    pub fn arm_frequency_shift(&self, arm: Arm) -> f64 {
        if arm == self.shifted_arm {
            f64::from(self.aom.travel_direction)
                * f64::from(self.passes_per_reflection)
                * self.aom.rf_frequency
        } else {
            0.0
        }
    }
}

/// Fiber link between source and one analyzer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberLink {
    /// Length (m).
    pub length: f64,
    /// Zero-dispersion wavelength (m).
    pub zero_dispersion_wavelength: f64,
    /// Dispersion slope S0 at the zero-dispersion wavelength (s/m^3; the
    /// conventional unit ps/(nm^2 km) equals 1e3 s/m^3).
    pub dispersion_slope: f64,
    /// Length measurement uncertainty (m).
    pub length_uncertainty: f64,
}

/// Phenomenological photon-pair source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Pump laser wavelength (m).
    pub pump_wavelength: f64,
    /// Center wavelength of the down-converted photons (m), about twice the
    /// pump wavelength.
    pub photon_center_wavelength: f64,
    /// Interference-filter bandwidth applied to the photons (m).
    pub filter_bandwidth: f64,
    /// Detected pair rate (pairs/s).
    pub pair_rate: f64,
    /// Pump coherence time (s); sets the emission-time uncertainty.
    pub pump_coherence_time: f64,
}

/// Acoustic wavelength lambda_s = v_s / nu_s (m).
pub fn acoustic_wavelength(aom: &AomParams) -> f64 {
    aom.acoustic_speed / aom.rf_frequency
}

/// Bragg angle theta_B = arcsin(lambda / (2 n lambda_s)) (rad).
pub fn bragg_angle(wavelength: f64, index: f64, acoustic_wavelength: f64) -> Result<f64> {
    let argument = wavelength / (2.0 * index * acoustic_wavelength);
    if !(0.0..=1.0).contains(&argument) {
        return Err(Error::NoBraggSolution { argument });
    }
    Ok(argument.asin())
}

/// Reflection coefficient R = sin^2(sqrt(alpha I)).
pub fn reflectance(coupling: f64, acoustic_power: f64) -> f64 {
    let x = (coupling * acoustic_power).sqrt();
    x.sin().powi(2)
}

/// Smallest acoustic power giving a 50/50 split: (pi/4)^2 / alpha (W).
pub fn power_for_50_50(coupling: f64) -> Result<f64> {
    if !(coupling > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coupling must be positive, got {coupling}"
        )));
    }
    let quarter_pi = std::f64::consts::FRAC_PI_4;
    Ok(quarter_pi * quarter_pi / coupling)
}

/// Doppler shift of light reflected off a mirror moving at speed `v` inside
/// a medium of index `n`: 2 n v sin(theta) nu / c (Hz).
pub fn doppler_shift(v: f64, theta: f64, index: f64, optical_frequency: f64) -> f64 {
    2.0 * index * v * theta.sin() * optical_frequency / SPEED_OF_LIGHT
}

/// Total frequency shift of a photon pair relative to an unshifted pair (Hz).
///
/// `paths` are the arms taken by photon 1 and photon 2. With compensating
/// AOM orientations the short-short and long-long totals coincide, keeping
/// the pair energy constant and the interfering paths indistinguishable.
pub fn net_frequency_shift(paths: (Arm, Arm), analyzers: (&Interferometer, &Interferometer)) -> f64 {
    analyzers.0.arm_frequency_shift(paths.0) + analyzers.1.arm_frequency_shift(paths.1)
}

/// Single-photon coherence length L_c = lambda^2 / dlambda (m).
///
/// No spectral shape factor is applied; treat published coherence lengths as
/// matching this to ~20%.
pub fn coherence_length(wavelength: f64, bandwidth: f64) -> f64 {
    wavelength * wavelength / bandwidth
}

/// Residual two-photon pulse spread after dispersion cancellation (s).
///
/// Linearizes the fiber dispersion around the zero-dispersion wavelength,
/// D(lambda) ~ S0 (lambda - lambda0): spread = S0 * |offset| * dlambda * L.
/// `photon_offset` is the photon-side detuning from lambda0; a pump detuning
/// contributes twice over at the photon wavelength.
pub fn residual_pulse_spread(fiber: &FiberLink, photon_offset: f64, bandwidth: f64) -> f64 {
    fiber.dispersion_slope * photon_offset.abs() * bandwidth * fiber.length
}
