//! Resolved experiment description and scan specifications.
//!
//! Everything here is in SI units. Human-unit config files are parsed and
//! converted by the command-line front end; this module owns validation.

use serde::{Deserialize, Serialize};

use crate::models::{Arm, ModelKind};
use crate::optics::{self, AomParams, FiberLink, Interferometer, SourceParams};
use crate::relativity::FrameVelocity;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Required ratio between arm imbalance and single-photon coherence length.
pub const MIN_IMBALANCE_TO_COHERENCE: f64 = 100.0;

/// Hard cap on the number of points in a scan.
pub const MAX_SCAN_POINTS: usize = 1_000_000;

/// Detector efficiency, noise, and coincidence gating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Detection efficiency, (0, 1].
    pub efficiency: f64,
    /// Dark count rate (Hz).
    pub dark_count_rate: f64,
    /// Coincidence window (s).
    pub coincidence_window: f64,
}

/// Full experiment description consumed by the Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: SourceParams,
    /// Fiber link from the source to each analyzer.
    pub fibers: [FiberLink; 2],
    /// The two analyzers; their positions fix the event geometry.
    pub analyzers: [Interferometer; 2],
    pub detectors: [DetectorModel; 2],
    /// Analyzer separation d (m).
    pub separation: f64,
    /// Source-to-analyzer path-length difference, in air (m); the scanned
    /// quantity in a path-length scan.
    pub path_offset: f64,
    pub model: ModelKind,
    /// Configured fringe visibility of the source plus analyzers.
    pub visibility: f64,
    /// Pairs simulated per scan point.
    pub pairs_per_point: u64,
    /// Master seed; every scan point derives its own RNG stream from it.
    pub seed: u64,
    /// One-sigma uncertainty on the photon arrival-time difference (s),
    /// used for the influence-speed bound.
    pub timing_uncertainty: f64,
}

impl ExperimentConfig {
    /// The reference experiment: degenerate 1313.2 nm photons behind an
    /// 11 nm filter, 100 m fiber links at their zero-dispersion wavelength,
    /// two Michelson analyzers 55 m apart whose 100 MHz AOM gratings recede
    /// from each other at 2500 m/s, and a quantum model at 85% visibility.
    pub fn reference() -> Self {
        let aom = |travel_direction: i8| AomParams {
            acoustic_speed: 2500.0,
            rf_frequency: 100e6,
            refractive_index: 2.6,
            coupling: 1.2337,
            acoustic_power: 0.5,
            travel_direction,
            passband: 30e-9,
        };
        let analyzer = |position: f64, travel_direction: i8| Interferometer {
            arm_imbalance: 0.6,
            phase: 0.0,
            transmission: 0.25,
            aom: aom(travel_direction),
            position,
            passes_per_reflection: 2,
            shifted_arm: Arm::Long,
        };
        let fiber = || FiberLink {
            length: 100.0,
            zero_dispersion_wavelength: 1313.2e-9,
            dispersion_slope: 92.0,
            length_uncertainty: 0.1e-3,
        };
        let detector = || DetectorModel {
            efficiency: 0.3,
            dark_count_rate: 500.0,
            coincidence_window: 0.5e-9,
        };
        ExperimentConfig {
            source: SourceParams {
                pump_wavelength: 656.6e-9,
                photon_center_wavelength: 1313.2e-9,
                filter_bandwidth: 11e-9,
                pair_rate: 5e5,
                pump_coherence_time: 1e-6,
            },
            fibers: [fiber(), fiber()],
            analyzers: [analyzer(0.0, -1), analyzer(55.0, 1)],
            detectors: [detector(), detector()],
            separation: 55.0,
            path_offset: 0.0,
            model: ModelKind::Quantum,
            visibility: 0.85,
            pairs_per_point: 100_000,
            seed: 1313,
            timing_uncertainty: 0.40e-12,
        }
    }

    /// Single-photon coherence length of the filtered photons (m).
    pub fn coherence_length(&self) -> f64 {
        optics::coherence_length(
            self.source.photon_center_wavelength,
            self.source.filter_bandwidth,
        )
    }

    /// Residual dispersion spread of one fiber link at the configured
    /// photon detuning from the zero-dispersion wavelength (s).
    pub fn fiber_spread(&self, side: usize) -> f64 {
        let fiber = &self.fibers[side];
        let offset =
            (self.source.photon_center_wavelength - fiber.zero_dispersion_wavelength).abs();
        optics::residual_pulse_spread(fiber, offset, self.source.filter_bandwidth)
    }

    /// RMS of the pair's relative arrival-time jitter at the analyzers (s).
    ///
    /// Coherence-length term L_c/(c sqrt(2)) plus the RMS average of the two
    /// fiber dispersion spreads, combined in quadrature.
    pub fn arrival_jitter_sigma(&self) -> f64 {
        let coherence = self.coherence_length() / (SPEED_OF_LIGHT * std::f64::consts::SQRT_2);
        let spread_a = self.fiber_spread(0);
        let spread_b = self.fiber_spread(1);
        let dispersion_sq = (spread_a * spread_a + spread_b * spread_b) / 2.0;
        (coherence * coherence + dispersion_sq).sqrt()
    }

    /// Grating rest frames of the two analyzers.
    pub fn frames(&self) -> Result<(FrameVelocity, FrameVelocity)> {
        Ok((self.analyzers[0].aom.frame()?, self.analyzers[1].aom.frame()?))
    }

    /// Effective coincidence window of the counting circuit (s); the
    /// stricter of the two configured windows.
    pub fn coincidence_window(&self) -> f64 {
        self.detectors[0]
            .coincidence_window
            .min(self.detectors[1].coincidence_window)
    }

    /// Mean long-short delay of the two analyzers (s).
    pub fn mean_arm_delay(&self) -> f64 {
        (self.analyzers[0].arm_delay() + self.analyzers[1].arm_delay()) / 2.0
    }

    /// Validate every field-level invariant; the Monte Carlo assumes this
    /// has passed.
    pub fn validate(&self) -> Result<()> {
        let src = &self.source;
        ensure(src.pump_wavelength > 0.0, "source.pump_wavelength", "must be positive")?;
        ensure(
            src.photon_center_wavelength > 0.0,
            "source.photon_center_wavelength",
            "must be positive",
        )?;
        let degenerate = 2.0 * src.pump_wavelength;
        if (src.photon_center_wavelength - degenerate).abs() > 0.01 * degenerate {
            return Err(Error::config(
                "source.photon_center_wavelength",
                format!(
                    "must be within 1% of twice the pump wavelength ({:.4e} m) for \
                     degenerate down-conversion, got {:.4e} m",
                    degenerate, src.photon_center_wavelength
                ),
            ));
        }
        ensure(src.filter_bandwidth > 0.0, "source.filter_bandwidth", "must be positive")?;
        ensure(src.pair_rate > 0.0, "source.pair_rate", "must be positive")?;
        ensure(
            src.pump_coherence_time > 0.0,
            "source.pump_coherence_time",
            "must be positive",
        )?;

        ensure(self.separation > 0.0, "separation", "must be positive")?;
        let spacing = (self.analyzers[1].position - self.analyzers[0].position).abs();
        if (spacing - self.separation).abs() > 1e-9 * self.separation {
            return Err(Error::config(
                "separation",
                format!(
                    "analyzer positions are {spacing} m apart but separation says {} m",
                    self.separation
                ),
            ));
        }
        ensure(self.path_offset.is_finite(), "path_offset", "must be finite")?;

        let coherence = self.coherence_length();
        for (index, analyzer) in self.analyzers.iter().enumerate() {
            let field: &'static str = if index == 0 { "analyzers[0]" } else { "analyzers[1]" };
            if analyzer.arm_imbalance < MIN_IMBALANCE_TO_COHERENCE * coherence {
                return Err(Error::config(
                    field,
                    format!(
                        "arm imbalance {} m does not dominate the photon coherence \
                         length {coherence} m (need a factor {MIN_IMBALANCE_TO_COHERENCE})",
                        analyzer.arm_imbalance
                    ),
                ));
            }
            if !(analyzer.transmission > 0.0 && analyzer.transmission <= 1.0) {
                return Err(Error::config(field, "transmission must be in (0, 1]"));
            }
            if analyzer.passes_per_reflection == 0 {
                return Err(Error::config(field, "passes_per_reflection must be at least 1"));
            }
            let aom = &analyzer.aom;
            if !(aom.acoustic_speed > 0.0
                && aom.rf_frequency > 0.0
                && aom.refractive_index > 0.0
                && aom.coupling > 0.0
                && aom.acoustic_power >= 0.0
                && aom.passband > 0.0)
            {
                return Err(Error::config(field, "AOM physical quantities must be positive"));
            }
            if aom.travel_direction != 1 && aom.travel_direction != -1 {
                return Err(Error::config(field, "AOM travel_direction must be +1 or -1"));
            }
            aom.frame()?;
            // A Bragg solution must exist at the photon wavelength.
            optics::bragg_angle(
                src.photon_center_wavelength,
                aom.refractive_index,
                optics::acoustic_wavelength(aom),
            )?;
            if src.filter_bandwidth >= aom.passband {
                return Err(Error::config(
                    "source.filter_bandwidth",
                    format!(
                        "filter bandwidth {} m must stay below the AOM passband {} m",
                        src.filter_bandwidth, aom.passband
                    ),
                ));
            }
        }

        // Short-short and long-long must stay indistinguishable: arm
        // imbalances matched within the coherence length.
        let mismatch = (self.analyzers[0].arm_imbalance - self.analyzers[1].arm_imbalance).abs();
        if mismatch > coherence {
            return Err(Error::config(
                "analyzers",
                format!(
                    "arm imbalances differ by {mismatch} m, more than the coherence \
                     length {coherence} m; the interfering paths become distinguishable"
                ),
            ));
        }

        for (index, detector) in self.detectors.iter().enumerate() {
            let field: &'static str = if index == 0 { "detectors[0]" } else { "detectors[1]" };
            if !(detector.efficiency > 0.0 && detector.efficiency <= 1.0) {
                return Err(Error::config(field, "efficiency must be in (0, 1]"));
            }
            if detector.dark_count_rate < 0.0 {
                return Err(Error::config(field, "dark_count_rate must be non-negative"));
            }
            if !(detector.coincidence_window > 0.0) {
                return Err(Error::config(field, "coincidence_window must be positive"));
            }
        }

        // The three Franson peaks must be resolvable by the coincidence
        // electronics.
        let window = self.coincidence_window();
        let arm_delay = self.mean_arm_delay();
        if !(arm_delay > window) {
            return Err(Error::UnresolvablePeaks {
                arm_delay_s: arm_delay,
                window_s: window,
            });
        }
        // And the emission time must stay undetermined over the imbalance.
        if self.source.pump_coherence_time <= arm_delay {
            return Err(Error::config(
                "source.pump_coherence_time",
                format!(
                    "must exceed the arm-imbalance delay {arm_delay} s for the \
                     interfering paths to be indistinguishable"
                ),
            ));
        }

        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::VisibilityOutOfRange(self.visibility));
        }
        ensure(self.pairs_per_point > 0, "pairs_per_point", "must be positive")?;
        ensure(
            self.timing_uncertainty > 0.0,
            "timing_uncertainty",
            "must be positive",
        )?;
        Ok(())
    }
}

fn ensure(condition: bool, field: &'static str, message: &str) -> Result<()> {
    if condition {
        Ok(())
    } else {
        Err(Error::config(field, message))
    }
}

/// What a scan sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    /// Sweep the analyzer-1 phase at fixed path offset (scan values in rad).
    Phase,
    /// Step the source-side path offset, sweeping the phase at every step
    /// (scan values in m).
    PathLength,
}

/// A scan description: start/stop/step in rad (phase) or m (path length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub kind: ScanKind,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// For path-length scans: how many phase settings (evenly spaced over
    /// one period) are simulated at every offset step.
    #[serde(default = "default_phases_per_step")]
    pub phases_per_step: u32,
}

fn default_phases_per_step() -> u32 {
    12
}

impl ScanSpec {
    /// Full-period phase scan with the given number of points.
    pub fn phase_scan(points: u32) -> Self {
        let step = std::f64::consts::TAU / f64::from(points);
        ScanSpec {
            kind: ScanKind::Phase,
            start: 0.0,
            stop: f64::from(points - 1) * step,
            step,
            phases_per_step: default_phases_per_step(),
        }
    }

    /// The published protocol: +-3 mm in 0.12 mm steps.
    pub fn default_path_length() -> Self {
        ScanSpec {
            kind: ScanKind::PathLength,
            start: -3.0e-3,
            stop: 3.0e-3,
            step: 0.12e-3,
            phases_per_step: default_phases_per_step(),
        }
    }

    /// The scan-variable grid.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::Scan(format!("step must be positive, got {}", self.step)));
        }
        if !self.start.is_finite() || !self.stop.is_finite() || self.stop < self.start {
            return Err(Error::Scan(format!(
                "invalid range [{}, {}]",
                self.start, self.stop
            )));
        }
        let values = ((self.stop - self.start) / self.step) as usize + 1;
        let total = match self.kind {
            ScanKind::Phase => values,
            ScanKind::PathLength => values.saturating_mul(self.phases_per_step as usize),
        };
        if total > MAX_SCAN_POINTS {
            return Err(Error::Scan(format!(
                "{total} points exceed the {MAX_SCAN_POINTS} point limit"
            )));
        }
        if self.kind == ScanKind::PathLength && self.phases_per_step < 4 {
            return Err(Error::Scan(
                "path-length scans need at least 4 phase settings per step to fit a fringe"
                    .to_string(),
            ));
        }
        Ok(())
    }
}
