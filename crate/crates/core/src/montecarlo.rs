//! Event-by-event simulation of full fringe scans.
//!
//! Each simulated pair goes through the same pipeline the photons do: an
//! arrival-time difference is drawn from the coherence and dispersion
//! budgets, the two beam-splitter passages are classified relativistically
//! in the two grating rest frames, arms and output ports are sampled from
//! the active correlation law, and detector efficiency, dark counts, and the
//! coincidence window are applied. Every scan point owns a counter-derived
//! RNG stream, so results are bit-identical for a given (config, spec, seed)
//! at any parallelism level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ScanKind, ScanSpec};
use crate::models::{
    franson_postselect, joint_distribution, Arm, ModelKind, OutputPort, PathPair, PeakClass,
    PORT_PAIRS,
};
use crate::relativity::{classify_lab_separation, FrameVelocity, TimingClassification};
use crate::{Result, SPEED_OF_LIGHT};

/// Accumulated counts at one scan point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// Phase (rad) for phase scans, path offset (m) for path-length scans.
    pub scan_value: f64,
    /// Scan phase applied to analyzer 1 at this point (rad).
    pub phase: f64,
    /// Central-peak coincidences, accidentals included.
    pub coincidences: u64,
    /// Detected singles per side, dark counts included.
    pub singles: [u64; 2],
    /// Accidental coincidences estimated from the singles rates.
    pub accidentals_estimated: f64,
    pub pairs_simulated: u64,
    /// Diagnostic: pairs whose photon exited the monitored (+) port.
    pub port_plus: [u64; 2],
}

/// A complete scan: per-point counts plus the exact inputs that produced
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub kind: ScanKind,
    pub points: Vec<ScanPoint>,
    pub config: ExperimentConfig,
    pub spec: ScanSpec,
    pub seed: u64,
}

/// Everything simulate_pair observes about one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub path: PathPair,
    pub classification: TimingClassification,
    pub peak: PeakClass,
    pub ports: (OutputPort, OutputPort),
    /// Whether each photon was detected (monitored port, transmission and
    /// efficiency included).
    pub detected: [bool; 2],
    /// Realized arrival-time difference at the two beam splitters (s).
    pub arrival_dt: f64,
}

/// Per-point sampling context with the per-pair constants precomputed.
#[derive(Debug, Clone)]
pub struct PairSampler {
    jitter_sigma: f64,
    dt_offset: f64,
    separation: f64,
    frame_a: FrameVelocity,
    frame_b: FrameVelocity,
    p_long: [f64; 2],
    p_detect: [f64; 2],
    arm_delays: [f64; 2],
    mean_arm_delay: f64,
    window: f64,
    phi_sum: f64,
    visibility: f64,
    model: ModelKind,
}

impl PairSampler {
    /// Build a sampler for one scan point. `scan_phase` is added to the
    /// static phase of analyzer 1; `path_offset` overrides the configured
    /// source-side path difference.
    pub fn new(config: &ExperimentConfig, scan_phase: f64, path_offset: f64) -> Result<Self> {
        config.validate()?;
        let (frame_a, frame_b) = config.frames()?;
        let p_long = [0, 1].map(|side| {
            let analyzer = &config.analyzers[side];
            let r = analyzer.aom.reflectance();
            let t = 1.0 - r;
            // Double-pass weights: the diffracted branch reaches the
            // monitored port with intensity r^2, the other with t^2.
            let p_shifted = r * r / (r * r + t * t);
            match analyzer.shifted_arm {
                Arm::Long => p_shifted,
                Arm::Short => 1.0 - p_shifted,
            }
        });
        let p_detect =
            [0, 1].map(|side| config.analyzers[side].transmission * config.detectors[side].efficiency);
        Ok(PairSampler {
            jitter_sigma: config.arrival_jitter_sigma(),
            dt_offset: path_offset / SPEED_OF_LIGHT,
            separation: config.separation,
            frame_a,
            frame_b,
            p_long,
            p_detect,
            arm_delays: [config.analyzers[0].arm_delay(), config.analyzers[1].arm_delay()],
            mean_arm_delay: config.mean_arm_delay(),
            window: config.coincidence_window(),
            phi_sum: config.analyzers[0].phase + config.analyzers[1].phase + scan_phase,
            visibility: config.visibility,
            model: config.model.clone(),
        })
    }

    /// Simulate one photon pair.
    ///
    /// Draw order is fixed: arrival jitter, arm 1, arm 2, port pair, then
    /// one thinning draw per photon that reached the monitored port.
    pub fn simulate_pair<R: Rng>(&self, rng: &mut R) -> PairOutcome {
        let jitter: f64 = rng.sample::<f64, _>(StandardNormal) * self.jitter_sigma;
        let arrival_dt = self.dt_offset + jitter;
        let classification =
            classify_lab_separation(arrival_dt, self.separation, self.frame_a, self.frame_b);

        let arm_1 = if rng.gen::<f64>() < self.p_long[0] { Arm::Long } else { Arm::Short };
        let arm_2 = if rng.gen::<f64>() < self.p_long[1] { Arm::Long } else { Arm::Short };
        let nominal_displacement = match (arm_1, arm_2) {
            (Arm::Long, Arm::Short) => self.mean_arm_delay,
            (Arm::Short, Arm::Long) => -self.mean_arm_delay,
            _ => 0.0,
        };
        let arm_delay_1 = if arm_1 == Arm::Long { self.arm_delays[0] } else { 0.0 };
        let arm_delay_2 = if arm_2 == Arm::Long { self.arm_delays[1] } else { 0.0 };
        let path = PathPair {
            arm_1,
            arm_2,
            relative_delay: arm_delay_1 - arm_delay_2 - nominal_displacement + arrival_dt,
        };
        let peak = franson_postselect(&path, self.mean_arm_delay, self.window)
            .expect("peak resolvability was validated at construction");

        // Only central-peak pairs interfere; side and rejected pairs carry
        // independent unbiased ports.
        let law = if peak == PeakClass::Central {
            joint_distribution(&self.model, classification, self.phi_sum, self.visibility)
        } else {
            [0.25; 4]
        };
        let ports = PORT_PAIRS[pick_outcome(&law, rng.gen::<f64>())];

        let detected = [
            ports.0 == OutputPort::Plus && rng.gen::<f64>() < self.p_detect[0],
            ports.1 == OutputPort::Plus && rng.gen::<f64>() < self.p_detect[1],
        ];
        PairOutcome {
            path,
            classification,
            peak,
            ports,
            detected,
            arrival_dt,
        }
    }
}

/// One-shot convenience around [`PairSampler`] using the configured path
/// offset.
pub fn simulate_pair<R: Rng>(
    config: &ExperimentConfig,
    scan_phase: f64,
    rng: &mut R,
) -> Result<PairOutcome> {
    Ok(PairSampler::new(config, scan_phase, config.path_offset)?.simulate_pair(rng))
}

fn pick_outcome(law: &[f64; 4], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (index, probability) in law.iter().enumerate().take(3) {
        cumulative += probability;
        if u < cumulative {
            return index;
        }
    }
    3
}

/// Expected accidental coincidences R1 * R2 * tau * duration.
pub fn accidental_estimate(rate_1: f64, rate_2: f64, window: f64, duration: f64) -> f64 {
    rate_1 * rate_2 * window * duration
}

/// The RNG stream owned by one scan point: counter-derived from the master
/// seed, so any point can be simulated independently of the others.
pub fn point_rng(seed: u64, point_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(point_index.wrapping_add(1));
    rng
}

struct PointJob {
    index: u64,
    scan_value: f64,
    phase: f64,
    path_offset: f64,
}

fn enumerate_points(config: &ExperimentConfig, spec: &ScanSpec) -> Vec<PointJob> {
    match spec.kind {
        ScanKind::Phase => spec
            .values()
            .into_iter()
            .enumerate()
            .map(|(index, phase)| PointJob {
                index: index as u64,
                scan_value: phase,
                phase,
                path_offset: config.path_offset,
            })
            .collect(),
        ScanKind::PathLength => {
            let phases = spec.phases_per_step as u64;
            let phase_step = std::f64::consts::TAU / phases as f64;
            spec.values()
                .into_iter()
                .enumerate()
                .flat_map(|(offset_index, offset)| {
                    (0..phases).map(move |phase_index| PointJob {
                        index: offset_index as u64 * phases + phase_index,
                        scan_value: offset,
                        phase: phase_index as f64 * phase_step,
                        path_offset: offset,
                    })
                })
                .collect()
        }
    }
}

fn run_point(config: &ExperimentConfig, job: &PointJob) -> Result<ScanPoint> {
    let sampler = PairSampler::new(config, job.phase, job.path_offset)?;
    let mut rng = point_rng(config.seed, job.index);
    let pairs = config.pairs_per_point;

    let mut coincidences = 0u64;
    let mut singles = [0u64; 2];
    let mut port_plus = [0u64; 2];
    for _ in 0..pairs {
        let outcome = sampler.simulate_pair(&mut rng);
        if outcome.ports.0 == OutputPort::Plus {
            port_plus[0] += 1;
        }
        if outcome.ports.1 == OutputPort::Plus {
            port_plus[1] += 1;
        }
        if outcome.detected[0] {
            singles[0] += 1;
        }
        if outcome.detected[1] {
            singles[1] += 1;
        }
        if outcome.peak == PeakClass::Central && outcome.detected[0] && outcome.detected[1] {
            coincidences += 1;
        }
    }

    // Dark counts raise the singles, then uncorrelated coincidences are both
    // injected (truth) and estimated (what an experimenter would subtract).
    let duration = pairs as f64 / config.source.pair_rate;
    singles[0] += poisson_draw(&mut rng, config.detectors[0].dark_count_rate * duration);
    singles[1] += poisson_draw(&mut rng, config.detectors[1].dark_count_rate * duration);
    let accidentals = accidental_estimate(
        singles[0] as f64 / duration,
        singles[1] as f64 / duration,
        config.coincidence_window(),
        duration,
    );
    coincidences += poisson_draw(&mut rng, accidentals);

    Ok(ScanPoint {
        scan_value: job.scan_value,
        phase: job.phase,
        coincidences,
        singles,
        accidentals_estimated: accidentals,
        pairs_simulated: pairs,
        port_plus,
    })
}

fn poisson_draw<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Run a full scan. Points are evaluated in parallel; the result depends
/// only on (config, spec, seed).
pub fn run_scan(config: &ExperimentConfig, spec: &ScanSpec) -> Result<FringeScan> {
    config.validate()?;
    spec.validate()?;
    let jobs = enumerate_points(config, spec);
    let points: Vec<ScanPoint> = jobs
        .par_iter()
        .map(|job| run_point(config, job))
        .collect::<Result<_>>()?;
    Ok(FringeScan {
        kind: spec.kind,
        points,
        config: config.clone(),
        spec: spec.clone(),
        seed: config.seed,
    })
}
