//! The two competing per-event correlation laws, Franson post-selection, and
//! the Bell visibility criterion.
//!
//! Quantum mechanics predicts the central-peak coincidence rate
//! (1 + V cos(phi_1 + phi_2)) / 4 per port pair regardless of how the
//! analyzers move. The Multisimultaneity alternative keeps that law except
//! when the frame-ordering classification falls in a configurable suppressed
//! set (by default before-before), where every port pair becomes an
//! uncorrelated 1/4. Single-side marginals are exactly 1/2 in both models,
//! so neither can be used for signaling.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::relativity::TimingClassification;
use crate::{Error, Result};

/// Threshold visibility above which no local-variable theory can reproduce
/// the fringes: 1/sqrt(2).
pub const BELL_VISIBILITY_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// One of the two output ports of an analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputPort {
    Plus,
    Minus,
}

impl OutputPort {
    /// Port sign, +1 or -1.
    pub fn sign(self) -> f64 {
        match self {
            OutputPort::Plus => 1.0,
            OutputPort::Minus => -1.0,
        }
    }
}

/// Short or long interferometer arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    Short,
    Long,
}

/// The arms taken by the two photons of a pair, plus the pair's timing
/// offset before arm displacement (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPair {
    pub arm_1: Arm,
    pub arm_2: Arm,
    pub relative_delay: f64,
}

/// Where a coincidence falls in the three-peak Franson histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakClass {
    /// Short-short or long-long: the interfering, post-selected events.
    Central,
    /// Mixed arms, displaced by the arm-imbalance delay: kept in raw data
    /// but excluded from the fringe.
    Side,
    /// Relative detection delay outside the coincidence window of its peak.
    Rejected,
}

/// Timing classifications for which Multisimultaneity suppresses the
/// correlations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuppressedSet(BTreeSet<TimingClassification>);

impl SuppressedSet {
    pub fn empty() -> Self {
        SuppressedSet(BTreeSet::new())
    }

    pub fn contains(&self, classification: TimingClassification) -> bool {
        self.0.contains(&classification)
    }

    pub fn insert(&mut self, classification: TimingClassification) {
        self.0.insert(classification);
    }

    pub fn iter(&self) -> impl Iterator<Item = TimingClassification> + '_ {
        self.0.iter().copied()
    }
}

impl Default for SuppressedSet {
    /// The model's published prediction: correlations disappear in the
    /// before-before configuration.
    fn default() -> Self {
        let mut set = SuppressedSet::empty();
        set.insert(TimingClassification::BeforeBefore);
        set
    }
}

impl FromIterator<TimingClassification> for SuppressedSet {
    fn from_iter<I: IntoIterator<Item = TimingClassification>>(iter: I) -> Self {
        SuppressedSet(iter.into_iter().collect())
    }
}

/// Which correlation model drives the simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    Quantum,
    Multisimultaneity { suppressed: SuppressedSet },
}

impl ModelKind {
    /// Multisimultaneity with its default suppressed set.
    pub fn multisimultaneity() -> Self {
        ModelKind::Multisimultaneity {
            suppressed: SuppressedSet::default(),
        }
    }

    /// Joint port probability under this model.
    pub fn joint_probability(
        &self,
        classification: TimingClassification,
        phi_1: f64,
        phi_2: f64,
        visibility: f64,
        ports: (OutputPort, OutputPort),
    ) -> Result<f64> {
        match self {
            ModelKind::Quantum => qm_joint_probability(phi_1, phi_2, visibility, ports),
            ModelKind::Multisimultaneity { suppressed } => {
                ms_joint_probability(classification, phi_1, phi_2, visibility, ports, suppressed)
            }
        }
    }

    /// True when this model ignores the fringe phase for the given
    /// classification.
    pub fn suppresses(&self, classification: TimingClassification) -> bool {
        match self {
            ModelKind::Quantum => false,
            ModelKind::Multisimultaneity { suppressed } => suppressed.contains(classification),
        }
    }
}

fn check_visibility(visibility: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::VisibilityOutOfRange(visibility));
    }
    Ok(())
}

/// Quantum joint probability for one port pair:
/// (1 + V s1 s2 cos(phi_1 + phi_2)) / 4.
pub fn qm_joint_probability(
    phi_1: f64,
    phi_2: f64,
    visibility: f64,
    ports: (OutputPort, OutputPort),
) -> Result<f64> {
    check_visibility(visibility)?;
    let correlation = ports.0.sign() * ports.1.sign();
    Ok((1.0 + visibility * correlation * (phi_1 + phi_2).cos()) / 4.0)
}

/// Multisimultaneity joint probability: independent 50/50 marginals (1/4 per
/// port pair, no phase dependence) when the classification is suppressed,
/// identical to the quantum law otherwise.
pub fn ms_joint_probability(
    classification: TimingClassification,
    phi_1: f64,
    phi_2: f64,
    visibility: f64,
    ports: (OutputPort, OutputPort),
    suppressed: &SuppressedSet,
) -> Result<f64> {
    check_visibility(visibility)?;
    if suppressed.contains(classification) {
        Ok(0.25)
    } else {
        qm_joint_probability(phi_1, phi_2, visibility, ports)
    }
}

/// All four joint probabilities in the fixed order
/// (+,+), (+,-), (-,+), (-,-).
///
/// Infallible kernel for the sampling loop; `visibility` must already be
/// validated to [0, 1].
pub fn joint_distribution(
    model: &ModelKind,
    classification: TimingClassification,
    phi_sum: f64,
    visibility: f64,
) -> [f64; 4] {
    debug_assert!((0.0..=1.0).contains(&visibility));
    if model.suppresses(classification) {
        return [0.25; 4];
    }
    let interference = visibility * phi_sum.cos() / 4.0;
    [
        0.25 + interference,
        0.25 - interference,
        0.25 - interference,
        0.25 + interference,
    ]
}

/// Port pair for an outcome index in the `joint_distribution` order.
pub const PORT_PAIRS: [(OutputPort, OutputPort); 4] = [
    (OutputPort::Plus, OutputPort::Plus),
    (OutputPort::Plus, OutputPort::Minus),
    (OutputPort::Minus, OutputPort::Plus),
    (OutputPort::Minus, OutputPort::Minus),
];

/// Classify a coincidence into the Franson peak structure.
///
/// `arm_delay` is the common long-short travel-time difference and `window`
/// the coincidence window; the peaks are only meaningful when the former
/// resolves the latter.
pub fn franson_postselect(path: &PathPair, arm_delay: f64, window: f64) -> Result<PeakClass> {
    if !(arm_delay > window) {
        return Err(Error::UnresolvablePeaks {
            arm_delay_s: arm_delay,
            window_s: window,
        });
    }
    // Peak centers sit at 0 and +-arm_delay; the residual within a peak is
    // the pair's own timing offset.
    if path.relative_delay.abs() > window {
        return Ok(PeakClass::Rejected);
    }
    if path.arm_1 == path.arm_2 {
        Ok(PeakClass::Central)
    } else {
        Ok(PeakClass::Side)
    }
}

/// Outcome of the Bell visibility criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellVerdict {
    /// True iff the visibility strictly exceeds 1/sqrt(2).
    pub violated: bool,
    /// Distance from the threshold in units of the visibility uncertainty.
    pub margin_sigma: f64,
}

/// Test a fitted visibility against the local-variable bound 1/sqrt(2).
pub fn bell_visibility_violated(visibility: f64, sigma_visibility: f64) -> BellVerdict {
    BellVerdict {
        violated: visibility > BELL_VISIBILITY_THRESHOLD,
        margin_sigma: (visibility - BELL_VISIBILITY_THRESHOLD) / sigma_visibility,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    use OutputPort::{Minus, Plus};

    #[test]
    fn perfect_correlation_limit() {
        assert_relative_eq!(
            qm_joint_probability(0.0, 0.0, 1.0, (Plus, Plus)).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        assert_abs_diff_eq!(
            qm_joint_probability(0.0, 0.0, 1.0, (Plus, Minus)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_visibility_gives_uniform_outcomes() {
        for ports in PORT_PAIRS {
            assert_relative_eq!(
                qm_joint_probability(1.0, 2.0, 0.0, ports).unwrap(),
                0.25,
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn fitted_visibility_anticorrelation_point() {
        // V = 0.85, phi_1 + phi_2 = pi: P(+,+) = (1 - 0.85)/4.
        let p = qm_joint_probability(std::f64::consts::PI, 0.0, 0.85, (Plus, Plus)).unwrap();
        assert_relative_eq!(p, 0.0375, max_relative = 1e-12);
    }

    #[test]
    fn visibility_range_enforced() {
        assert!(qm_joint_probability(0.0, 0.0, 1.1, (Plus, Plus)).is_err());
        assert!(qm_joint_probability(0.0, 0.0, -0.1, (Plus, Plus)).is_err());
    }

    #[test]
    fn suppressed_classification_flattens_correlations() {
        let suppressed = SuppressedSet::default();
        for ports in PORT_PAIRS {
            let p = ms_joint_probability(
                TimingClassification::BeforeBefore,
                0.3,
                -0.3,
                1.0,
                ports,
                &suppressed,
            )
            .unwrap();
            assert_eq!(p, 0.25);
        }
    }

    #[test]
    fn unsuppressed_classification_matches_quantum_law() {
        let suppressed = SuppressedSet::default();
        for ports in PORT_PAIRS {
            let ms = ms_joint_probability(
                TimingClassification::BeforeAfter,
                0.0,
                0.0,
                1.0,
                ports,
                &suppressed,
            )
            .unwrap();
            let qm = qm_joint_probability(0.0, 0.0, 1.0, ports).unwrap();
            assert_eq!(ms, qm);
        }
    }

    #[test]
    fn franson_peak_assignment() {
        let pair = |arm_1, arm_2, delay| PathPair {
            arm_1,
            arm_2,
            relative_delay: delay,
        };
        let dt = 1e-9;
        let window = 0.3e-9;
        assert_eq!(
            franson_postselect(&pair(Arm::Short, Arm::Short, 0.0), dt, window).unwrap(),
            PeakClass::Central
        );
        assert_eq!(
            franson_postselect(&pair(Arm::Long, Arm::Long, 0.0), dt, window).unwrap(),
            PeakClass::Central
        );
        assert_eq!(
            franson_postselect(&pair(Arm::Short, Arm::Long, 0.0), dt, window).unwrap(),
            PeakClass::Side
        );
        assert_eq!(
            franson_postselect(&pair(Arm::Long, Arm::Short, 0.0), dt, window).unwrap(),
            PeakClass::Side
        );
        assert_eq!(
            franson_postselect(&pair(Arm::Short, Arm::Short, 0.5e-9), dt, window).unwrap(),
            PeakClass::Rejected
        );
        // Unresolvable peaks are a configuration error.
        assert!(franson_postselect(&pair(Arm::Short, Arm::Short, 0.0), 0.2e-9, window).is_err());
    }

    #[test]
    fn bell_verdict_at_published_values() {
        let verdict = bell_visibility_violated(0.85, 0.05);
        assert!(verdict.violated);
        assert_relative_eq!(verdict.margin_sigma, 2.86, max_relative = 0.01);

        let boundary = bell_visibility_violated(BELL_VISIBILITY_THRESHOLD, 0.05);
        assert!(!boundary.violated);

        assert!(!bell_visibility_violated(0.5, 0.05).violated);
    }

    proptest! {
        #[test]
        fn four_outcomes_sum_to_one(
            phi_1 in -10.0_f64..10.0,
            phi_2 in -10.0_f64..10.0,
            v in 0.0_f64..1.0,
        ) {
            let total: f64 = PORT_PAIRS
                .iter()
                .map(|&ports| qm_joint_probability(phi_1, phi_2, v, ports).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        // Marginals are exactly 1/2 whatever the remote phase: the
        // correlations cannot carry a signal.
        #[test]
        fn no_signaling_marginals(
            phi_1 in -10.0_f64..10.0,
            phi_2 in -10.0_f64..10.0,
            v in 0.0_f64..1.0,
            suppressed_bb in prop::bool::ANY,
        ) {
            let suppressed = if suppressed_bb {
                SuppressedSet::default()
            } else {
                SuppressedSet::empty()
            };
            for classification in [
                TimingClassification::BeforeBefore,
                TimingClassification::BeforeAfter,
            ] {
                let marginal_plus: f64 = [(Plus, Plus), (Plus, Minus)]
                    .iter()
                    .map(|&ports| {
                        ms_joint_probability(classification, phi_1, phi_2, v, ports, &suppressed)
                            .unwrap()
                    })
                    .sum();
                prop_assert!((marginal_plus - 0.5).abs() < 1e-12);
            }
        }

        #[test]
        fn law_depends_only_on_phase_sum(
            phi_1 in -10.0_f64..10.0,
            shift in -10.0_f64..10.0,
            phi_2 in -10.0_f64..10.0,
            v in 0.0_f64..1.0,
        ) {
            for ports in PORT_PAIRS {
                let a = qm_joint_probability(phi_1 + shift, phi_2 - shift, v, ports).unwrap();
                let b = qm_joint_probability(phi_1, phi_2, v, ports).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn models_agree_outside_suppressed_set(
            phi_1 in -10.0_f64..10.0,
            phi_2 in -10.0_f64..10.0,
            v in 0.0_f64..1.0,
        ) {
            let suppressed = SuppressedSet::default();
            for classification in [
                TimingClassification::AfterAfter,
                TimingClassification::BeforeAfter,
                TimingClassification::AfterBefore,
                TimingClassification::Degenerate,
            ] {
                for ports in PORT_PAIRS {
                    let ms = ms_joint_probability(
                        classification, phi_1, phi_2, v, ports, &suppressed,
                    ).unwrap();
                    let qm = qm_joint_probability(phi_1, phi_2, v, ports).unwrap();
                    prop_assert_eq!(ms, qm);
                }
            }
        }

        #[test]
        fn distribution_matches_pairwise_law(
            phi_sum in -10.0_f64..10.0,
            v in 0.0_f64..1.0,
        ) {
            let model = ModelKind::Quantum;
            let law = joint_distribution(
                &model, TimingClassification::BeforeAfter, phi_sum, v,
            );
            for (index, &ports) in PORT_PAIRS.iter().enumerate() {
                let direct = qm_joint_probability(phi_sum, 0.0, v, ports).unwrap();
                prop_assert!((law[index] - direct).abs() < 1e-12);
            }
        }
    }
}
