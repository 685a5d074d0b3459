//! Frame-dependent time ordering of the two beam-splitter choice events.
//!
//! The geometry is one-dimensional: both events sit on the axis joining the
//! two analyzers, and every frame velocity is a signed speed along that axis.
//! Two counterpropagating frames disagree on the ordering of two events
//! exactly when the lab-frame time difference satisfies |dt| < v*d/c^2, a
//! condition far more stringent than spacelike separation |dt| < d/c.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SPEED_OF_LIGHT};

/// An event in lab-frame coordinates on the analyzer-to-analyzer axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeEvent {
    /// Lab-frame time (s).
    pub t: f64,
    /// Lab-frame position along the axis (m).
    pub x: f64,
    /// Free-text label, e.g. which analyzer fired.
    pub label: String,
}

impl SpacetimeEvent {
    pub fn new(t: f64, x: f64, label: impl Into<String>) -> Self {
        Self {
            t,
            x,
            label: label.into(),
        }
    }
}

/// A validated inertial-frame velocity, |v| strictly below c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FrameVelocity(f64);

impl FrameVelocity {
    /// The lab frame itself.
    pub const REST: FrameVelocity = FrameVelocity(0.0);

    pub fn new(speed: f64) -> Result<Self> {
        if !speed.is_finite() || speed.abs() >= SPEED_OF_LIGHT {
            return Err(Error::SuperluminalFrame { speed });
        }
        Ok(Self(speed))
    }

    /// Signed speed along the axis (m/s).
    pub fn speed(self) -> f64 {
        self.0
    }

    /// Lorentz factor of the frame.
    pub fn gamma(self) -> f64 {
        let beta = self.0 / SPEED_OF_LIGHT;
        1.0 / (1.0 - beta * beta).sqrt()
    }
}

impl TryFrom<f64> for FrameVelocity {
    type Error = Error;

    fn try_from(speed: f64) -> Result<Self> {
        FrameVelocity::new(speed)
    }
}

impl From<FrameVelocity> for f64 {
    fn from(frame: FrameVelocity) -> f64 {
        frame.0
    }
}

/// Which event comes first, as judged by each analyzer's own rest frame.
///
/// `BeforeBefore` means each analyzer, in its own frame, measures before the
/// other one does; `AfterAfter` the reverse. `BeforeAfter`/`AfterBefore`
/// cover the unambiguous cases where both frames agree that A (resp. B)
/// fires first. Exact simultaneity in either frame is reported as
/// `Degenerate` so that downstream models never silently pick a side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingClassification {
    BeforeBefore,
    AfterAfter,
    BeforeAfter,
    AfterBefore,
    Degenerate,
}

/// Time difference t'(B) - t'(A) seen from a moving frame (s).
///
/// Standard 1-D Lorentz boost of the event separation:
/// dt' = gamma * (dt - v * dx / c^2). Antisymmetric under swapping the events.
pub fn boosted_time_difference(
    event_a: &SpacetimeEvent,
    event_b: &SpacetimeEvent,
    frame: FrameVelocity,
) -> f64 {
    boosted_dt(event_b.t - event_a.t, event_b.x - event_a.x, frame)
}

fn boosted_dt(dt: f64, dx: f64, frame: FrameVelocity) -> f64 {
    frame.gamma() * (dt - frame.speed() * dx / (SPEED_OF_LIGHT * SPEED_OF_LIGHT))
}

/// Largest lab-frame |dt| for which two frames counterpropagating at speed
/// `v` still disagree on the event ordering: v * d / c^2 (s).
///
/// Preconditions: `v >= 0`, `d > 0` (validated at config level).
pub fn before_before_window(v: f64, d: f64) -> f64 {
    v * d / (SPEED_OF_LIGHT * SPEED_OF_LIGHT)
}

/// The before-before window expressed as a path-length discrepancy in air:
/// c * v * d / c^2 (m).
pub fn path_tolerance(v: f64, d: f64) -> f64 {
    SPEED_OF_LIGHT * before_before_window(v, d)
}

/// Classify the frame-dependent ordering of the two choice events.
///
/// Event A is judged in `frame_a` and event B in `frame_b`. An exact tie in
/// either frame yields `Degenerate`.
pub fn classify(
    event_a: &SpacetimeEvent,
    event_b: &SpacetimeEvent,
    frame_a: FrameVelocity,
    frame_b: FrameVelocity,
) -> TimingClassification {
    classify_dt_dx(
        event_b.t - event_a.t,
        event_b.x - event_a.x,
        frame_a,
        frame_b,
    )
}

/// Classification for an event pair given directly as a lab-frame separation.
///
/// `dt_lab` is t(B) - t(A) and `separation` is x(B) - x(A) > 0; this is the
/// allocation-free kernel the Monte Carlo loop uses.
pub fn classify_lab_separation(
    dt_lab: f64,
    separation: f64,
    frame_a: FrameVelocity,
    frame_b: FrameVelocity,
) -> TimingClassification {
    classify_dt_dx(dt_lab, separation, frame_a, frame_b)
}

fn classify_dt_dx(
    dt: f64,
    dx: f64,
    frame_a: FrameVelocity,
    frame_b: FrameVelocity,
) -> TimingClassification {
    let dt_in_a = boosted_dt(dt, dx, frame_a);
    let dt_in_b = boosted_dt(dt, dx, frame_b);
    if dt_in_a == 0.0 || dt_in_b == 0.0 {
        return TimingClassification::Degenerate;
    }
    // dt_in_a > 0 means A fires first as seen from A's own frame.
    match (dt_in_a > 0.0, dt_in_b > 0.0) {
        (true, false) => TimingClassification::BeforeBefore,
        (false, true) => TimingClassification::AfterAfter,
        (true, true) => TimingClassification::BeforeAfter,
        (false, false) => TimingClassification::AfterBefore,
    }
}

/// Lower bound on the lab-frame speed of a hypothetical influence linking
/// the two measurements, in units of c: (d / dt_uncertainty) / c.
pub fn influence_speed_lower_bound(d: f64, dt_uncertainty: f64) -> Result<f64> {
    if !(dt_uncertainty > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "timing uncertainty must be positive, got {dt_uncertainty}"
        )));
    }
    Ok(d / dt_uncertainty / SPEED_OF_LIGHT)
}
