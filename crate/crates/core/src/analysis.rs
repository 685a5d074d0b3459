//! Fringe fitting and visibility extraction.
//!
//! The sinusoid B (1 + V cos(phi + phi0)) is linearized as
//! B + P cos(phi) + Q sin(phi) and solved as an exact weighted linear least
//! squares, which cannot fail to converge; V = sqrt(P^2 + Q^2) / B and its
//! uncertainty follow from the 3x3 covariance. Accidental coincidences are
//! subtracted point-by-point (with variance bookkeeping) before fitting.

use serde::{Deserialize, Serialize};

use crate::config::{ScanKind, ScanSpec};
use crate::montecarlo::FringeScan;
use crate::{Error, Result};

/// Dip detection threshold in combined standard deviations.
pub const DIP_SIGMA_THRESHOLD: f64 = 5.0;

/// A fitted fringe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFit {
    /// Amplitude of the cosine term, in counts.
    pub amplitude: f64,
    /// Fringe contrast amplitude / baseline.
    pub visibility: f64,
    /// Phase offset of the fitted cosine (rad).
    pub phase_offset: f64,
    /// Mean count level.
    pub baseline: f64,
    /// One-sigma statistical uncertainty on the visibility.
    pub sigma_visibility: f64,
    pub reduced_chi_square: f64,
    pub points_used: usize,
}

/// One accidental-corrected scan point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedPoint {
    pub scan_value: f64,
    pub phase: f64,
    /// Coincidences minus estimated accidentals; may be negative.
    pub count: f64,
    /// Counting variance of the corrected count.
    pub variance: f64,
}

/// An accidental-corrected scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedScan {
    pub kind: ScanKind,
    pub points: Vec<CorrectedPoint>,
}

/// Subtract the per-point accidental estimate from the coincidences.
///
/// Corrected counts keep their sign; the variance carries both the raw
/// Poisson term and the subtracted estimate.
pub fn subtract_accidentals(scan: &FringeScan) -> CorrectedScan {
    let points = scan
        .points
        .iter()
        .map(|point| CorrectedPoint {
            scan_value: point.scan_value,
            phase: point.phase,
            count: point.coincidences as f64 - point.accidentals_estimated,
            variance: (point.coincidences as f64).max(1.0) + point.accidentals_estimated,
        })
        .collect();
    CorrectedScan {
        kind: scan.kind,
        points,
    }
}

/// Fit a fringe to (phase, count) points with Poisson weights
/// (variance = max(count, 1)).
pub fn fit_fringe(points: &[(f64, f64)]) -> Result<VisibilityFit> {
    let weighted: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(phase, count)| (phase, count, count.max(1.0)))
        .collect();
    fit_fringe_weighted(&weighted)
}

/// Fit a fringe to (phase, count, variance) points.
pub fn fit_fringe_weighted(points: &[(f64, f64, f64)]) -> Result<VisibilityFit> {
    if points.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 points, got {}",
            points.len()
        )));
    }
    let mut normal = [[0.0_f64; 3]; 3];
    let mut rhs = [0.0_f64; 3];
    for &(phase, count, variance) in points {
        if !(variance > 0.0) {
            return Err(Error::Fit(format!(
                "non-positive variance {variance} at phase {phase}"
            )));
        }
        let weight = 1.0 / variance;
        let basis = [1.0, phase.cos(), phase.sin()];
        for row in 0..3 {
            for col in 0..3 {
                normal[row][col] += weight * basis[row] * basis[col];
            }
            rhs[row] += weight * basis[row] * count;
        }
    }
    let (solution, covariance) = solve_symmetric_3x3(&normal, &rhs).ok_or_else(|| {
        Error::Fit("degenerate phase span: normal equations are singular".to_string())
    })?;
    let [baseline, p, q] = solution;
    if !(baseline > 0.0) {
        return Err(Error::Fit(format!(
            "non-positive fitted baseline {baseline}; counts do not describe a fringe"
        )));
    }
    let amplitude = p.hypot(q);
    let visibility = amplitude / baseline;
    let phase_offset = (-q).atan2(p);

    // Propagate the (B, P, Q) covariance through V = sqrt(P^2 + Q^2) / B.
    // At zero amplitude the gradient is undefined; fall back to the
    // orientation-averaged spread of (P, Q).
    let sigma_visibility = if amplitude > 1e-9 * baseline {
        let gradient = [
            -amplitude / (baseline * baseline),
            p / (amplitude * baseline),
            q / (amplitude * baseline),
        ];
        quadratic_form(&covariance, &gradient).max(0.0).sqrt()
    } else {
        ((covariance[1][1] + covariance[2][2]) / 2.0).max(0.0).sqrt() / baseline
    };

    let chi_square: f64 = points
        .iter()
        .map(|&(phase, count, variance)| {
            let model = baseline + p * phase.cos() + q * phase.sin();
            (count - model) * (count - model) / variance
        })
        .sum();
    let dof = points.len().saturating_sub(3).max(1);

    Ok(VisibilityFit {
        amplitude,
        visibility,
        phase_offset,
        baseline,
        sigma_visibility,
        reduced_chi_square: chi_square / dof as f64,
        points_used: points.len(),
    })
}

fn quadratic_form(matrix: &[[f64; 3]; 3], vector: &[f64; 3]) -> f64 {
    let mut total = 0.0;
    for row in 0..3 {
        for col in 0..3 {
            total += vector[row] * matrix[row][col] * vector[col];
        }
    }
    total
}

/// Solve M x = b for symmetric M and return (x, M^-1), or None when M is
/// singular relative to its scale.
fn solve_symmetric_3x3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<([f64; 3], [[f64; 3]; 3])> {
    let cofactor = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adjugate = [
        [cofactor(1, 1, 2, 2), cofactor(0, 2, 2, 1), cofactor(0, 1, 1, 2)],
        [cofactor(1, 2, 2, 0), cofactor(0, 0, 2, 2), cofactor(0, 2, 1, 0)],
        [cofactor(1, 0, 2, 1), cofactor(0, 1, 2, 0), cofactor(0, 0, 1, 1)],
    ];
    let det = m[0][0] * adjugate[0][0] + m[0][1] * adjugate[1][0] + m[0][2] * adjugate[2][0];
    let scale: f64 = (0..3)
        .map(|row| m[row].iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
        .product();
    if det.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return None;
    }
    let mut inverse = [[0.0; 3]; 3];
    for row in 0..3 {
        for col in 0..3 {
            inverse[row][col] = adjugate[row][col] / det;
        }
    }
    let mut solution = [0.0; 3];
    for row in 0..3 {
        for col in 0..3 {
            solution[row] += inverse[row][col] * b[col];
        }
    }
    Some((solution, inverse))
}

/// Visibility at one path offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetVisibility {
    pub offset: f64,
    pub visibility: f64,
    pub sigma: f64,
    pub fit: VisibilityFit,
}

/// Visibility-versus-offset curve; offsets whose fit failed become gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityCurve {
    pub points: Vec<OffsetVisibility>,
    pub gaps: Vec<(f64, String)>,
}

/// Split a path-length scan into its per-offset phase sub-scans.
pub fn split_length_scan(scan: &FringeScan) -> Result<Vec<(f64, FringeScan)>> {
    if scan.kind != ScanKind::PathLength {
        return Err(Error::Scan(
            "only path-length scans split into per-offset fringes".to_string(),
        ));
    }
    let phases = scan.spec.phases_per_step as usize;
    if phases == 0 || scan.points.len() % phases != 0 {
        return Err(Error::Scan(format!(
            "{} points do not divide into sweeps of {phases} phases",
            scan.points.len()
        )));
    }
    let sub_spec = ScanSpec {
        kind: ScanKind::Phase,
        start: 0.0,
        stop: (phases as f64 - 1.0) * std::f64::consts::TAU / phases as f64,
        step: std::f64::consts::TAU / phases as f64,
        phases_per_step: scan.spec.phases_per_step,
    };
    Ok(scan
        .points
        .chunks(phases)
        .map(|chunk| {
            let offset = chunk[0].scan_value;
            let mut config = scan.config.clone();
            config.path_offset = offset;
            let points = chunk
                .iter()
                .map(|point| {
                    let mut sub = point.clone();
                    sub.scan_value = point.phase;
                    sub
                })
                .collect();
            (
                offset,
                FringeScan {
                    kind: ScanKind::Phase,
                    points,
                    config,
                    spec: sub_spec.clone(),
                    seed: scan.seed,
                },
            )
        })
        .collect())
}

/// Fit every per-offset scan (after accidental subtraction) into an ordered
/// visibility curve.
pub fn visibility_vs_offset(scans: &[(f64, FringeScan)]) -> VisibilityCurve {
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for (offset, scan) in scans {
        let corrected = subtract_accidentals(scan);
        let weighted: Vec<(f64, f64, f64)> = corrected
            .points
            .iter()
            .map(|p| (p.phase, p.count, p.variance))
            .collect();
        match fit_fringe_weighted(&weighted) {
            Ok(fit) => points.push(OffsetVisibility {
                offset: *offset,
                visibility: fit.visibility,
                sigma: fit.sigma_visibility,
                fit,
            }),
            Err(error) => gaps.push((*offset, error.to_string())),
        }
    }
    points.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    VisibilityCurve { points, gaps }
}

/// Result of the sliding-window dip search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipReport {
    /// True when some window of consecutive points sits more than
    /// [`DIP_SIGMA_THRESHOLD`] combined sigma below the rest of the curve.
    pub detected: bool,
    /// Center offset of the most significant window.
    pub location: f64,
    /// Significance of that window in combined sigma.
    pub depth_sigma: f64,
    pub window_points: usize,
}

/// Search a visibility curve for a dip of `window_steps` consecutive points.
pub fn dip_test(curve: &[OffsetVisibility], window_steps: usize) -> Result<DipReport> {
    if window_steps == 0 {
        return Err(Error::InvalidArgument("dip window must be at least 1 point".into()));
    }
    if curve.len() < window_steps + 1 {
        return Err(Error::InvalidArgument(format!(
            "dip window of {window_steps} points needs a longer curve than {}",
            curve.len()
        )));
    }
    let mut best: Option<(f64, f64)> = None; // (depth_sigma, location)
    for start in 0..=(curve.len() - window_steps) {
        let inside = &curve[start..start + window_steps];
        let outside = curve[..start].iter().chain(&curve[start + window_steps..]);
        let (mean_in, var_in) = weighted_mean(inside.iter());
        let (mean_out, var_out) = weighted_mean(outside);
        let depth = (mean_out - mean_in) / (var_in + var_out).sqrt();
        let location = (inside[0].offset + inside[window_steps - 1].offset) / 2.0;
        if best.map_or(true, |(d, _)| depth > d) {
            best = Some((depth, location));
        }
    }
    let (depth_sigma, location) = best.expect("at least one window");
    Ok(DipReport {
        detected: depth_sigma > DIP_SIGMA_THRESHOLD,
        location,
        depth_sigma,
        window_points: window_steps,
    })
}

fn weighted_mean<'a, I: Iterator<Item = &'a OffsetVisibility>>(points: I) -> (f64, f64) {
    let mut weight_sum = 0.0;
    let mut weighted_value = 0.0;
    for point in points {
        let weight = 1.0 / (point.sigma * point.sigma).max(1e-30);
        weight_sum += weight;
        weighted_value += weight * point.visibility;
    }
    (weighted_value / weight_sum, 1.0 / weight_sum)
}

/// Half-depth extent of a central dip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipWidth {
    pub left: f64,
    pub right: f64,
    pub width: f64,
    /// Visibility level at which the width was measured.
    pub level: f64,
}

/// Measure the full width of the deepest feature at half its depth below
/// the plateau. Returns None when the curve has no significant minimum.
pub fn dip_half_width(curve: &[OffsetVisibility]) -> Option<DipWidth> {
    if curve.len() < 5 {
        return None;
    }
    // The plateau from the outer half of the offsets, the floor from the
    // deepest point.
    let max_offset = curve
        .iter()
        .map(|p| p.offset.abs())
        .fold(0.0_f64, f64::max);
    let outer: Vec<&OffsetVisibility> = curve
        .iter()
        .filter(|p| p.offset.abs() >= max_offset / 2.0)
        .collect();
    let (plateau, plateau_var) = weighted_mean(outer.into_iter());
    let lowest = curve
        .iter()
        .min_by(|a, b| a.visibility.total_cmp(&b.visibility))?;
    let depth = plateau - lowest.visibility;
    if depth < 5.0 * (plateau_var.sqrt() + lowest.sigma) {
        return None;
    }
    let level = plateau - depth / 2.0;

    let crossing = |a: &OffsetVisibility, b: &OffsetVisibility| -> f64 {
        let fraction = (a.visibility - level) / (a.visibility - b.visibility);
        a.offset + fraction * (b.offset - a.offset)
    };
    let mut left = None;
    for pair in curve.windows(2) {
        if pair[0].visibility >= level && pair[1].visibility < level {
            left = Some(crossing(&pair[0], &pair[1]));
            break;
        }
    }
    let mut right = None;
    for pair in curve.windows(2).rev() {
        if pair[1].visibility >= level && pair[0].visibility < level {
            right = Some(crossing(&pair[1], &pair[0]));
            break;
        }
    }
    match (left, right) {
        (Some(left), Some(right)) if right > left => Some(DipWidth {
            left,
            right,
            width: right - left,
            level,
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn synthetic_fringe(baseline: f64, visibility: f64, phase_offset: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let phase = i as f64 * std::f64::consts::TAU / n as f64;
                (phase, baseline * (1.0 + visibility * (phase + phase_offset).cos()))
            })
            .collect()
    }

    #[test]
    fn exact_recovery_of_noiseless_fringe() {
        let fit = fit_fringe(&synthetic_fringe(300.0, 0.85, 0.4, 16)).unwrap();
        assert_abs_diff_eq!(fit.visibility, 0.85, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.phase_offset, 0.4, epsilon = 1e-6);
        assert_relative_eq!(fit.baseline, 300.0, max_relative = 1e-6);
        assert_relative_eq!(fit.amplitude, 255.0, max_relative = 1e-6);
        assert_eq!(fit.points_used, 16);
        assert!(fit.sigma_visibility > 0.0);
    }

    #[test]
    fn flat_counts_are_consistent_with_zero_visibility() {
        let points: Vec<(f64, f64)> = (0..12)
            .map(|i| (i as f64 * std::f64::consts::TAU / 12.0, 250.0))
            .collect();
        let fit = fit_fringe(&points).unwrap();
        assert!(fit.visibility.abs() < 3.0 * fit.sigma_visibility);
    }

    #[test]
    fn too_few_or_degenerate_points_are_rejected() {
        assert!(fit_fringe(&[(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]).is_err());
        let stacked: Vec<(f64, f64)> = (0..8).map(|i| (1.0, 100.0 + i as f64)).collect();
        assert!(matches!(fit_fringe(&stacked), Err(Error::Fit(_))));
    }

    #[test]
    fn uniform_accidental_floor_lowers_then_restores_visibility() {
        // A flat floor a on top of B (1 + V cos phi) fits as visibility
        // B V / (B + a); subtracting the floor restores V.
        let baseline = 200.0;
        let visibility = 0.9;
        let floor = 50.0;
        let raw: Vec<(f64, f64)> = synthetic_fringe(baseline, visibility, 0.0, 16)
            .into_iter()
            .map(|(phase, count)| (phase, count + floor))
            .collect();
        let raw_fit = fit_fringe(&raw).unwrap();
        assert_relative_eq!(
            raw_fit.visibility,
            baseline * visibility / (baseline + floor),
            max_relative = 1e-9
        );
        let corrected: Vec<(f64, f64)> =
            raw.iter().map(|&(phase, count)| (phase, count - floor)).collect();
        let corrected_fit = fit_fringe(&corrected).unwrap();
        assert_relative_eq!(corrected_fit.visibility, visibility, max_relative = 1e-9);
    }

    #[test]
    fn solver_inverts_a_known_matrix() {
        let m = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let b = [1.0, 2.0, 3.0];
        let (x, inv) = solve_symmetric_3x3(&m, &b).unwrap();
        // M x == b and M M^-1 == I.
        for row in 0..3 {
            let mx: f64 = (0..3).map(|col| m[row][col] * x[col]).sum();
            assert_abs_diff_eq!(mx, b[row], epsilon = 1e-12);
            for col in 0..3 {
                let identity: f64 = (0..3).map(|k| m[row][k] * inv[k][col]).sum();
                let expected = if row == col { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(identity, expected, epsilon = 1e-12);
            }
        }
        let singular = [[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]];
        assert!(solve_symmetric_3x3(&singular, &b).is_none());
    }

    fn flat_curve(visibility: f64, sigma: f64, n: usize) -> Vec<OffsetVisibility> {
        (0..n)
            .map(|i| OffsetVisibility {
                offset: (i as f64 - n as f64 / 2.0) * 0.12e-3,
                visibility,
                sigma,
                fit: VisibilityFit {
                    amplitude: visibility * 100.0,
                    visibility,
                    phase_offset: 0.0,
                    baseline: 100.0,
                    sigma_visibility: sigma,
                    reduced_chi_square: 1.0,
                    points_used: 12,
                },
            })
            .collect()
    }

    #[test]
    fn dip_detection_on_synthetic_curves() {
        let flat = flat_curve(0.85, 0.03, 21);
        let report = dip_test(&flat, 3).unwrap();
        assert!(!report.detected, "flat curve flagged: {report:?}");

        let mut dipped = flat_curve(0.85, 0.03, 21);
        for point in &mut dipped[9..12] {
            point.visibility = 0.0;
        }
        let report = dip_test(&dipped, 3).unwrap();
        assert!(report.detected);
        assert!(report.depth_sigma > DIP_SIGMA_THRESHOLD);
        assert_abs_diff_eq!(report.location, dipped[10].offset, epsilon = 1e-12);

        assert!(dip_test(&flat, 22).is_err());
        assert!(dip_test(&flat, 0).is_err());
    }

    #[test]
    fn half_width_of_a_synthetic_dip() {
        let mut curve = flat_curve(0.8, 0.01, 41);
        // Gaussian dip of sigma 2 steps centered on index 20.
        for (index, point) in curve.iter_mut().enumerate() {
            let z = (index as f64 - 20.0) / 2.0;
            point.visibility = 0.8 * (1.0 - (-0.5 * z * z).exp());
        }
        let width = dip_half_width(&curve).unwrap();
        // Half depth of a Gaussian: full width 2 sqrt(2 ln 2) sigma.
        let expected = 2.0 * (2.0 * 2.0_f64.ln()).sqrt() * 2.0 * 0.12e-3;
        assert_relative_eq!(width.width, expected, max_relative = 0.05);
        assert!(dip_half_width(&flat_curve(0.8, 0.01, 41)).is_none());
    }

    proptest! {
        // Shifting every phase by a constant moves phase_offset and nothing
        // else.
        #[test]
        fn fit_is_phase_equivariant(
            shift in -3.0_f64..3.0,
            visibility in 0.05_f64..1.0,
            baseline in 50.0_f64..5000.0,
        ) {
            let original = synthetic_fringe(baseline, visibility, 0.3, 16);
            let shifted: Vec<(f64, f64)> = original
                .iter()
                .map(|&(phase, count)| (phase + shift, count))
                .collect();
            let fit_a = fit_fringe(&original).unwrap();
            let fit_b = fit_fringe(&shifted).unwrap();
            prop_assert!((fit_a.visibility - fit_b.visibility).abs() < 1e-9);
            let wrapped = (fit_b.phase_offset + shift - fit_a.phase_offset)
                .rem_euclid(std::f64::consts::TAU);
            prop_assert!(wrapped.min(std::f64::consts::TAU - wrapped) < 1e-6);
        }

        // Counts stay above the max(count, 1) weight floor so the Poisson
        // weights rescale uniformly.
        #[test]
        fn fit_is_scale_invariant(
            scale in 0.1_f64..100.0,
            visibility in 0.0_f64..0.8,
            baseline in 100.0_f64..1000.0,
        ) {
            let original = synthetic_fringe(baseline, visibility, -0.7, 12);
            let scaled: Vec<(f64, f64)> = original
                .iter()
                .map(|&(phase, count)| (phase, count * scale))
                .collect();
            let fit_a = fit_fringe(&original).unwrap();
            let fit_b = fit_fringe(&scaled).unwrap();
            prop_assert!((fit_a.visibility - fit_b.visibility).abs() < 1e-9);
        }
    }
}
