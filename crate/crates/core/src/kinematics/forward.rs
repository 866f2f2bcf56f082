//! Forward kinematics: recover the platform position from cable lengths.
//!
//! With four cables and three unknowns the problem is overdetermined, so we
//! minimize `Σ (‖p − aᵢ‖ − lᵢ)²` with a damped Gauss–Newton (Levenberg)
//! iteration. When the anchors are coplanar the objective is symmetric about
//! their plane and the minimizer is only defined up to that reflection; the
//! working side (or a hint) picks one.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{AnchorSet, CableLengths, KinematicsError, Point3};

pub const DEFAULT_FK_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

/// Which side of a coplanar anchor set the platform is assumed to be on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkingSide {
    /// Smaller z than the anchor plane: the platform hangs from the coils.
    #[default]
    Below,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkOptions {
    /// RMS residual (cm) under which a solution counts as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub working_side: WorkingSide,
}

impl Default for FkOptions {
    fn default() -> Self {
        FkOptions {
            tolerance: DEFAULT_FK_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            working_side: WorkingSide::Below,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionSolution {
    pub position: Point3,
    /// Root mean square of the per-cable residuals `‖p − aᵢ‖ − lᵢ`, in cm.
    pub residual: f64,
    pub converged: bool,
}

/// Per-cable residuals `‖p − aᵢ‖ − lᵢ`.
pub fn fk_residuals(p: &Point3, lengths: &[f64], anchors: &AnchorSet) -> Vec<f64> {
    anchors
        .points()
        .iter()
        .zip(lengths)
        .map(|(a, l)| p.distance(a) - l)
        .collect()
}

/// Jacobian of [`fk_residuals`] with respect to `p`: row `i` is the unit
/// vector from anchor `i` to `p` (zero when they coincide).
pub fn fk_jacobian(p: &Point3, anchors: &AnchorSet) -> Vec<[f64; 3]> {
    anchors
        .points()
        .iter()
        .map(|a| {
            let d = *p - *a;
            let n = d.norm();
            if n > 0.0 {
                [d.x / n, d.y / n, d.z / n]
            } else {
                [0.0; 3]
            }
        })
        .collect()
}

pub fn solve_platform_position(
    lengths: &CableLengths,
    anchors: &AnchorSet,
    hint: Option<Point3>,
) -> Result<PositionSolution, KinematicsError> {
    solve_platform_position_with(lengths, anchors, hint, &FkOptions::default())
}

/// Least-squares position for `lengths`.
///
/// Returns `NotConverged` carrying the best iterate when the RMS residual
/// stays above `options.tolerance`; callers that want a best-effort estimate
/// (status reporting) can take it from the error.
pub fn solve_platform_position_with(
    lengths: &CableLengths,
    anchors: &AnchorSet,
    hint: Option<Point3>,
    options: &FkOptions,
) -> Result<PositionSolution, KinematicsError> {
    if lengths.len() != anchors.len() {
        return Err(KinematicsError::LengthCountMismatch {
            lengths: lengths.len(),
            anchors: anchors.len(),
        });
    }
    if hint.is_some_and(|h| !h.is_finite()) {
        return Err(KinematicsError::NonFinite);
    }
    let lengths = lengths.as_slice();
    let normal = anchors.plane_normal();

    let start = hint.unwrap_or_else(|| {
        let c = anchors.centroid();
        Point3::new(c.x, c.y, c.z - 1.0)
    });
    let mut p = start.to_vector();
    let mut cost = cost_at(&p, lengths, anchors);
    let mut lambda = 1e-3;

    for _ in 0..options.max_iterations {
        if cost == 0.0 {
            break;
        }
        let (jtj, jtr) = normal_equations(&p, lengths, anchors);
        let damped = jtj + Matrix3::identity() * lambda;
        let Some(step) = damped.lu().solve(&(-jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let candidate = p + step;
        let candidate_cost = cost_at(&candidate, lengths, anchors);
        if candidate_cost < cost {
            p = candidate;
            cost = candidate_cost;
            lambda = (lambda * 0.1).max(1e-15);
        } else {
            lambda *= 10.0;
        }
        if step.norm() <= 1e-12 * (1.0 + p.norm()) || lambda > 1e12 {
            break;
        }
    }

    if let Some(n) = normal {
        p = select_mirror(p, n, anchors, hint, options.working_side);
    }

    let position = Point3::from_vector(&p);
    let residual = (cost_at(&p, lengths, anchors) / lengths.len() as f64).sqrt();
    let solution = PositionSolution {
        position,
        residual,
        converged: residual <= options.tolerance,
    };
    if solution.converged {
        Ok(solution)
    } else {
        Err(KinematicsError::NotConverged { solution })
    }
}

fn cost_at(p: &Vector3<f64>, lengths: &[f64], anchors: &AnchorSet) -> f64 {
    anchors
        .points()
        .iter()
        .zip(lengths)
        .map(|(a, l)| {
            let r = (p - a.to_vector()).norm() - l;
            r * r
        })
        .sum()
}

fn normal_equations(
    p: &Vector3<f64>,
    lengths: &[f64],
    anchors: &AnchorSet,
) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for (a, l) in anchors.points().iter().zip(lengths) {
        let d = p - a.to_vector();
        let n = d.norm();
        if n == 0.0 {
            continue;
        }
        let row = d / n;
        jtj += row * row.transpose();
        jtr += row * (n - l);
    }
    (jtj, jtr)
}

/// Reflects `p` through the anchor plane when it sits on the wrong side.
/// `normal` is unit length and points toward the "below" side.
fn select_mirror(
    p: Vector3<f64>,
    normal: Vector3<f64>,
    anchors: &AnchorSet,
    hint: Option<Point3>,
    side: WorkingSide,
) -> Vector3<f64> {
    let origin = anchors.points()[0].to_vector();
    let offset = (p - origin).dot(&normal);
    let mirrored = p - normal * (2.0 * offset);
    match hint {
        Some(h) => {
            let h = h.to_vector();
            if (mirrored - h).norm() < (p - h).norm() {
                mirrored
            } else {
                p
            }
        }
        None => {
            let wrong_side = match side {
                WorkingSide::Below => offset < 0.0,
                WorkingSide::Above => offset > 0.0,
            };
            if wrong_side {
                mirrored
            } else {
                p
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::cable_lengths_for_position;
    use approx::assert_relative_eq;

    fn square() -> AnchorSet {
        AnchorSet::square(2.0, 2.0)
    }

    #[test]
    fn symmetric_lengths_pick_the_lower_mirror() {
        let anchors = square();
        let truth = Point3::new(1.0, 1.0, 0.0);
        let lengths = cable_lengths_for_position(&truth, &anchors);
        let sol = solve_platform_position(&lengths, &anchors, None).unwrap();
        assert!(sol.converged);
        assert!(sol.residual < 1e-9);
        assert!(sol.position.distance(&truth) < 1e-9, "{}", sol.position);
    }

    #[test]
    fn hint_above_selects_upper_mirror() {
        let anchors = square();
        let lengths = CableLengths::new(vec![6f64.sqrt(); 4]).unwrap();
        let sol =
            solve_platform_position(&lengths, &anchors, Some(Point3::new(1.0, 1.0, 3.5))).unwrap();
        assert!(sol.position.distance(&Point3::new(1.0, 1.0, 4.0)) < 1e-9);
    }

    #[test]
    fn above_working_side() {
        let anchors = square();
        let lengths = CableLengths::new(vec![6f64.sqrt(); 4]).unwrap();
        let opts = FkOptions {
            working_side: WorkingSide::Above,
            ..FkOptions::default()
        };
        let sol = solve_platform_position_with(&lengths, &anchors, None, &opts).unwrap();
        assert_relative_eq!(sol.position.z, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_lengths_do_not_converge() {
        let lengths = CableLengths::new(vec![0.0; 4]).unwrap();
        match solve_platform_position(&lengths, &square(), None) {
            Err(KinematicsError::NotConverged { solution }) => {
                assert!(!solution.converged);
                assert!(solution.residual > 1.0);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn count_mismatch() {
        let lengths = CableLengths::new(vec![1.0; 3]).unwrap();
        assert_eq!(
            solve_platform_position(&lengths, &square(), None),
            Err(KinematicsError::LengthCountMismatch {
                lengths: 3,
                anchors: 4
            })
        );
    }

    #[test]
    fn non_coplanar_anchors_have_a_unique_solution() {
        let anchors = AnchorSet::new(vec![
            Point3::new(0.0, 0.0, 200.0),
            Point3::new(250.0, 0.0, 180.0),
            Point3::new(250.0, 220.0, 210.0),
            Point3::new(0.0, 220.0, 190.0),
        ])
        .unwrap();
        let truth = Point3::new(80.0, 130.0, 40.0);
        let lengths = cable_lengths_for_position(&truth, &anchors);
        let sol = solve_platform_position(&lengths, &anchors, None).unwrap();
        assert!(sol.position.distance(&truth) < 1e-6);
    }

    #[test]
    fn jacobian_rows_are_unit_vectors() {
        let anchors = square();
        for row in fk_jacobian(&Point3::new(0.3, 1.7, -4.0), &anchors) {
            let n = (row[0] * row[0] + row[1] * row[1] + row[2] * row[2]).sqrt();
            assert_relative_eq!(n, 1.0, epsilon = 1e-12);
        }
        assert_eq!(fk_jacobian(&anchors.points()[2], &anchors)[2], [0.0; 3]);
    }
}
