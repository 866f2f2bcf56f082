use std::f64::consts::PI;

use cablebot_core::kinematics::{
    cable_lengths_for_position, fk_jacobian, fk_residuals, length_for_steps,
    solve_platform_position, steps_for_length, trilaterate_anchors, workspace_contains, AnchorSet,
    CableLengths, InterDistanceSet, KinematicsError, Point3, WinchParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coplanar quadrilateral at height `h`, corners jittered around a
/// `w × d` rectangle so the rig is never a perfect square.
fn quad_strategy() -> impl Strategy<Value = AnchorSet> {
    (
        100.0..400.0f64,
        100.0..400.0f64,
        80.0..300.0f64,
        prop::array::uniform8(-20.0..20.0f64),
    )
        .prop_map(|(w, d, h, j)| {
            AnchorSet::new(vec![
                Point3::new(j[0], j[1], h),
                Point3::new(w + j[2], j[3], h),
                Point3::new(w + j[4], d + j[5], h),
                Point3::new(j[6], d + j[7], h),
            ])
            .unwrap()
        })
}

fn bounds(anchors: &AnchorSet) -> ([f64; 2], [f64; 2], f64) {
    let pts = anchors.points();
    let fx = |f: fn(&Point3) -> f64| {
        pts.iter()
            .map(f)
            .fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| {
                [lo.min(v), hi.max(v)]
            })
    };
    (
        fx(|p| p.x),
        fx(|p| p.y),
        pts.iter().map(|p| p.z).fold(f64::INFINITY, f64::min),
    )
}

fn point_in(anchors: &AnchorSet, u: [f64; 3], clearance: f64) -> Point3 {
    let (x, y, top) = bounds(anchors);
    Point3::new(
        x[0] + u[0] * (x[1] - x[0]),
        y[0] + u[1] * (y[1] - y[0]),
        u[2] * (top - clearance),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ik_fk_round_trip(anchors in quad_strategy(), u in prop::array::uniform3(0.0..=1.0f64)) {
        // At least 1 cm under the anchor plane; on the plane itself the two
        // mirror branches merge and z is only recoverable to ~sqrt(eps).
        let p = point_in(&anchors, u, 1.0);
        let lengths = cable_lengths_for_position(&p, &anchors);
        let sol = solve_platform_position(&lengths, &anchors, None).unwrap();
        prop_assert!(sol.converged);
        prop_assert!(sol.residual <= 1e-6);
        prop_assert!(sol.position.distance(&p) <= 1e-6, "{} vs {}", sol.position, p);
    }

    #[test]
    fn mirror_never_above_anchor_plane(
        anchors in quad_strategy(),
        u in prop::array::uniform3(0.0..=1.0f64),
        noise in prop::array::uniform4(-5.0..5.0f64),
    ) {
        let p = point_in(&anchors, u, 0.0);
        let mut lengths = cable_lengths_for_position(&p, &anchors).as_slice().to_vec();
        for (l, n) in lengths.iter_mut().zip(noise) {
            *l = (*l + n).max(0.0);
        }
        let lengths = CableLengths::new(lengths).unwrap();
        let position = match solve_platform_position(&lengths, &anchors, None) {
            Ok(s) => s.position,
            Err(KinematicsError::NotConverged { solution }) => solution.position,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(position.z <= anchors.points()[0].z + 1e-9);
    }

    #[test]
    fn quantization_bound(target in 0.0..500.0f64, current_steps in -5000i64..5000) {
        let params = WinchParams::default();
        let current = length_for_steps(current_steps, &params);
        let order = steps_for_length(target, current, &params).unwrap();
        let reached = length_for_steps(current_steps + order.steps(), &params);
        prop_assert!((reached - target).abs() <= params.quantization_bound() + 1e-9);
    }

    #[test]
    fn trilateration_gauge_and_distances(
        pts in prop::array::uniform4((0.0..300.0f64, 0.0..300.0f64)),
        h in 0.0..250.0f64,
    ) {
        let pts = pts.map(|(x, y)| Point3::new(x, y, h));
        let min_area = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
            .iter()
            .map(|&(i, j, k)| triangle_area(&pts[i], &pts[j], &pts[k]))
            .fold(f64::INFINITY, f64::min);
        prop_assume!(min_area > 100.0);
        let input = InterDistanceSet::from_points(&pts);
        let t = trilaterate_anchors(&input).unwrap();
        let out = t.anchors.points();
        prop_assert_eq!(out[0], Point3::new(0.0, 0.0, h));
        prop_assert_eq!(out[1].y, 0.0);
        prop_assert!(out[1].x > 0.0);
        prop_assert!(out[2].y > 0.0);
        let back = InterDistanceSet::from_points(&[out[0], out[1], out[2], out[3]]);
        let tol = 1e-9f64.max(t.residual);
        for (a, b) in distances(&input).iter().zip(distances(&back)) {
            prop_assert!((a - b).abs() <= tol, "{a} vs {b}");
        }
    }
}

fn triangle_area(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs()
}

fn distances(d: &InterDistanceSet) -> [f64; 6] {
    [d.d_ab, d.d_ac, d.d_ad, d.d_bc, d.d_bd, d.d_cd]
}

#[test]
fn steps_match_direct_formula_from_home() {
    let params = WinchParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let t: f64 = rng.random_range(0.0..400.0);
        let rho = (t - params.home_length) / (2.0 * PI * params.drum_radius)
            * params.steps_per_turn as f64;
        let got = steps_for_length(t, params.home_length, &params).unwrap();
        assert_eq!(got.steps(), rho.round() as i64, "t = {t}");
    }
}

/// Objective `½ Σ rᵢ²`: its gradient is `Jᵀ r`.
fn objective(p: &Point3, lengths: &[f64], anchors: &AnchorSet) -> f64 {
    0.5 * fk_residuals(p, lengths, anchors)
        .iter()
        .map(|r| r * r)
        .sum::<f64>()
}

#[test]
fn jacobian_matches_central_differences() {
    let anchors = AnchorSet::square(300.0, 200.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..100 {
        let p = Point3::new(
            rng.random_range(0.0..300.0),
            rng.random_range(0.0..300.0),
            rng.random_range(0.0..190.0),
        );
        let lengths: Vec<f64> = (0..4).map(|_| rng.random_range(50.0..350.0)).collect();
        let jac = fk_jacobian(&p, &anchors);
        let axes = [
            Point3::new(h, 0.0, 0.0),
            Point3::new(0.0, h, 0.0),
            Point3::new(0.0, 0.0, h),
        ];
        // Residual Jacobian, entry by entry.
        let mut num = vec![[0.0; 3]; 4];
        for (k, e) in axes.iter().enumerate() {
            let plus = fk_residuals(&(p + *e), &lengths, &anchors);
            let minus = fk_residuals(&(p - *e), &lengths, &anchors);
            for i in 0..4 {
                num[i][k] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        let diff: f64 = jac
            .iter()
            .zip(&num)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = jac.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        assert!(diff / scale <= 1e-4, "jacobian rel err {}", diff / scale);

        // Objective gradient Jᵀ r.
        let r = fk_residuals(&p, &lengths, &anchors);
        let grad: Vec<f64> = (0..3)
            .map(|k| jac.iter().zip(&r).map(|(row, ri)| row[k] * ri).sum())
            .collect();
        let num_grad: Vec<f64> = axes
            .iter()
            .map(|e| {
                (objective(&(p + *e), &lengths, &anchors)
                    - objective(&(p - *e), &lengths, &anchors))
                    / (2.0 * h)
            })
            .collect();
        let gdiff: f64 = grad
            .iter()
            .zip(&num_grad)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let gscale: f64 = grad.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        assert!(
            gdiff / gscale <= 1e-4,
            "gradient rel err {}",
            gdiff / gscale
        );
    }
}

#[test]
fn workspace_agrees_with_brute_force_box() {
    let anchors = AnchorSet::new(vec![
        Point3::new(-10.0, 5.0, 210.0),
        Point3::new(290.0, -3.0, 205.0),
        Point3::new(305.0, 280.0, 199.5),
        Point3::new(2.0, 300.0, 220.0),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let p = Point3::new(
            rng.random_range(-50.0..350.0),
            rng.random_range(-50.0..350.0),
            rng.random_range(-50.0..260.0),
        );
        let inside = p.x >= -10.0
            && p.x <= 305.0
            && p.y >= -3.0
            && p.y <= 300.0
            && p.z >= 0.0
            && p.z <= 199.5;
        assert_eq!(workspace_contains(&p, &anchors), inside, "{p}");
    }
}

fn rms(p: &Point3, lengths: &[f64], anchors: &AnchorSet) -> f64 {
    let r = fk_residuals(p, lengths, anchors);
    (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
}

#[test]
fn perturbed_length_is_reported_as_inconsistent() {
    let anchors = AnchorSet::square(200.0, 200.0);
    let truth = Point3::new(80.0, 120.0, 60.0);
    let mut lengths = cable_lengths_for_position(&truth, &anchors)
        .as_slice()
        .to_vec();
    lengths[0] += 10.0;

    // Grid oracle over the workspace. The RMS residual is 1-Lipschitz in p,
    // so `grid_min − half_diagonal` bounds the true minimum from below.
    let step = 2.0;
    let mut grid_min = f64::INFINITY;
    let n = (200.0 / step) as usize;
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let p = Point3::new(i as f64 * step, j as f64 * step, k as f64 * step);
                grid_min = grid_min.min(rms(&p, &lengths, &anchors));
            }
        }
    }
    let half_diagonal = step * 3f64.sqrt() / 2.0;
    assert!(grid_min - half_diagonal > 1e-3, "grid min {grid_min}");

    let lengths = CableLengths::new(lengths).unwrap();
    match solve_platform_position(&lengths, &anchors, None) {
        Err(KinematicsError::NotConverged { solution }) => {
            assert!(!solution.converged);
            assert!(solution.residual > 1e-3);
            // The solver finds at least as good a point as the grid.
            assert!(solution.residual <= grid_min + 1e-9);
        }
        other => panic!("expected NotConverged, got {other:?}"),
    }
}

#[test]
fn square_rig_symmetric_solution() {
    let anchors = AnchorSet::square(2.0, 2.0);
    let lengths = cable_lengths_for_position(&Point3::new(1.0, 1.0, 0.0), &anchors);
    let sol = solve_platform_position(&lengths, &anchors, None).unwrap();
    assert!(sol.position.distance(&Point3::new(1.0, 1.0, 0.0)) < 1e-9);
    assert!(sol.position.distance(&Point3::new(1.0, 1.0, 4.0)) > 1.0);
}
