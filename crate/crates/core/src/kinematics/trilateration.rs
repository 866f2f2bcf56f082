//! Coil coordinates from the six measured coil-to-coil distances.
//!
//! The coils are assumed to sit in a horizontal plane at a common height.
//! The rigid-motion freedom is removed by placing A at the origin of that
//! plane, B on the +x axis and C on the +y side; D then follows from its
//! distances to A and B, with the remaining sign picked by `d_CD`.

use serde::{Deserialize, Serialize};

use super::{AnchorSet, KinematicsError, Point3};

const INTERSECTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterDistanceSet {
    #[serde(rename = "dAB")]
    pub d_ab: f64,
    #[serde(rename = "dAC")]
    pub d_ac: f64,
    #[serde(rename = "dAD")]
    pub d_ad: f64,
    #[serde(rename = "dBC")]
    pub d_bc: f64,
    #[serde(rename = "dBD")]
    pub d_bd: f64,
    #[serde(rename = "dCD")]
    pub d_cd: f64,
    #[serde(rename = "planeHeight")]
    pub plane_height: f64,
}

impl InterDistanceSet {
    /// The six distances between four points; `plane_height` is taken from
    /// the first one.
    pub fn from_points(points: &[Point3; 4]) -> Self {
        let [a, b, c, d] = points;
        InterDistanceSet {
            d_ab: a.distance(b),
            d_ac: a.distance(c),
            d_ad: a.distance(d),
            d_bc: b.distance(c),
            d_bd: b.distance(d),
            d_cd: c.distance(d),
            plane_height: a.z,
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        let all = [
            self.d_ab,
            self.d_ac,
            self.d_ad,
            self.d_bc,
            self.d_bd,
            self.d_cd,
            self.plane_height,
        ];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(KinematicsError::NonFinite);
        }
        if self.d_ab < INTERSECTION_TOLERANCE {
            return Err(KinematicsError::Degenerate(self.d_ab));
        }
        if all[..6].iter().any(|&d| d <= 0.0) {
            return Err(KinematicsError::Inconsistent(
                "all distances must be positive".into(),
            ));
        }
        let triples = [
            ("ABC", self.d_ab, self.d_ac, self.d_bc),
            ("ABD", self.d_ab, self.d_ad, self.d_bd),
            ("ACD", self.d_ac, self.d_ad, self.d_cd),
            ("BCD", self.d_bc, self.d_bd, self.d_cd),
        ];
        for (name, x, y, z) in triples {
            let longest = x.max(y).max(z);
            if 2.0 * longest > x + y + z + INTERSECTION_TOLERANCE {
                return Err(KinematicsError::Inconsistent(format!(
                    "triangle {name} violates the triangle inequality"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trilateration {
    pub anchors: AnchorSet,
    /// `|‖C − D‖ − d_CD|`: the one distance not used to place the points.
    pub residual: f64,
}

pub fn trilaterate_anchors(d: &InterDistanceSet) -> Result<Trilateration, KinematicsError> {
    d.validate()?;
    let h = d.plane_height;
    let a = Point3::new(0.0, 0.0, h);
    let b = Point3::new(d.d_ab, 0.0, h);

    let (cx, cy) = circle_intersection(d.d_ab, d.d_ac, d.d_bc)?;
    let c = Point3::new(cx, cy, h);

    let (dx, dy) = circle_intersection(d.d_ab, d.d_ad, d.d_bd)?;
    let upper = Point3::new(dx, dy, h);
    let lower = Point3::new(dx, -dy, h);
    let err_upper = (c.distance(&upper) - d.d_cd).abs();
    let err_lower = (c.distance(&lower) - d.d_cd).abs();
    let (d_point, residual) = if err_upper <= err_lower {
        (upper, err_upper)
    } else {
        (lower, err_lower)
    };

    let anchors = AnchorSet::new(vec![a, b, c, d_point])?;
    Ok(Trilateration { anchors, residual })
}

/// Intersection with non-negative y of the circles of radius `r_a` about
/// the origin and `r_b` about `(baseline, 0)`.
fn circle_intersection(baseline: f64, r_a: f64, r_b: f64) -> Result<(f64, f64), KinematicsError> {
    if (r_a - r_b).abs() > baseline + INTERSECTION_TOLERANCE
        || r_a + r_b < baseline - INTERSECTION_TOLERANCE
    {
        return Err(KinematicsError::Inconsistent(format!(
            "circles of radius {r_a} and {r_b} {baseline} cm apart do not intersect"
        )));
    }
    let x = (baseline * baseline + r_a * r_a - r_b * r_b) / (2.0 * baseline);
    let y_sq = (r_a - x) * (r_a + x);
    Ok((x, y_sq.max(0.0).sqrt()))
}
