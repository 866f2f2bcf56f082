//! Pure geometry of a point-mass platform hanging from `m` cables.
//!
//! Everything here is stateless and measured in centimeters in the world
//! frame. The platform point is `p`, the cable exit points on the coils are
//! the anchors, and the cable length of coil `i` is `‖p − anchors[i]‖₂`.

mod forward;
mod trilateration;
mod winch;

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forward::{
    fk_jacobian, fk_residuals, solve_platform_position, solve_platform_position_with, FkOptions,
    PositionSolution, WorkingSide, DEFAULT_FK_TOLERANCE, DEFAULT_MAX_ITERATIONS,
};
pub use trilateration::{trilaterate_anchors, InterDistanceSet, Trilateration};
pub use winch::{length_for_steps, steps_for_length, StepOrder, WinchParams, DEFAULT_STEP_CAP};

/// Two anchors closer than this are considered the same point.
pub const COINCIDENT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("non-finite coordinate or length")]
    NonFinite,
    #[error("at least 3 anchors are required, got {count}")]
    TooFewAnchors { count: usize },
    #[error("anchors {first} and {second} coincide")]
    CoincidentAnchors { first: usize, second: usize },
    #[error("anchors are collinear")]
    SingularGeometry,
    #[error("{lengths} cable lengths given for {anchors} anchors")]
    LengthCountMismatch { lengths: usize, anchors: usize },
    #[error("cable length {index} is negative ({value} cm)")]
    NegativeLength { index: usize, value: f64 },
    #[error("forward kinematics did not converge (rms residual {:.6} cm)", .solution.residual)]
    NotConverged { solution: PositionSolution },
    #[error("step order of {steps} exceeds the cap of {cap} steps")]
    CapExceeded { steps: i64, cap: u64 },
    #[error("inconsistent inter-distances: {0}")]
    Inconsistent(String),
    #[error("degenerate baseline: d_AB = {0} cm")]
    Degenerate(f64),
    #[error("invalid winch parameters: {0}")]
    InvalidParams(&'static str),
}

/// A position in the world frame, in centimeters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Point3::new(v.x, v.y, v.z)
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4}, {:.4})", self.x, self.y, self.z)
    }
}

/// Label of coil `index`: `A`, `B`, `C`, ...
pub fn coil_label(index: usize) -> char {
    (b'A' + (index % 26) as u8) as char
}

/// Cable exit points of the coils, in coil order.
///
/// Construction validates that there are at least three anchors, that no two
/// coincide and that they are not all on one line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point3>", into = "Vec<Point3>")]
pub struct AnchorSet {
    anchors: Vec<Point3>,
}

impl AnchorSet {
    pub fn new(anchors: Vec<Point3>) -> Result<Self, KinematicsError> {
        if anchors.len() < 3 {
            return Err(KinematicsError::TooFewAnchors {
                count: anchors.len(),
            });
        }
        if !anchors.iter().all(Point3::is_finite) {
            return Err(KinematicsError::NonFinite);
        }
        for i in 0..anchors.len() {
            for j in i + 1..anchors.len() {
                if anchors[i].distance(&anchors[j]) <= COINCIDENT_EPSILON {
                    return Err(KinematicsError::CoincidentAnchors {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        if non_collinear_triple(&anchors).is_none() {
            return Err(KinematicsError::SingularGeometry);
        }
        Ok(AnchorSet { anchors })
    }

    /// Square of side `side` in the plane `z = height`, with the first
    /// anchor at the origin and the others counter-clockwise.
    pub fn square(side: f64, height: f64) -> Self {
        AnchorSet::new(vec![
            Point3::new(0.0, 0.0, height),
            Point3::new(side, 0.0, height),
            Point3::new(side, side, height),
            Point3::new(0.0, side, height),
        ])
        .expect("square anchors are valid")
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.anchors
    }

    pub fn get(&self, index: usize) -> Option<&Point3> {
        self.anchors.get(index)
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self.anchors.iter().fold(Point3::ORIGIN, |acc, a| acc + *a);
        sum * (1.0 / self.anchors.len() as f64)
    }

    /// Unit normal of the plane through all anchors, oriented so that its z
    /// component is non-positive, or `None` if the anchors are not coplanar.
    pub fn plane_normal(&self) -> Option<Vector3<f64>> {
        let (i, j, k) = non_collinear_triple(&self.anchors)?;
        let a = self.anchors[i].to_vector();
        let mut n = (self.anchors[j].to_vector() - a)
            .cross(&(self.anchors[k].to_vector() - a))
            .normalize();
        if n.z > 0.0 {
            n = -n;
        }
        let scale = self
            .anchors
            .iter()
            .map(|p| (p.to_vector() - a).norm())
            .fold(1.0, f64::max);
        let coplanar = self
            .anchors
            .iter()
            .all(|p| (p.to_vector() - a).dot(&n).abs() <= 1e-9 * scale);
        coplanar.then_some(n)
    }
}

impl TryFrom<Vec<Point3>> for AnchorSet {
    type Error = KinematicsError;
    fn try_from(anchors: Vec<Point3>) -> Result<Self, Self::Error> {
        AnchorSet::new(anchors)
    }
}

impl From<AnchorSet> for Vec<Point3> {
    fn from(set: AnchorSet) -> Self {
        set.anchors
    }
}

fn non_collinear_triple(points: &[Point3]) -> Option<(usize, usize, usize)> {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            let u = (points[j] - points[i]).to_vector();
            for k in j + 1..n {
                let v = (points[k] - points[i]).to_vector();
                if u.cross(&v).norm() > 1e-9 * u.norm() * v.norm() {
                    return Some((i, j, k));
                }
            }
        }
    }
    None
}

/// Cable lengths in centimeters, index-aligned with an [`AnchorSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CableLengths(Vec<f64>);

impl CableLengths {
    pub fn new(lengths: Vec<f64>) -> Result<Self, KinematicsError> {
        for (index, &value) in lengths.iter().enumerate() {
            if !value.is_finite() {
                return Err(KinematicsError::NonFinite);
            }
            if value < 0.0 {
                return Err(KinematicsError::NegativeLength { index, value });
            }
        }
        Ok(CableLengths(lengths))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for CableLengths {
    type Error = KinematicsError;
    fn try_from(lengths: Vec<f64>) -> Result<Self, Self::Error> {
        CableLengths::new(lengths)
    }
}

impl From<CableLengths> for Vec<f64> {
    fn from(lengths: CableLengths) -> Self {
        lengths.0
    }
}

/// Inverse kinematics: the distance from `p` to every anchor.
pub fn cable_lengths_for_position(p: &Point3, anchors: &AnchorSet) -> CableLengths {
    CableLengths(anchors.points().iter().map(|a| p.distance(a)).collect())
}

/// Whether `p` lies in the reachable box: inside the anchors' bounding box
/// in x and y, and between the floor (`z = 0`) and the lowest anchor.
/// All faces are inclusive.
pub fn workspace_contains(p: &Point3, anchors: &AnchorSet) -> bool {
    if !p.is_finite() {
        return false;
    }
    let pts = anchors.points();
    let (min_x, max_x) = min_max(pts.iter().map(|a| a.x));
    let (min_y, max_y) = min_max(pts.iter().map(|a| a.y));
    let (min_z, _) = min_max(pts.iter().map(|a| a.z));
    (min_x..=max_x).contains(&p.x) && (min_y..=max_y).contains(&p.y) && (0.0..=min_z).contains(&p.z)
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}
