//! Exact 2-D trilateration.
//!
//! The solver works in a canonical frame: the first anchor at the origin, the
//! second on the positive x-axis at distance `D`, the third at `(i, j)`.
//! Subtracting the circle equations pairwise gives closed forms for the
//! intersection point,
//!
//! ```text
//! x = (L1² − L2² + D²) / (2D)
//! y = (L1² − L3² + i² + j²) / (2j) − (i/j)·x
//! ```
//!
//! and `L1² − x² − y²` — the radicand of the out-of-plane coordinate in the
//! 3-D derivation — is reported as a consistency residual: zero exactly when
//! the three range circles share a common point, positive otherwise.
//!
//! Anything built on top (deployment, reference stores, detectors) converts
//! world coordinates into this frame, solves, and maps back.

use thiserror::Error;

use crate::math;

/// Geometry failures, all of which describe degenerate inputs.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    /// The first two anchors are too close to orient a frame.
    #[error("anchor baseline {baseline} m is below the minimum {min} m")]
    DegenerateBaseline { baseline: f64, min: f64 },
    /// The third anchor lies (nearly) on the baseline.
    #[error("anchor triple is collinear: height {height} m is below the minimum {min} m")]
    CollinearAnchors { height: f64, min: f64 },
    /// A range measurement was negative or non-finite.
    #[error("invalid range {0} m: ranges must be finite and non-negative")]
    InvalidRange(f64),
    /// An operation over a point set received no points.
    #[error("empty point set")]
    EmptyInput,
}

/// A 2-D position or displacement, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean distance to another point.
    pub fn distance_to(&self, other: Point) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl core::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl core::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl core::fmt::Display for Point {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A 2×2 matrix in row-major order. Doubles as a rotation and as a
/// covariance; no algebraic structure is assumed beyond what each caller
/// checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m00: f64,
    pub m01: f64,
    pub m10: f64,
    pub m11: f64,
}

impl Mat2 {
    pub const fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Self { m00, m01, m10, m11 }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn determinant(&self) -> f64 {
        self.m00 * self.m11 - self.m01 * self.m10
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m00, self.m10, self.m01, self.m11)
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2::new(
            self.m00 * rhs.m00 + self.m01 * rhs.m10,
            self.m00 * rhs.m01 + self.m01 * rhs.m11,
            self.m10 * rhs.m00 + self.m11 * rhs.m10,
            self.m10 * rhs.m01 + self.m11 * rhs.m11,
        )
    }

    /// Applies the matrix to a point treated as a column vector.
    pub fn mul_point(&self, p: Point) -> Point {
        Point::new(self.m00 * p.x + self.m01 * p.y, self.m10 * p.x + self.m11 * p.y)
    }

    /// Largest absolute entry of `self − rhs`; convenient for tolerance checks.
    pub fn max_abs_diff(&self, rhs: &Mat2) -> f64 {
        let d = [
            self.m00 - rhs.m00,
            self.m01 - rhs.m01,
            self.m10 - rhs.m10,
            self.m11 - rhs.m11,
        ];
        d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Distances from the three anchors of a triple, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeTriple([f64; 3]);

impl RangeTriple {
    /// Validates that all three ranges are finite and non-negative.
    pub fn new(r1: f64, r2: f64, r3: f64) -> Result<Self, GeometryError> {
        for r in [r1, r2, r3] {
            if !r.is_finite() || r < 0.0 {
                return Err(GeometryError::InvalidRange(r));
            }
        }
        Ok(Self([r1, r2, r3]))
    }

    /// Exact ranges from three anchors to a known target.
    pub fn exact(anchors: [Point; 3], target: Point) -> Self {
        Self([
            anchors[0].distance_to(target),
            anchors[1].distance_to(target),
            anchors[2].distance_to(target),
        ])
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }
}

/// Degeneracy floors for frame construction. The solver divides by `2D` and
/// `2j`; the floors keep those divisions conditioned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyLimits {
    /// Minimum separation of the first two anchors, meters.
    pub min_baseline: f64,
    /// Minimum distance of the third anchor from the baseline, meters.
    pub min_height: f64,
}

impl Default for DegeneracyLimits {
    fn default() -> Self {
        Self { min_baseline: 1.0, min_height: 1.0 }
    }
}

/// The canonical solving frame of an anchor triple: origin at the first
/// anchor, baseline along x. `rotation` maps world displacements into the
/// frame; its transpose maps back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalFrame {
    pub origin: Point,
    pub rotation: Mat2,
    /// Second anchor's abscissa (baseline length), meters.
    pub baseline: f64,
    /// Third anchor's canonical coordinates; `third.y` may be negative.
    pub third: Point,
}

impl CanonicalFrame {
    /// World → canonical coordinates.
    pub fn to_canonical(&self, p: Point) -> Point {
        self.rotation.mul_point(p - self.origin)
    }

    /// Canonical → world coordinates.
    pub fn to_world(&self, p: Point) -> Point {
        self.origin + self.rotation.transpose().mul_point(p)
    }
}

/// Canonical-frame solution of a range triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalSolution {
    /// Canonical x of the solved point.
    pub x: f64,
    /// Canonical y of the solved point.
    pub y: f64,
    /// |L1² − x² − y²|, meters²; zero iff the three circles are concurrent.
    pub residual: f64,
}

/// A solved position with its consistency residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Localization {
    pub position: Point,
    /// Meters²; see [`CanonicalSolution::residual`].
    pub residual: f64,
}

/// Builds the canonical frame of an anchor triple with default degeneracy
/// floors (1 m baseline, 1 m height).
pub fn canonical_frame(p1: Point, p2: Point, p3: Point) -> Result<CanonicalFrame, GeometryError> {
    canonical_frame_with(p1, p2, p3, DegeneracyLimits::default())
}

/// [`canonical_frame`] with explicit degeneracy floors.
///
/// Collinearity is reported before a short-but-nonzero baseline so that a
/// flat triple is always diagnosed as collinear.
pub fn canonical_frame_with(
    p1: Point,
    p2: Point,
    p3: Point,
    limits: DegeneracyLimits,
) -> Result<CanonicalFrame, GeometryError> {
    let base = p2 - p1;
    let baseline = math::hypot(base.x, base.y);
    if baseline < 1e-12 {
        return Err(GeometryError::DegenerateBaseline { baseline, min: limits.min_baseline });
    }
    let ex = Point::new(base.x / baseline, base.y / baseline);
    let ey = Point::new(-ex.y, ex.x);
    let rotation = Mat2::new(ex.x, ex.y, ey.x, ey.y);
    let third = rotation.mul_point(p3 - p1);
    if third.y.abs() < limits.min_height {
        return Err(GeometryError::CollinearAnchors { height: third.y.abs(), min: limits.min_height });
    }
    if baseline < limits.min_baseline {
        return Err(GeometryError::DegenerateBaseline { baseline, min: limits.min_baseline });
    }
    Ok(CanonicalFrame { origin: p1, rotation, baseline, third })
}

/// Solves the range circles in an already-built canonical frame.
///
/// Pure arithmetic: the frame preconditions guarantee the divisors, so there
/// is no error path. Inconsistent ranges surface as a large residual rather
/// than a failure.
pub fn solve_canonical(frame: &CanonicalFrame, ranges: &RangeTriple) -> CanonicalSolution {
    let [l1, l2, l3] = ranges.as_array();
    let d = frame.baseline;
    let (i, j) = (frame.third.x, frame.third.y);
    let x = (l1 * l1 - l2 * l2 + d * d) / (2.0 * d);
    let y = (l1 * l1 - l3 * l3 + i * i + j * j) / (2.0 * j) - (i / j) * x;
    let residual = (l1 * l1 - x * x - y * y).abs();
    CanonicalSolution { x, y, residual }
}

/// Trilaterates a point from three anchors and their measured ranges with
/// default degeneracy floors.
pub fn trilaterate(anchors: [Point; 3], ranges: &RangeTriple) -> Result<Localization, GeometryError> {
    trilaterate_with(anchors, ranges, DegeneracyLimits::default())
}

/// [`trilaterate`] with explicit degeneracy floors.
pub fn trilaterate_with(
    anchors: [Point; 3],
    ranges: &RangeTriple,
    limits: DegeneracyLimits,
) -> Result<Localization, GeometryError> {
    let frame = canonical_frame_with(anchors[0], anchors[1], anchors[2], limits)?;
    let sol = solve_canonical(&frame, ranges);
    let position = frame.to_world(Point::new(sol.x, sol.y));
    Ok(Localization { position, residual: sol.residual })
}

/// Whether two circles of radii `l1`, `l2` whose centers are `d` apart
/// intersect in two distinct points: `|l1 − l2| < d < l1 + l2`.
pub fn circles_intersect(d: f64, l1: f64, l2: f64) -> bool {
    (l1 - l2).abs() < d && d < l1 + l2
}

/// Arithmetic mean of a non-empty point set.
pub fn centroid(points: &[Point]) -> Result<Point, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Ok(Point::new(sx / n, sy / n))
}
