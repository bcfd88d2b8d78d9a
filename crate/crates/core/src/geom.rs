//! Three-dimensional primitives and the predicates built on them.
//!
//! Everything here is a pure function of immutable values. Predicates take an
//! explicit tolerance; [`LENGTH_TOL`] and [`DET_TOL`] are the defaults used by
//! the rest of the crate.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance on lengths.
pub const LENGTH_TOL: f64 = 1e-9;
/// Default absolute tolerance on determinants (areas, volumes).
pub const DET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("degenerate segment")]
    DegenerateSegment,
    #[error("degenerate tetrahedron")]
    DegenerateTetrahedron,
    #[error("degenerate hull")]
    DegenerateHull,
    #[error("hull input must have between 4 and 8 points, got {0}")]
    HullSize(usize),
    #[error("line does not pierce both disks")]
    MissesDisk,
    #[error("disk centers coincide")]
    CoincidentDisks,
    #[error("non-positive argument: {0}")]
    NonPositive(&'static str),
}

/// A point (or free vector) in R^3.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub type Point = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Some unit vector orthogonal to `self` (which must be non-zero).
    pub fn any_orthogonal(self) -> Vec3 {
        let a = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            Vec3::X
        } else if self.y.abs() <= self.z.abs() {
            Vec3::Y
        } else {
            Vec3::Z
        };
        self.cross(a).normalized().unwrap_or(Vec3::X)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Default for Rotation {
    fn default() -> Self {
        Rotation::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Rotation about a unit `axis` by `angle` radians (Rodrigues).
    pub fn about_axis(axis: Vec3, angle: f64) -> Rotation {
        let k = axis.normalized().unwrap_or(Vec3::Z);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Rotation([
            [t * k.x * k.x + c, t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y],
            [t * k.x * k.y + s * k.z, t * k.y * k.y + c, t * k.y * k.z - s * k.x],
            [t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c],
        ])
    }

    /// The rotation whose columns are the given orthonormal basis vectors.
    pub fn from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Rotation {
        Rotation([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        Rotation(out)
    }

    pub fn transpose(&self) -> Rotation {
        let m = &self.0;
        Rotation([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub p: Point,
    pub q: Point,
}

impl Segment {
    pub fn new(p: Point, q: Point) -> Self {
        Segment { p, q }
    }

    pub fn length(&self) -> f64 {
        self.p.dist(self.q)
    }

    pub fn direction(&self) -> Vec3 {
        self.q - self.p
    }

    fn check(&self) -> Result<(), GeomError> {
        if self.length() > 0.0 && self.p.is_finite() && self.q.is_finite() {
            Ok(())
        } else {
            Err(GeomError::DegenerateSegment)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub u: Point,
    pub v: Point,
    pub w: Point,
}

impl Triangle {
    pub fn new(u: Point, v: Point, w: Point) -> Self {
        Triangle { u, v, w }
    }

    /// Twice the area, as a vector normal to the triangle.
    pub fn area_normal(&self) -> Vec3 {
        (self.v - self.u).cross(self.w - self.u)
    }

    pub fn area(&self) -> f64 {
        0.5 * self.area_normal().norm()
    }

    pub fn vertices(&self) -> [Point; 3] {
        [self.u, self.v, self.w]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tetrahedron(pub [Point; 4]);

impl Tetrahedron {
    /// Six times the signed volume.
    pub fn det(&self) -> f64 {
        let [a, b, c, d] = self.0;
        (b - a).dot((c - a).cross(d - a))
    }

    pub fn volume(&self) -> f64 {
        self.det().abs() / 6.0
    }

    pub fn centroid(&self) -> Point {
        let [a, b, c, d] = self.0;
        (a + b + c + d) / 4.0
    }

    /// Barycentric coordinates of `p`.
    pub fn barycentric(&self, p: Point) -> Result<[f64; 4], GeomError> {
        let det = self.det();
        if det.abs() <= DET_TOL || !det.is_finite() {
            return Err(GeomError::DegenerateTetrahedron);
        }
        let [a, b, c, d] = self.0;
        let l1 = (p - a).dot((c - a).cross(d - a)) / det;
        let l2 = (b - a).dot((p - a).cross(d - a)) / det;
        let l3 = (b - a).dot((c - a).cross(p - a)) / det;
        Ok([1.0 - l1 - l2 - l3, l1, l2, l3])
    }

    /// Distance from the centroid to the farthest vertex.
    pub fn circumradius_bound(&self) -> f64 {
        let c = self.centroid();
        self.0.iter().map(|v| v.dist(c)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
    pub normal: Vec3,
}

impl Disk {
    pub fn new(center: Point, radius: f64, normal: Vec3) -> Result<Self, GeomError> {
        if !(radius > 0.0) {
            return Err(GeomError::NonPositive("radius"));
        }
        let normal = normal.normalized().ok_or(GeomError::NonPositive("normal"))?;
        Ok(Disk { center, radius, normal })
    }
}

/// Combinatorial type of a small convex hull: which labeled points are
/// extreme, and which label sets span its facets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HullCombinatorics {
    pub extreme_labels: BTreeSet<String>,
    pub facets: BTreeSet<BTreeSet<String>>,
}

/// Squared distance between closest points of segments `p1q1` and `p2q2`.
///
/// Unchecked: both segments are assumed non-degenerate. This is the hot path
/// of every collision test in the crate.
pub fn segment_distance_sq(p1: Point, q1: Point, p2: Point, q2: Point) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_sq();
    let e = d2.norm_sq();
    let f = d2.dot(r);
    let c = d1.dot(r);
    let b = d1.dot(d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-14 * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    ((p1 + d1 * s) - (p2 + d2 * t)).norm_sq()
}

/// Closest point to `x` on the closed triangle `abc`.
pub fn closest_point_on_triangle(x: Point, a: Point, b: Point, c: Point) -> Point {
    let (ab, ac, ax) = (b - a, c - a, x - a);
    let (d1, d2) = (ab.dot(ax), ac.dot(ax));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bx = x - b;
    let (d3, d4) = (ab.dot(bx), ac.dot(bx));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cx = x - c;
    let (d5, d6) = (ab.dot(cx), ac.dot(cx));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Distance from point `x` to the closed segment `pq`.
pub fn point_segment_distance(x: Point, p: Point, q: Point) -> f64 {
    let d = q - p;
    let len_sq = d.norm_sq();
    if len_sq == 0.0 {
        return x.dist(p);
    }
    let t = ((x - p).dot(d) / len_sq).clamp(0.0, 1.0);
    x.dist(p + d * t)
}

/// Minimum Euclidean distance between two closed segments.
pub fn seg_seg_distance(s1: &Segment, s2: &Segment) -> Result<f64, GeomError> {
    s1.check()?;
    s2.check()?;
    Ok(segment_distance_sq(s1.p, s1.q, s2.p, s2.q).sqrt())
}

/// Outcome of a segment/triangle piercing test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pierce {
    Pierces,
    Misses,
    Degenerate,
}

/// Signed clearance of a piercing: positive iff `s` pierces `t`, in which case
/// it is the smaller of the endpoint distances to the plane and the in-plane
/// distances from the crossing point to the triangle's edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PierceMeasure {
    pub outcome: Pierce,
    pub margin: f64,
}

pub fn seg_triangle_pierce(s: &Segment, t: &Triangle, tol: f64) -> Pierce {
    seg_triangle_pierce_measure(s, t, tol).outcome
}

pub fn seg_triangle_pierce_measure(s: &Segment, t: &Triangle, tol: f64) -> PierceMeasure {
    let Some(n) = t.area_normal().normalized() else {
        return PierceMeasure { outcome: Pierce::Degenerate, margin: f64::NEG_INFINITY };
    };
    let dp = n.dot(s.p - t.u);
    let dq = n.dot(s.q - t.u);
    if dp.abs() <= tol && dq.abs() <= tol {
        return PierceMeasure { outcome: Pierce::Degenerate, margin: -tol };
    }
    if !((dp > tol && dq < -tol) || (dp < -tol && dq > tol)) {
        // Same side (or touching): margin is how far the nearer endpoint
        // would have to travel to reach the far side.
        let m = if dp.signum() == dq.signum() { dp.abs().min(dq.abs()) } else { 0.0 };
        return PierceMeasure { outcome: Pierce::Misses, margin: -m };
    }
    let x = s.p + (s.q - s.p) * (dp / (dp - dq));
    let verts = t.vertices();
    let mut edge_margin = f64::INFINITY;
    for i in 0..3 {
        let a = verts[i];
        let b = verts[(i + 1) % 3];
        let c = verts[(i + 2) % 3];
        let inward = match n.cross(b - a).normalized() {
            Some(d) if d.dot(c - a) >= 0.0 => d,
            Some(d) => -d,
            None => return PierceMeasure { outcome: Pierce::Degenerate, margin: f64::NEG_INFINITY },
        };
        edge_margin = edge_margin.min(inward.dot(x - a));
    }
    let margin = edge_margin.min(dp.abs()).min(dq.abs());
    let outcome = if edge_margin > tol { Pierce::Pierces } else { Pierce::Misses };
    PierceMeasure { outcome, margin: if outcome == Pierce::Pierces { margin } else { edge_margin.min(0.0) } }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TetLocation {
    Inside,
    Boundary,
    Outside,
}

/// Barycentric classification of `p` against `t`; coordinates within `tol`
/// of zero count as boundary.
pub fn point_in_tetrahedron(p: Point, t: &Tetrahedron, tol: f64) -> Result<TetLocation, GeomError> {
    let bary = t.barycentric(p)?;
    let min = bary.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min > tol {
        TetLocation::Inside
    } else if min < -tol {
        TetLocation::Outside
    } else {
        TetLocation::Boundary
    })
}

/// Signed distance of `p` outside the tetrahedron's supporting planes:
/// positive means `p` lies strictly outside at least one face plane by that
/// much, non-positive means inside (the magnitude is then a lower bound on
/// the distance to the boundary).
pub fn tetrahedron_exterior_margin(p: Point, t: &Tetrahedron) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..4 {
        let opp = t.0[i];
        let face: Vec<Point> = (0..4).filter(|&j| j != i).map(|j| t.0[j]).collect();
        let Some(mut n) = (face[1] - face[0]).cross(face[2] - face[0]).normalized() else {
            continue;
        };
        if n.dot(opp - face[0]) > 0.0 {
            n = -n;
        }
        best = best.max(n.dot(p - face[0]));
    }
    best
}

/// Extreme points and facets of the convex hull of at most eight labeled
/// points, by brute-force enumeration of supporting planes. Coplanar points
/// on a supporting plane are merged into one facet.
pub fn convex_hull_small(points: &[(String, Point)]) -> Result<HullCombinatorics, GeomError> {
    convex_hull_small_tol(points, LENGTH_TOL)
}

pub fn convex_hull_small_tol(points: &[(String, Point)], tol: f64) -> Result<HullCombinatorics, GeomError> {
    let n = points.len();
    if !(4..=8).contains(&n) {
        return Err(GeomError::HullSize(n));
    }
    if points.iter().any(|(_, p)| !p.is_finite()) {
        return Err(GeomError::DegenerateHull);
    }
    let mut facets: BTreeSet<BTreeSet<String>> = BTreeSet::new();
    let mut full_dimensional = false;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (pi, pj, pk) = (points[i].1, points[j].1, points[k].1);
                let Some(normal) = (pj - pi).cross(pk - pi).normalized() else {
                    continue;
                };
                if (pj - pi).cross(pk - pi).norm() <= DET_TOL {
                    continue;
                }
                let mut above = false;
                let mut below = false;
                let mut on_plane = Vec::new();
                for (idx, (_, p)) in points.iter().enumerate() {
                    let d = normal.dot(*p - pi);
                    if d > tol {
                        above = true;
                    } else if d < -tol {
                        below = true;
                    } else {
                        on_plane.push(idx);
                    }
                }
                if above || below {
                    full_dimensional = true;
                }
                if above && below {
                    continue;
                }
                if !(above || below) {
                    continue;
                }
                let vertices = planar_extreme(points, &on_plane, normal, tol);
                if vertices.len() >= 3 {
                    facets.insert(vertices.into_iter().map(|idx| points[idx].0.clone()).collect());
                }
            }
        }
    }
    if !full_dimensional || facets.len() < 4 {
        return Err(GeomError::DegenerateHull);
    }
    let extreme_labels: BTreeSet<String> = facets.iter().flatten().cloned().collect();
    if extreme_labels.len() < 4 {
        return Err(GeomError::DegenerateHull);
    }
    Ok(HullCombinatorics { extreme_labels, facets })
}

/// Indices of the points among `idx` (all on one plane with unit `normal`)
/// that are vertices of their planar convex hull.
fn planar_extreme(points: &[(String, Point)], idx: &[usize], normal: Vec3, tol: f64) -> Vec<usize> {
    idx.iter()
        .copied()
        .filter(|&i| {
            let others: Vec<Point> = idx.iter().filter(|&&j| j != i).map(|&j| points[j].1).collect();
            !in_planar_hull(points[i].1, &others, normal, tol)
        })
        .collect()
}

/// Whether `p` lies in the convex hull of the coplanar `others`, by
/// Caratheodory: some segment or triangle of them contains it.
fn in_planar_hull(p: Point, others: &[Point], normal: Vec3, tol: f64) -> bool {
    let n = others.len();
    for a in 0..n {
        if others[a].dist(p) <= tol {
            return true;
        }
        for b in a + 1..n {
            if point_segment_distance(p, others[a], others[b]) <= tol {
                return true;
            }
            for c in b + 1..n {
                let (u, v, w) = (others[a], others[b], others[c]);
                let area = normal.dot((v - u).cross(w - u));
                if area.abs() <= DET_TOL {
                    continue;
                }
                let l0 = normal.dot((v - p).cross(w - p)) / area;
                let l1 = normal.dot((w - p).cross(u - p)) / area;
                let l2 = 1.0 - l0 - l1;
                if l0 >= 0.0 && l1 >= 0.0 && l2 >= 0.0 {
                    return true;
                }
            }
        }
    }
    false
}

/// Angle between the direction of `s` and the center-to-center direction of
/// the two disks, folded into `[0, pi/2]`.
pub fn line_disk_deviation(s: &Segment, d1: &Disk, d2: &Disk, tol: f64) -> Result<f64, GeomError> {
    s.check()?;
    let axis = (d2.center - d1.center).normalized().ok_or(GeomError::CoincidentDisks)?;
    for d in [d1, d2] {
        let denom = d.normal.dot(s.direction());
        if denom.abs() <= DET_TOL {
            return Err(GeomError::MissesDisk);
        }
        let t = d.normal.dot(d.center - s.p) / denom;
        if t < -tol || t > 1.0 + tol {
            return Err(GeomError::MissesDisk);
        }
        let hit = s.p + s.direction() * t;
        if hit.dist(d.center) > d.radius + tol {
            return Err(GeomError::MissesDisk);
        }
    }
    let dir = s.direction().normalized().ok_or(GeomError::DegenerateSegment)?;
    let c = dir.dot(axis).abs().min(1.0);
    // atan2 keeps precision for nearly aligned directions.
    Ok(dir.cross(axis).norm().atan2(c))
}

/// Upper bound `2 eps / m` on the angular deviation of a line through two
/// radius-`eps` disks whose centers are `m` apart.
pub fn deviation_bound(eps: f64, m: f64) -> Result<f64, GeomError> {
    if !(eps > 0.0) {
        return Err(GeomError::NonPositive("eps"));
    }
    if !(m > 0.0) {
        return Err(GeomError::NonPositive("m"));
    }
    Ok(2.0 * eps / m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0));
        assert!(closest_point_on_triangle(Point::new(0.2, 0.2, 3.0), a, b, c).dist(Point::new(0.2, 0.2, 0.0)) < 1e-15);
        assert_eq!(closest_point_on_triangle(Point::new(-1.0, -1.0, 0.0), a, b, c), a);
        assert_eq!(closest_point_on_triangle(Point::new(0.5, -2.0, 1.0), a, b, c), Point::new(0.5, 0.0, 0.0));
        let q = closest_point_on_triangle(Point::new(1.0, 1.0, 0.0), a, b, c);
        assert!(q.dist(Point::new(0.5, 0.5, 0.0)) < 1e-15);
    }

    fn seg(a: [f64; 3], b: [f64; 3]) -> Segment {
        Segment::new(a.into(), b.into())
    }

    /// Grid-and-refine minimization over both segment parameters.
    fn brute_distance(s1: &Segment, s2: &Segment) -> f64 {
        let eval = |s: f64, t: f64| s1.p.lerp(s1.q, s).dist(s2.p.lerp(s2.q, t));
        let n = 400;
        let (mut bs, mut bt, mut best) = (0.0, 0.0, f64::INFINITY);
        for i in 0..=n {
            for j in 0..=n {
                let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
                let d = eval(s, t);
                if d < best {
                    (bs, bt, best) = (s, t, d);
                }
            }
        }
        let mut h = 1.0 / n as f64;
        for _ in 0..60 {
            for (ds, dt) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                let (s, t) = ((bs + ds).clamp(0.0, 1.0), (bt + dt).clamp(0.0, 1.0));
                let d = eval(s, t);
                if d < best {
                    (bs, bt, best) = (s, t, d);
                }
            }
            h *= 0.7;
        }
        best
    }

    #[test]
    fn parallel_offset_segments() {
        let d = seg_seg_distance(&seg([0., 0., 0.], [1., 0., 0.]), &seg([0., 1., 0.], [1., 1., 0.])).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_segments_touch() {
        let d = seg_seg_distance(&seg([-1., 0., 0.], [1., 0., 0.]), &seg([0., -1., 0.], [0., 1., 0.])).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn skew_segments_match_brute_force() {
        let s1 = seg([0., 0., 0.], [1., 0., 0.]);
        let s2 = seg([0.5, 0., 0.3], [0.5, 1., 0.3]);
        let brute = brute_distance(&s1, &s2);
        assert!((brute - 0.3).abs() < 1e-9, "oracle {brute}");
        let d = seg_seg_distance(&s1, &s2).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn distance_rejects_degenerate_segment() {
        let err = seg_seg_distance(&seg([0.; 3], [0.; 3]), &seg([0., 1., 0.], [1., 1., 0.])).unwrap_err();
        assert_eq!(err.to_string(), "degenerate segment");
    }

    #[test]
    fn random_segments_agree_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut pt = || Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for _ in 0..20 {
            let s1 = Segment::new(pt(), pt());
            let s2 = Segment::new(pt(), pt());
            let d = seg_seg_distance(&s1, &s2).unwrap();
            assert!((d - brute_distance(&s1, &s2)).abs() < 1e-7);
        }
    }

    fn base_triangle() -> Triangle {
        Triangle::new(Vec3::new(-1., 0., 0.), Vec3::new(1., 0., 0.), Vec3::new(0., 1., 0.))
    }

    #[test]
    fn pierce_cases() {
        let t = Triangle::new(Vec3::new(-1., -0.5, 0.), Vec3::new(1., -0.5, 0.), Vec3::new(0., 1., 0.));
        assert_eq!(seg_triangle_pierce(&seg([0., 0., -1.], [0., 0., 1.]), &t, LENGTH_TOL), Pierce::Pierces);
        assert_eq!(seg_triangle_pierce(&seg([5., 0., -1.], [5., 0., 1.]), &t, LENGTH_TOL), Pierce::Misses);
        assert_eq!(seg_triangle_pierce(&seg([-0.2, 0.1, 0.], [0.3, 0.2, 0.]), &t, LENGTH_TOL), Pierce::Degenerate);
        // The literal triangle (+-1,0,0),(0,1,0) has the origin on an edge.
        assert_eq!(seg_triangle_pierce(&seg([0., 0., -1.], [0., 0., 1.]), &base_triangle(), LENGTH_TOL), Pierce::Misses);
        assert_eq!(seg_triangle_pierce(&seg([0., 0.2, -1.], [0., 0.2, 1.]), &base_triangle(), LENGTH_TOL), Pierce::Pierces);
    }

    #[test]
    fn pierce_margin_is_edge_distance() {
        let m = seg_triangle_pierce_measure(&seg([0., 0.2, -1.], [0., 0.2, 1.]), &base_triangle(), LENGTH_TOL);
        // Distance from (0, 0.2) to the bottom edge is 0.2, to the slanted edges (1-0.2)/sqrt(2).
        assert!((m.margin - 0.2).abs() < 1e-12);
        let miss = seg_triangle_pierce_measure(&seg([0., 0.2, 0.5], [0., 0.2, 1.]), &base_triangle(), LENGTH_TOL);
        assert_eq!(miss.outcome, Pierce::Misses);
        assert!((miss.margin + 0.5).abs() < 1e-12);
    }

    fn regular_tet() -> Tetrahedron {
        Tetrahedron([Vec3::new(1., 1., 1.), Vec3::new(1., -1., -1.), Vec3::new(-1., 1., -1.), Vec3::new(-1., -1., 1.)])
    }

    #[test]
    fn tetrahedron_classification() {
        let t = regular_tet();
        assert_eq!(point_in_tetrahedron(t.centroid(), &t, 1e-9).unwrap(), TetLocation::Inside);
        assert_eq!(point_in_tetrahedron(t.0[2], &t, 1e-9).unwrap(), TetLocation::Boundary);
        let far = t.centroid() + Vec3::X * (10.0 * t.circumradius_bound());
        assert_eq!(point_in_tetrahedron(far, &t, 1e-9).unwrap(), TetLocation::Outside);
        assert!(tetrahedron_exterior_margin(far, &t) > 0.0);
        assert!(tetrahedron_exterior_margin(t.centroid(), &t) < 0.0);
    }

    #[test]
    fn flat_tetrahedron_is_an_error() {
        let t = Tetrahedron([Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::new(1., 1., 0.)]);
        assert_eq!(point_in_tetrahedron(Vec3::ZERO, &t, 1e-9), Err(GeomError::DegenerateTetrahedron));
    }

    fn labeled(pts: &[(&str, [f64; 3])]) -> Vec<(String, Point)> {
        pts.iter().map(|(l, p)| (l.to_string(), Vec3::from(*p))).collect()
    }

    fn set(labels: &[&str]) -> BTreeSet<String> {
        labels.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hull_of_tetrahedron_with_centroid() {
        let t = regular_tet();
        let mut pts: Vec<(String, Point)> = ["a", "b", "c", "d"].iter().zip(t.0).map(|(l, p)| (l.to_string(), p)).collect();
        pts.push(("o".into(), t.centroid()));
        let hull = convex_hull_small(&pts).unwrap();
        assert_eq!(hull.extreme_labels, set(&["a", "b", "c", "d"]));
        assert_eq!(hull.facets.len(), 4);
        assert!(hull.facets.iter().all(|f| f.len() == 3));
    }

    #[test]
    fn hull_of_square_pyramid_merges_base() {
        let pts = labeled(&[("p", [0., 0., 0.]), ("q", [1., 0., 0.]), ("r", [1., 1., 0.]), ("s", [0., 1., 0.]), ("apex", [0.5, 0.5, 1.])]);
        let hull = convex_hull_small(&pts).unwrap();
        assert_eq!(hull.extreme_labels.len(), 5);
        assert_eq!(hull.facets.len(), 5);
        assert!(hull.facets.contains(&set(&["p", "q", "r", "s"])));
        assert!(hull.facets.contains(&set(&["apex", "p", "q"])));
    }

    #[test]
    fn hull_ignores_point_inside_a_face() {
        let pts = labeled(&[
            ("p", [0., 0., 0.]),
            ("q", [1., 0., 0.]),
            ("r", [1., 1., 0.]),
            ("s", [0., 1., 0.]),
            ("mid", [0.5, 0.5, 0.]),
            ("apex", [0.5, 0.5, 1.]),
        ]);
        let hull = convex_hull_small(&pts).unwrap();
        assert!(!hull.extreme_labels.contains("mid"));
        assert!(hull.facets.contains(&set(&["p", "q", "r", "s"])));
    }

    #[test]
    fn flat_hull_is_an_error() {
        let pts = labeled(&[("a", [0., 0., 0.]), ("b", [1., 0., 0.]), ("c", [0., 1., 0.]), ("d", [1., 1., 0.])]);
        assert_eq!(convex_hull_small(&pts).unwrap_err().to_string(), "degenerate hull");
    }

    #[test]
    fn deviation_examples() {
        let eps = 0.01;
        let d1 = Disk::new(Vec3::ZERO, eps, Vec3::Z).unwrap();
        let d2 = Disk::new(Vec3::Z, eps, Vec3::Z).unwrap();
        let aligned = seg([0., 0., -0.5], [0., 0., 1.5]);
        assert!(line_disk_deviation(&aligned, &d1, &d2, 1e-12).unwrap().abs() < 1e-15);

        // Opposite rim points: tan(delta) = 2 eps / 1.
        let p = Vec3::new(eps, 0., 0.);
        let q = Vec3::new(-eps, 0., 1.);
        let s = Segment::new(p - (q - p) * 0.5, q + (q - p) * 0.5);
        let dev = line_disk_deviation(&s, &d1, &d2, 1e-12).unwrap();
        assert!((dev - (2.0 * eps).atan()).abs() < 1e-14);
        assert!((dev - 0.02).abs() < 1e-5);

        // One center and the other rim: tan(delta) = eps.
        let q = Vec3::new(eps, 0., 1.);
        let s = Segment::new(Vec3::ZERO - (q * 0.5), q * 1.5);
        let dev = line_disk_deviation(&s, &d1, &d2, 1e-12).unwrap();
        assert!((dev - eps.atan()).abs() < 1e-14);
    }

    #[test]
    fn deviation_requires_both_disks() {
        let d1 = Disk::new(Vec3::ZERO, 0.01, Vec3::Z).unwrap();
        let d2 = Disk::new(Vec3::Z, 0.01, Vec3::Z).unwrap();
        let s = seg([0.5, 0., -0.5], [0.5, 0., 1.5]);
        assert_eq!(line_disk_deviation(&s, &d1, &d2, 1e-12).unwrap_err().to_string(), "line does not pierce both disks");
    }

    #[test]
    fn deviation_bound_substitution() {
        assert!((deviation_bound(0.05, 1.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((deviation_bound(0.01, 2.0).unwrap() - 0.01).abs() < 1e-15);
        assert!((deviation_bound(0.001, 0.5).unwrap() - 0.004).abs() < 1e-15);
        assert!(deviation_bound(0.0, 1.0).is_err());
        assert!(deviation_bound(0.1, -1.0).is_err());
    }

    #[test]
    fn rotation_about_axis_is_orthonormal() {
        let r = Rotation::about_axis(Vec3::new(1., 2., 3.), 0.7);
        let v = Vec3::new(0.3, -0.2, 0.9);
        assert!((r.apply(v).norm() - v.norm()).abs() < 1e-14);
        let back = r.transpose().apply(r.apply(v));
        assert!(back.dist(v) < 1e-14);
    }
}
