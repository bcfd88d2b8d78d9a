//! Explicit coordinates for the tangle, the ten-link frame with jag loops,
//! the threaded two-chain, and the separable control scenes.
//!
//! Corner geometry comes from a fixture in ε-units laid out in a canonical
//! frame: tangle corner at the origin, the jag corner carrying `z` along
//! 120° and the one carrying `F` along 60° in the xy-plane. A rotation maps
//! the canonical frame onto the requested triangle.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::{self, Corner};
use crate::geom::{
    closest_point_on_triangle, convex_hull_small, point_in_tetrahedron, HullCombinatorics, Point, Rotation, TetLocation, Tetrahedron, Vec3,
};
use crate::linkage::{chains_disjoint, is_simple, max_relative_length_error, min_chain_distance, Tolerances};
use crate::scene::{Chain, Frame, Provenance, Scene, SceneError};

pub const THREE_CHAIN: &str = "three";
pub const FOUR_CHAIN: &str = "four";
pub const TEN_CHAIN: &str = "ten";
pub const TWO_CHAIN: &str = "two";

pub const TEN_LABELS: [&str; 11] = ["w", "x", "y", "z", "H", "G", "F", "D", "C", "B", "A"];
pub const TWO_LABELS: [&str; 3] = ["a", "v", "b"];

/// Legs must exceed this multiple of the longest frame side.
pub const LEG_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("infeasible frame: {0}")]
    InfeasibleFrame(String),
    #[error("legs too short: need more than {min}, got {got}")]
    LegsTooShort { min: f64, got: f64 },
    #[error("threading failed: {0}")]
    ThreadingFailed(String),
    #[error("scene has no frame")]
    MissingFrame,
    #[error("epsilon must be positive")]
    Epsilon,
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Canonical corner layout, all lengths in units of ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerFixture {
    /// Joints `w x y A B C D` around the tangle corner; the midpoint of
    /// `xy` is the origin.
    pub tangle: BTreeMap<String, Point>,
    pub v: Point,
    /// `z` relative to its corner center, and the unit direction `z -> H`.
    pub z: Point,
    pub h_dir: Vec3,
    /// `F` relative to its corner center, and the unit direction `F -> G`.
    pub f: Point,
    pub g_dir: Vec3,
    /// Points the legs `va` and `vb` aim through, relative to the corner
    /// centers of `z` and `F`.
    pub anchor_a: Point,
    pub anchor_b: Point,
}

const FIXTURE_JSON: &str = include_str!("../fixtures/corner.json");
const HULL_JSON: &str = include_str!("../fixtures/tangle_hull.json");

pub fn corner_fixture() -> &'static CornerFixture {
    static F: OnceLock<CornerFixture> = OnceLock::new();
    F.get_or_init(|| serde_json::from_str(FIXTURE_JSON).expect("bundled corner fixture parses"))
}

/// Hull combinatorics of `B, C, D, x, y` for the tangle.
pub fn golden_hull() -> &'static HullCombinatorics {
    static H: OnceLock<HullCombinatorics> = OnceLock::new();
    H.get_or_init(|| serde_json::from_str(HULL_JSON).expect("bundled hull fixture parses"))
}

pub fn canonical_dirs() -> (Vec3, Vec3) {
    let a1 = 120f64.to_radians();
    let a2 = 60f64.to_radians();
    (Vec3::new(a1.cos(), a1.sin(), 0.0), Vec3::new(a2.cos(), a2.sin(), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangleSpec {
    pub epsilon: f64,
    pub center: Point,
    pub orientation: Rotation,
}

impl TangleSpec {
    pub fn new(epsilon: f64) -> TangleSpec {
        TangleSpec { epsilon, center: Point::ZERO, orientation: Rotation::IDENTITY }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub corner_centers: [Point; 3],
    pub epsilon: f64,
    pub jag_link_length: f64,
}

impl FrameSpec {
    /// Equilateral frame with the tangle corner at the origin and the base
    /// `P1 P2` above it; jag links of length ε/2.
    pub fn equilateral(side: f64, epsilon: f64) -> FrameSpec {
        let (u1, u2) = canonical_dirs();
        FrameSpec { corner_centers: [Point::ZERO, u1 * side, u2 * side], epsilon, jag_link_length: epsilon / 2.0 }
    }

    pub fn max_side(&self) -> f64 {
        let [o, p1, p2] = self.corner_centers;
        o.dist(p1).max(o.dist(p2)).max(p1.dist(p2))
    }

    /// Rotations taking each canonical corner onto the matching corner of
    /// this frame, in the order `O, P1, P2`. Each one matches the corner's
    /// angle bisector and the frame plane.
    pub fn corner_rotations(&self) -> Option<[Rotation; 3]> {
        let [o, p1, p2] = self.corner_centers;
        let (u1, u2) = canonical_dirs();
        let (c0, c1, c2) = (Point::ZERO, Point::ZERO + u1, Point::ZERO + u2);
        let na = (p1 - o).cross(p2 - o).normalized()?;
        let nc = u1.cross(u2).normalized()?;
        let basis = |at: Point, a: Point, b: Point, n: Vec3| -> Option<Rotation> {
            let bis = ((a - at).normalized()? + (b - at).normalized()?).normalized()?;
            Some(Rotation::from_columns(bis, n.cross(bis), n))
        };
        let one = |actual: [Point; 3], canon: [Point; 3]| -> Option<Rotation> {
            let fa = basis(actual[0], actual[1], actual[2], na)?;
            let fc = basis(canon[0], canon[1], canon[2], nc)?;
            Some(fa.compose(&fc.transpose()))
        };
        Some([one([o, p1, p2], [c0, c1, c2])?, one([p1, o, p2], [c1, c0, c2])?, one([p2, o, p1], [c2, c0, c1])?])
    }

    fn check(&self) -> Result<(), ConstructionError> {
        let eps = self.epsilon;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(ConstructionError::Epsilon);
        }
        let infeasible = |why: &str| Err(ConstructionError::InfeasibleFrame(why.to_string()));
        if !(self.jag_link_length > 0.0 && self.jag_link_length < eps) {
            return infeasible("jag link length must lie in (0, ε)");
        }
        let geo = match checks::FrameGeometry::from_centers(self.corner_centers) {
            Ok(g) => g,
            Err(_) => return infeasible("degenerate triangle"),
        };
        if !(geo.beta + 2.0 * eps / geo.m < std::f64::consts::FRAC_PI_2) {
            return infeasible("base angle not acute");
        }
        let [o, p1, p2] = self.corner_centers;
        if o.dist(p1).min(o.dist(p2)).min(p1.dist(p2)) <= 2.0 * eps {
            return infeasible("ε too large for the side lengths");
        }
        Ok(())
    }
}

fn nominal_lengths(eps: f64, labels: &[&str]) -> Vec<f64> {
    let short = ["xy", "yx", "BC", "CB", "CD", "DC"];
    labels.windows(2).map(|w| if short.contains(&format!("{}{}", w[0], w[1]).as_str()) { eps / 6.0 } else { eps / 2.0 }).collect()
}

fn chain_with_lengths(name: &str, labels: &[&str], joints: Vec<Point>, rest: Vec<f64>) -> Chain {
    Chain { name: name.to_string(), labels: labels.iter().map(|l| l.to_string()).collect(), joints, rest_lengths: rest }
}

fn tangle_point(fx: &CornerFixture, label: &str) -> Point {
    fx.tangle[label]
}

/// Tangle scene from an explicit fixture, without validation.
pub fn assemble_tangle(spec: &TangleSpec, fx: &CornerFixture) -> Result<Scene, ConstructionError> {
    let eps = spec.epsilon;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ConstructionError::Epsilon);
    }
    let (u1, u2) = canonical_dirs();
    let map = |p: Point| spec.center + spec.orientation.apply(p * eps);
    let y = tangle_point(fx, "y");
    let d = tangle_point(fx, "D");
    let three_labels = ["w", "x", "y", "z"];
    let three: Vec<Point> = [tangle_point(fx, "w"), tangle_point(fx, "x"), y, y + u1 * 0.5].into_iter().map(map).collect();
    let four_labels = ["A", "B", "C", "D", "E"];
    let four: Vec<Point> = [tangle_point(fx, "A"), tangle_point(fx, "B"), tangle_point(fx, "C"), d, d + u2 * 0.5].into_iter().map(map).collect();
    let mut params = BTreeMap::new();
    params.insert("epsilon".to_string(), eps);
    let prov = Provenance { generator: "tangle".into(), parameters: params, seed: None };
    Ok(Scene::new(
        vec![
            chain_with_lengths(THREE_CHAIN, &three_labels, three, nominal_lengths(eps, &three_labels)),
            chain_with_lengths(FOUR_CHAIN, &four_labels, four, nominal_lengths(eps, &four_labels)),
        ],
        eps,
        None,
        prov,
    )?)
}

/// The tangle: 3-chain `w-x-y-z` and 4-chain `A-B-C-D-E`.
pub fn build_tangle(spec: &TangleSpec) -> Scene {
    assemble_tangle(spec, corner_fixture()).expect("bundled fixture yields a tangle")
}

fn frame_params(spec: &FrameSpec) -> BTreeMap<String, f64> {
    let mut p = BTreeMap::new();
    p.insert("epsilon".to_string(), spec.epsilon);
    p.insert("jag_link_length".to_string(), spec.jag_link_length);
    for (i, c) in spec.corner_centers.iter().enumerate() {
        for (axis, val) in ["x", "y", "z"].iter().zip(c.to_array()) {
            p.insert(format!("corner{i}_{axis}"), val);
        }
    }
    p
}

/// Ten-link frame from an explicit fixture, without predicate validation.
pub fn assemble_ten_chain(spec: &FrameSpec, fx: &CornerFixture) -> Result<Scene, ConstructionError> {
    spec.check()?;
    let eps = spec.epsilon;
    let [r0, r1, r2] = spec.corner_rotations().ok_or_else(|| ConstructionError::InfeasibleFrame("degenerate triangle".into()))?;
    let [o, p1, p2] = spec.corner_centers;
    let z = p1 + r1.apply(fx.z * eps);
    let h = z + r1.apply(fx.h_dir) * spec.jag_link_length;
    let f = p2 + r2.apply(fx.f * eps);
    let g = f + r2.apply(fx.g_dir) * spec.jag_link_length;
    let t = |l: &str| o + r0.apply(tangle_point(fx, l) * eps);
    let joints = vec![t("w"), t("x"), t("y"), z, h, g, f, t("D"), t("C"), t("B"), t("A")];
    let mut rest = Vec::with_capacity(10);
    for (i, w) in TEN_LABELS.windows(2).enumerate() {
        let len = match (w[0], w[1]) {
            ("x", "y") | ("D", "C") | ("C", "B") => eps / 6.0,
            ("w", "x") | ("B", "A") => eps / 2.0,
            ("z", "H") | ("G", "F") => spec.jag_link_length,
            _ => joints[i].dist(joints[i + 1]),
        };
        rest.push(len);
    }
    let frame = Frame { corner_centers: spec.corner_centers, jag_link_length: spec.jag_link_length };
    let prov = Provenance { generator: "ten_chain".into(), parameters: frame_params(spec), seed: None };
    Ok(Scene::new(vec![chain_with_lengths(TEN_CHAIN, &TEN_LABELS, joints, rest)], eps, Some(frame), prov)?)
}

fn require_valid(scene: Scene, err: impl Fn(String) -> ConstructionError) -> Result<Scene, ConstructionError> {
    let report = validate_construction(&scene);
    match report.failures().first() {
        None => Ok(scene),
        Some(name) => Err(err(name.to_string())),
    }
}

/// One open ten-link chain realizing the triangular frame.
pub fn build_ten_chain(spec: &FrameSpec) -> Result<Scene, ConstructionError> {
    let scene = assemble_ten_chain(spec, corner_fixture())?;
    require_valid(scene, ConstructionError::InfeasibleFrame)
}

/// Add the two-chain `a-v-b` without predicate validation.
pub fn assemble_two_chain(scene: &Scene, leg_length: f64, fx: &CornerFixture) -> Result<Scene, ConstructionError> {
    let frame = scene.frame.ok_or(ConstructionError::MissingFrame)?;
    let spec = FrameSpec { corner_centers: frame.corner_centers, epsilon: scene.epsilon, jag_link_length: frame.jag_link_length };
    let min = LEG_FACTOR * spec.max_side();
    if !(leg_length > min) {
        return Err(ConstructionError::LegsTooShort { min, got: leg_length });
    }
    let eps = scene.epsilon;
    let [r0, r1, r2] = spec.corner_rotations().ok_or_else(|| ConstructionError::InfeasibleFrame("degenerate triangle".into()))?;
    let [o, p1, p2] = spec.corner_centers;
    let v = o + r0.apply(fx.v * eps);
    let dir = |c: Point, rot: Rotation, anchor: Point| (c + rot.apply(anchor * eps) - v).normalized();
    let (Some(da), Some(db)) = (dir(p1, r1, fx.anchor_a), dir(p2, r2, fx.anchor_b)) else {
        return Err(ConstructionError::ThreadingFailed("degenerate leg".into()));
    };
    let two = chain_with_lengths(TWO_CHAIN, &TWO_LABELS, vec![v + da * leg_length, v, v + db * leg_length], vec![leg_length; 2]);
    let mut chains = scene.chains.clone();
    chains.push(two);
    let mut prov = scene.provenance.clone();
    prov.generator = "full".into();
    prov.parameters.insert("leg_length".into(), leg_length);
    Ok(Scene::new(chains, eps, scene.frame, prov)?)
}

/// Thread the two-chain through the tangle and both jag loops.
pub fn thread_two_chain(scene: &Scene, leg_length: f64) -> Result<Scene, ConstructionError> {
    let full = assemble_two_chain(scene, leg_length, corner_fixture())?;
    require_valid(full, ConstructionError::ThreadingFailed)
}

/// Frame plus threaded two-chain.
pub fn build_full_scene(spec: &FrameSpec, leg_length: f64) -> Result<Scene, ConstructionError> {
    thread_two_chain(&build_ten_chain(spec)?, leg_length)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateResult {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub predicates: Vec<PredicateResult>,
}

impl ValidationReport {
    fn add(&mut self, name: impl Into<String>, passed: bool, margin: f64) {
        self.predicates.push(PredicateResult { name: name.into(), passed, margin });
    }

    pub fn all_passed(&self) -> bool {
        self.predicates.iter().all(|p| p.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.predicates.iter().filter(|p| !p.passed).map(|p| p.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&PredicateResult> {
        self.predicates.iter().find(|p| p.name == name)
    }
}

fn simple_margin(c: &Chain, tol: &Tolerances) -> f64 {
    let j = &c.joints;
    let n = c.link_count();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for k in i + 1..n {
            let d = if k == i + 1 {
                crate::geom::point_segment_distance(j[i], j[k], j[k + 1]).min(crate::geom::point_segment_distance(j[k + 1], j[i], j[i + 1]))
            } else {
                crate::geom::segment_distance_sq(j[i], j[i + 1], j[k], j[k + 1]).sqrt()
            };
            best = best.min(d);
        }
    }
    best - tol.clearance
}

/// Run every checker that applies to the scene's labels.
pub fn validate_construction(scene: &Scene) -> ValidationReport {
    let tol = Tolerances::for_epsilon(scene.epsilon);
    let mut r = ValidationReport::default();
    for c in &scene.chains {
        let err = max_relative_length_error(c);
        r.add(format!("lengths:{}", c.name), err < 1e-9, 1e-9 - err);
        r.add(format!("simple:{}", c.name), is_simple(c, &tol), simple_margin(c, &tol));
    }
    for i in 0..scene.chains.len() {
        for k in i + 1..scene.chains.len() {
            let (a, b) = (&scene.chains[i], &scene.chains[k]);
            r.add(format!("disjoint:{}/{}", a.name, b.name), chains_disjoint(a, b, &tol), min_chain_distance(a, b) - tol.clearance);
        }
    }
    if scene.has_labels(&["B", "C", "D", "x", "y"]) {
        let pts: Vec<(String, Point)> = ["B", "C", "D", "x", "y"].iter().map(|l| (l.to_string(), scene.point(l).unwrap())).collect();
        let hull_ok = convex_hull_small(&pts).map(|h| &h == golden_hull()).unwrap_or(false);
        let core = checks::tangle_core_margin(scene).unwrap_or(f64::NEG_INFINITY);
        r.add("hull", hull_ok, core);
    }
    for corner in [Corner::Tangle, Corner::JagZ, Corner::JagF] {
        if let Ok((ok, margin)) = checks::check_confinement(scene, corner) {
            r.add(format!("confinement:{}", corner.name()), ok, margin);
        }
    }
    if let Some(frame) = scene.frame {
        let (ok, margin) = checks::frame_ball_containment(scene, &frame);
        r.add("frame_balls", ok, margin);
    }
    if let Ok(t) = checks::check_threading(scene) {
        for (name, passed) in t.predicates() {
            r.add(name, passed, t.margins[name]);
        }
        if let (Some(frame), Ok(m)) = (scene.frame, checks::measure_vn(scene)) {
            if let Ok(geo) = checks::FrameGeometry::from_centers(frame.corner_centers) {
                if let Ok((lo, hi)) = checks::vn_bounds(&geo, scene.epsilon) {
                    r.add("vN_bounds", m.vn >= lo && m.vn <= hi, (m.vn - lo).min(hi - m.vn));
                }
            }
        }
    } else if scene.has_labels(&["z", "H"]) && !scene.has_labels(&["a", "v", "b"]) {
        // Frame without a two-chain: the jag loops must still be closed
        // triangles.
        for (name, tri) in [("jag_loop_z", ["y", "z", "H"]), ("jag_loop_F", ["D", "F", "G"])] {
            let [p, q, s] = tri.map(|l| scene.point(l).unwrap());
            let area = (q - p).cross(s - p).norm() / 2.0;
            r.add(name, area > 0.0, area);
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    TwoVsFour,
    ThreeVsThree,
}

impl ControlKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControlKind::TwoVsFour => "two_vs_four",
            ControlKind::ThreeVsThree => "three_vs_three",
        }
    }
}

/// Threaded but separable scenes. Unit-scale coordinates; ε = 0.1 sets the
/// clearance.
pub fn build_positive_control(kind: ControlKind) -> Scene {
    let p = |x: f64, y: f64, z: f64| Point::new(x, y, z);
    let chains = match kind {
        // The 4-chain's middle links form a bight that the 2-chain's vertex
        // hooks from below, legs rising on either side of link B-C.
        ControlKind::TwoVsFour => vec![
            Chain::from_joints(
                FOUR_CHAIN,
                &[("A", p(-1.2, 0.0, 0.5)), ("B", p(-0.4, 0.0, 0.0)), ("C", p(0.4, 0.0, 0.0)), ("D", p(1.2, 0.0, 0.5)), ("E", p(1.6, 0.6, 0.9))],
            ),
            Chain::from_joints(TWO_CHAIN, &[("a", p(-0.3, -0.8, 0.8)), ("v", p(0.0, 0.0, -0.3)), ("b", p(0.3, 0.8, 0.8))]),
        ],
        // The second 3-chain is a bracket whose two arms lie above and below
        // the first one's middle link.
        ControlKind::ThreeVsThree => vec![
            Chain::from_joints("first", &[("p0", p(-1.0, 0.6, 0.0)), ("p1", p(-0.4, 0.0, 0.0)), ("p2", p(0.4, 0.0, 0.0)), ("p3", p(1.0, 0.6, 0.0))]),
            Chain::from_joints(
                "second",
                &[("q0", p(0.0, 0.7, 0.3)), ("q1", p(0.0, -0.5, 0.3)), ("q2", p(0.0, -0.5, -0.3)), ("q3", p(0.0, 0.7, -0.3))],
            ),
        ],
    };
    let prov = Provenance { generator: format!("control_{}", kind.name()), parameters: BTreeMap::new(), seed: None };
    Scene::new(chains, 0.1, None, prov).expect("control scene is well formed")
}

/// Labels of the frame chain, for freezing it during sweeps.
pub fn ten_chain_labels() -> BTreeSet<String> {
    TEN_LABELS.iter().map(|l| l.to_string()).collect()
}

/// Remove the jag at the `z` corner: `H` moves onto the extension of side
/// `y-z`, so the corner loop collapses to a segment.
pub fn straighten_jag_z(scene: &Scene) -> Result<Scene, ConstructionError> {
    let missing = || ConstructionError::ThreadingFailed("scene has no jag at z".into());
    let (y, z, h) = (scene.point("y").ok_or_else(missing)?, scene.point("z").ok_or_else(missing)?, scene.point("H").ok_or_else(missing)?);
    let along = (z - y).normalized().ok_or_else(missing)?;
    let mut out = scene.clone();
    out.set_point("H", z + along * z.dist(h));
    out.provenance.generator = format!("{}+straighten_jag_z", scene.provenance.generator);
    Ok(out)
}

/// Move `v` to the nearest point of the tetrahedron `B, C, D, F`, then
/// `depth` further toward its centroid. The legs keep their far ends and
/// take their new lengths as rest lengths.
pub fn move_v_into_t(scene: &Scene, depth: f64) -> Result<Scene, ConstructionError> {
    let missing = || ConstructionError::ThreadingFailed("scene lacks the threading labels".into());
    let p = |l: &str| scene.point(l).ok_or_else(missing);
    let (v, tet) = (p("v")?, Tetrahedron([p("B")?, p("C")?, p("D")?, p("F")?]));
    let centroid = tet.0.iter().fold(Point::ZERO, |acc, q| acc + *q) / 4.0;
    let nearest = (0..4)
        .map(|i| {
            let f: Vec<Point> = (0..4).filter(|&j| j != i).map(|j| tet.0[j]).collect();
            closest_point_on_triangle(v, f[0], f[1], f[2])
        })
        .min_by(|a, b| a.dist(v).total_cmp(&b.dist(v)))
        .expect("four faces");
    let target = nearest + (centroid - nearest).normalized().ok_or_else(missing)? * depth;
    if !matches!(point_in_tetrahedron(target, &tet, 0.0), Ok(TetLocation::Inside)) {
        return Err(ConstructionError::ThreadingFailed("could not place v inside T".into()));
    }
    let (ci, ji) = scene.locate("v").ok_or_else(missing)?;
    let mut out = scene.clone();
    let chain = &mut out.chains[ci];
    chain.joints[ji] = target;
    chain.rest_lengths = chain.joints.windows(2).map(|w| w[0].dist(w[1])).collect();
    out.provenance.generator = format!("{}+v_into_t", scene.provenance.generator);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::link_lengths;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn tangle_lengths() {
        let s = build_tangle(&TangleSpec::new(0.6));
        assert!(close(&link_lengths(s.chain(THREE_CHAIN).unwrap()), &[0.3, 0.1, 0.3]));
        assert!(close(&link_lengths(s.chain(FOUR_CHAIN).unwrap()), &[0.3, 0.1, 0.1, 0.3]));
    }

    #[test]
    fn tangle_validates() {
        for eps in [0.6, 0.1, 1e-3] {
            let r = validate_construction(&build_tangle(&TangleSpec::new(eps)));
            assert!(r.all_passed(), "{:?}", r.failures());
            assert!(r.get("hull").unwrap().passed);
        }
    }

    #[test]
    fn ten_chain_shape() {
        let spec = FrameSpec::equilateral(1.0, 0.01);
        let s = build_ten_chain(&spec).unwrap();
        let ten = s.chain(TEN_CHAIN).unwrap();
        assert_eq!(ten.link_count(), 10);
        let [o, p1, p2] = spec.corner_centers;
        assert!(o.dist(p1).min(o.dist(p2)).min(p1.dist(p2)) > 2.0 * spec.epsilon);
        for (p, q) in [("z", "H"), ("G", "F")] {
            assert!(s.point(p).unwrap().dist(s.point(q).unwrap()) < spec.epsilon);
        }
        // Without the jag links and the base side the tangle's seven links remain.
        let hg = ten.labels.iter().position(|l| l == "H").unwrap();
        let (left, right) = (hg, ten.link_count() - hg - 1);
        assert_eq!(left - 1 + right - 1, 7);
    }

    #[test]
    fn full_scene_validates() {
        for eps in [0.05, 0.02, 0.01, 0.005] {
            let s = build_full_scene(&FrameSpec::equilateral(1.0, eps), 5.0).unwrap();
            let r = validate_construction(&s);
            assert!(r.all_passed(), "eps {eps}: {:?}", r.failures());
            let tol = Tolerances::for_epsilon(eps);
            assert!(chains_disjoint(s.chain(TWO_CHAIN).unwrap(), s.chain(TEN_CHAIN).unwrap(), &tol));
        }
    }

    #[test]
    fn short_legs_rejected() {
        let frame = build_ten_chain(&FrameSpec::equilateral(1.0, 0.01)).unwrap();
        let err = thread_two_chain(&frame, 0.1).unwrap_err();
        assert!(err.to_string().starts_with("legs too short"));
    }

    #[test]
    fn oversized_epsilon_is_infeasible() {
        let err = build_ten_chain(&FrameSpec::equilateral(1.0, 0.6)).unwrap_err();
        assert!(err.to_string().starts_with("infeasible frame"));
    }

    #[test]
    fn generation_is_deterministic_and_homogeneous() {
        let a = build_full_scene(&FrameSpec::equilateral(1.0, 0.01), 5.0).unwrap();
        let b = build_full_scene(&FrameSpec::equilateral(1.0, 0.01), 5.0).unwrap();
        assert_eq!(a, b);
        let s = 3.0;
        let c = build_full_scene(&FrameSpec::equilateral(s, 0.01 * s), 5.0 * s).unwrap();
        let scaled = a.map_points(|p| p * s);
        assert!(c.max_coordinate_difference(&scaled).unwrap() < 1e-12 * s * 5.0);
    }

    #[test]
    fn general_triangle() {
        let spec = FrameSpec {
            corner_centers: [Point::new(1.0, 2.0, 3.0), Point::new(0.5, 2.85, 3.1), Point::new(1.6, 2.9, 2.9)],
            epsilon: 0.005,
            jag_link_length: 0.0025,
        };
        let s = build_full_scene(&spec, 10.0).unwrap();
        assert!(validate_construction(&s).all_passed());
    }

    fn threading_flips(before: &Scene, after: &Scene) -> Vec<&'static str> {
        let (a, b) = (checks::check_threading(before).unwrap(), checks::check_threading(after).unwrap());
        a.predicates().iter().zip(b.predicates()).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0).collect()
    }

    #[test]
    fn mutations_fail_their_predicate() {
        let s = build_full_scene(&FrameSpec::equilateral(1.0, 0.01), 5.0).unwrap();
        let jag = straighten_jag_z(&s).unwrap();
        assert_eq!(threading_flips(&s, &jag), vec!["jag_z"]);
        // Entering T also drags the legs off the BC crossing, so more than one
        // predicate flips here.
        let inside = move_v_into_t(&s, 1e-6).unwrap();
        assert!(threading_flips(&s, &inside).contains(&"v_outside_T"));
        assert!(inside.chains.iter().all(|c| max_relative_length_error(c) < 1e-12));
        let report = validate_construction(&inside);
        assert!(report.failures().contains(&"v_outside_T"));
    }

    #[test]
    fn controls_are_valid() {
        for kind in [ControlKind::TwoVsFour, ControlKind::ThreeVsThree] {
            let s = build_positive_control(kind);
            let r = validate_construction(&s);
            assert!(r.all_passed(), "{kind:?}: {:?}", r.failures());
        }
    }
}
