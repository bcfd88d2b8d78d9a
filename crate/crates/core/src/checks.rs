//! Executable predicates: confinement, hull invariance, threading and the
//! bounds on the distance from `v` to the frame's base line.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construction::{build_full_scene, ten_chain_labels, FrameSpec};
use crate::geom::{
    convex_hull_small, point_in_tetrahedron, seg_triangle_pierce_measure, tetrahedron_exterior_margin, GeomError, HullCombinatorics, Pierce, Point,
    Segment, TetLocation, Tetrahedron, Triangle,
};
use crate::linkage::{random_fold, Trajectory};
use crate::scene::{Frame, Scene};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChecksError {
    #[error("missing label `{0}`")]
    MissingLabel(String),
    #[error("scene has no frame")]
    MissingFrame,
    #[error("angle not acute")]
    NotAcute,
    #[error("degenerate hull at snapshot {0}")]
    DegenerateHull(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

fn pt(scene: &Scene, label: &str) -> Result<Point, ChecksError> {
    scene.point(label).ok_or_else(|| ChecksError::MissingLabel(label.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    Tangle,
    JagZ,
    JagF,
}

impl Corner {
    pub fn name(&self) -> &'static str {
        match self {
            Corner::Tangle => "tangle",
            Corner::JagZ => "jag_z",
            Corner::JagF => "jag_F",
        }
    }

    /// Joints confined to the corner, and the two joints whose midpoint is
    /// its moving center.
    fn members(&self, scene: &Scene) -> (Vec<&'static str>, [&'static str; 2]) {
        match self {
            Corner::Tangle => {
                let mut labels = vec!["A", "B", "C", "D", "x", "y", "w"];
                if scene.has_labels(&["E"]) {
                    labels.push("E");
                }
                // In the frame `z` belongs to its own jag corner.
                if !scene.has_labels(&["H"]) {
                    labels.push("z");
                }
                (labels, ["x", "y"])
            }
            Corner::JagZ => (vec!["z", "H"], ["z", "H"]),
            Corner::JagF => (vec!["F", "G"], ["F", "G"]),
        }
    }
}

/// Whether every joint of the corner lies within ε of the corner's center:
/// the midpoint of `xy` for the tangle, the midpoint of the jag link for a
/// jag corner. The margin is ε minus the largest distance.
pub fn check_confinement(scene: &Scene, which: Corner) -> Result<(bool, f64), ChecksError> {
    let (labels, [c0, c1]) = which.members(scene);
    let center = pt(scene, c0)?.lerp(pt(scene, c1)?, 0.5);
    let mut worst: f64 = 0.0;
    for l in labels {
        worst = worst.max(pt(scene, l)?.dist(center));
    }
    let margin = scene.epsilon - worst;
    Ok((margin > 0.0, margin))
}

/// Containment of each corner's joints in the fixed ε-balls of the frame.
pub fn frame_ball_containment(scene: &Scene, frame: &Frame) -> (bool, f64) {
    let groups: [&[&str]; 3] = [&["w", "x", "y", "A", "B", "C", "D"], &["z", "H"], &["F", "G"]];
    let mut margin = f64::INFINITY;
    for (center, labels) in frame.corner_centers.iter().zip(groups) {
        for l in labels {
            match scene.point(l) {
                Some(p) => margin = margin.min(scene.epsilon - p.dist(*center)),
                None => return (false, f64::NEG_INFINITY),
            }
        }
    }
    (margin > 0.0, margin)
}

/// Margin by which `xy` pierces triangle `BCD`.
pub fn tangle_core_margin(scene: &Scene) -> Result<f64, ChecksError> {
    let s = Segment::new(pt(scene, "x")?, pt(scene, "y")?);
    let t = Triangle::new(pt(scene, "B")?, pt(scene, "C")?, pt(scene, "D")?);
    Ok(seg_triangle_pierce_measure(&s, &t, 0.0).margin)
}

pub fn hull_of_core(scene: &Scene) -> Result<HullCombinatorics, ChecksError> {
    let mut pts = Vec::with_capacity(5);
    for l in ["B", "C", "D", "x", "y"] {
        pts.push((l.to_string(), pt(scene, l)?));
    }
    Ok(convex_hull_small(&pts)?)
}

/// Hull combinatorics of `B, C, D, x, y` equal `reference` at every
/// snapshot.
pub fn check_hull_invariance(traj: &Trajectory, reference: &HullCombinatorics) -> Result<bool, ChecksError> {
    for (i, snap) in traj.snapshots.iter().enumerate() {
        match hull_of_core(snap) {
            Ok(h) if &h == reference => {}
            Ok(_) => return Ok(false),
            Err(ChecksError::Geom(_)) => return Err(ChecksError::DegenerateHull(i)),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadingReport {
    pub pierces_dcf: bool,
    pub straddles_yw: bool,
    pub straddles_bc: bool,
    pub straddles_ab: bool,
    pub jag_z: bool,
    pub jag_f: bool,
    pub v_outside_t: bool,
    pub margins: BTreeMap<String, f64>,
}

pub const THREADING_PREDICATES: [&str; 7] = ["pierces_DCF", "straddles_yw", "straddles_BC", "straddles_AB", "jag_z", "jag_F", "v_outside_T"];

impl ThreadingReport {
    pub fn predicates(&self) -> [(&'static str, bool); 7] {
        let v = [self.pierces_dcf, self.straddles_yw, self.straddles_bc, self.straddles_ab, self.jag_z, self.jag_f, self.v_outside_t];
        let mut out = [("", false); 7];
        for (i, name) in THREADING_PREDICATES.iter().enumerate() {
            out[i] = (name, v[i]);
        }
        out
    }

    pub fn all(&self) -> bool {
        self.predicates().iter().all(|(_, ok)| *ok)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.predicates().iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect()
    }
}

pub fn check_threading(scene: &Scene) -> Result<ThreadingReport, ChecksError> {
    let p = |l: &str| pt(scene, l);
    let (a, v, b) = (p("a")?, p("v")?, p("b")?);
    let (bb, c, d, f) = (p("B")?, p("C")?, p("D")?, p("F")?);
    let tol = 1e-12 * scene.epsilon;
    let mut margins = BTreeMap::new();
    let mut pierce = |name: &str, s: Segment, t: Triangle| {
        let m = seg_triangle_pierce_measure(&s, &t, tol);
        margins.insert(name.to_string(), m.margin);
        m.outcome == Pierce::Pierces
    };
    let two = Triangle::new(a, v, b);
    let pierces_dcf = pierce("pierces_DCF", Segment::new(v, a), Triangle::new(d, c, f));
    let straddles_yw = pierce("straddles_yw", Segment::new(p("y")?, p("w")?), two);
    let straddles_bc = pierce("straddles_BC", Segment::new(bb, c), two);
    let straddles_ab = pierce("straddles_AB", Segment::new(p("A")?, bb), two);
    let jag_z = pierce("jag_z", Segment::new(v, a), Triangle::new(p("y")?, p("z")?, p("H")?));
    let jag_f = pierce("jag_F", Segment::new(v, b), Triangle::new(d, f, p("G")?));
    let tet = Tetrahedron([bb, c, d, f]);
    let (v_outside_t, margin) = match point_in_tetrahedron(v, &tet, tol) {
        Ok(loc) => (loc == TetLocation::Outside, tetrahedron_exterior_margin(v, &tet)),
        Err(_) => (true, f64::INFINITY),
    };
    margins.insert("v_outside_T".to_string(), margin);
    Ok(ThreadingReport { pierces_dcf, straddles_yw, straddles_bc, straddles_ab, jag_z, jag_f, v_outside_t, margins })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameGeometry {
    pub o: Point,
    pub p1: Point,
    pub p2: Point,
    pub m: f64,
    pub beta: f64,
    pub h: f64,
}

impl FrameGeometry {
    pub fn from_centers([o, p1, p2]: [Point; 3]) -> Result<FrameGeometry, ChecksError> {
        let m = o.dist(p1);
        let base = p2 - p1;
        let (Some(u), Some(w)) = ((o - p1).normalized(), base.normalized()) else {
            return Err(GeomError::DegenerateSegment.into());
        };
        let beta = u.dot(w).clamp(-1.0, 1.0).acos();
        let h = (o - p1).cross(w).norm();
        if !(h > 0.0 && beta > 0.0 && beta < std::f64::consts::FRAC_PI_2) {
            return Err(ChecksError::NotAcute);
        }
        Ok(FrameGeometry { o, p1, p2, m, beta, h })
    }

    pub fn base_length(&self) -> f64 {
        self.p1.dist(self.p2)
    }
}

/// `(h - ε, |P1 P2| tan(β + 2ε/m))`.
pub fn vn_bounds(fg: &FrameGeometry, eps: f64) -> Result<(f64, f64), ChecksError> {
    let angle = fg.beta + 2.0 * eps / fg.m;
    if !(angle < std::f64::consts::FRAC_PI_2) {
        return Err(ChecksError::NotAcute);
    }
    Ok((fg.h - eps, fg.base_length() * angle.tan()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VnMeasurement {
    pub v: Point,
    pub n: Point,
    pub vn: f64,
    /// Whether `N` falls between `P1` and `P2`.
    pub n_interior: bool,
}

pub fn measure_vn(scene: &Scene) -> Result<VnMeasurement, ChecksError> {
    let frame = scene.frame.ok_or(ChecksError::MissingFrame)?;
    let v = pt(scene, "v")?;
    Ok(foot_on_base(v, frame.corner_centers[1], frame.corner_centers[2]))
}

pub fn foot_on_base(v: Point, p1: Point, p2: Point) -> VnMeasurement {
    let d = p2 - p1;
    let t = (v - p1).dot(d) / d.norm_sq();
    let n = p1 + d * t;
    VnMeasurement { v, n, vn: v.dist(n), n_interior: (0.0..=1.0).contains(&t) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub side: f64,
    pub epsilons: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub observed_min: f64,
    pub observed_max: f64,
    pub lo: f64,
    pub hi: f64,
    pub feasible: bool,
    /// Snapshots whose threading predicates all held.
    pub threaded: usize,
}

impl SweepRow {
    pub fn width(&self) -> f64 {
        self.observed_max - self.observed_min
    }

    /// `h` lies within the observed envelope widened by its own width.
    pub fn contains(&self, h: f64) -> bool {
        let w = self.width();
        self.observed_min - w <= h && h <= self.observed_max + w
    }
}

fn sweep_row(side: f64, eps: f64, samples: usize, seed: u64) -> SweepRow {
    let spec = FrameSpec::equilateral(side, eps);
    let bounds = FrameGeometry::from_centers(spec.corner_centers).and_then(|g| vn_bounds(&g, eps));
    let mut row = SweepRow { epsilon: eps, observed_min: f64::NAN, observed_max: f64::NAN, lo: f64::NAN, hi: f64::NAN, feasible: false, threaded: 0 };
    let Ok((lo, hi)) = bounds else { return row };
    row.lo = lo;
    row.hi = hi;
    let Ok(scene) = build_full_scene(&spec, 5.0 * side) else { return row };
    row.feasible = true;
    if samples == 0 {
        return row;
    }
    let frozen: BTreeSet<String> = ten_chain_labels();
    let traj = random_fold(&scene, seed, eps / 200.0, samples, &frozen).expect("positive step");
    let (mut lo_seen, mut hi_seen) = (f64::INFINITY, f64::NEG_INFINITY);
    for snap in &traj.snapshots[1..] {
        let m = measure_vn(snap).expect("frame present");
        lo_seen = lo_seen.min(m.vn);
        hi_seen = hi_seen.max(m.vn);
        if check_threading(snap).map(|t| t.all()).unwrap_or(false) {
            row.threaded += 1;
        }
    }
    if traj.steps.is_empty() {
        return row;
    }
    row.observed_min = lo_seen;
    row.observed_max = hi_seen;
    row
}

/// One row per ε. Every row folds with the same seed, so rows differ only
/// through ε.
pub fn sweep_epsilon(cfg: &SweepConfig) -> Vec<SweepRow> {
    cfg.epsilons.par_iter().map(|&eps| sweep_row(cfg.side, eps, cfg.samples, cfg.seed)).collect()
}

pub const SWEEP_HEADER: &str = "epsilon,observed_min,observed_max,lo,hi,feasible";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{}\n", r.epsilon, r.observed_min, r.observed_max, r.lo, r.hi, r.feasible));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::scene::{Chain, Provenance};

    fn collapsed() -> Scene {
        let p = Point::new(0.3, 0.2, 0.1);
        let three =
            Chain { name: "three".into(), labels: ["w", "x", "y", "z"].map(String::from).to_vec(), joints: vec![p; 4], rest_lengths: vec![1.0; 3] };
        let four = Chain {
            name: "four".into(),
            labels: ["A", "B", "C", "D", "E"].map(String::from).to_vec(),
            joints: vec![p; 5],
            rest_lengths: vec![1.0; 4],
        };
        Scene::new(vec![three, four], 0.1, None, Provenance::default()).unwrap()
    }

    #[test]
    fn collapsed_corner_has_full_margin() {
        let (ok, m) = check_confinement(&collapsed(), Corner::Tangle).unwrap();
        assert!(ok);
        assert_eq!(m, 0.1);
    }

    #[test]
    fn far_joint_breaks_confinement() {
        let mut s = collapsed();
        let p = s.point("A").unwrap();
        s.set_point("A", p + Vec3::X * 0.15);
        let (ok, m) = check_confinement(&s, Corner::Tangle).unwrap();
        assert!(!ok);
        assert!((m + 0.05).abs() < 1e-12);
    }

    #[test]
    fn missing_labels_error() {
        assert!(matches!(check_confinement(&collapsed(), Corner::JagZ), Err(ChecksError::MissingLabel(_))));
        assert!(matches!(check_threading(&collapsed()), Err(ChecksError::MissingLabel(_))));
    }

    #[test]
    fn equilateral_bounds() {
        let spec = FrameSpec::equilateral(1.0, 0.01);
        let g = FrameGeometry::from_centers(spec.corner_centers).unwrap();
        assert!((g.h - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((g.beta - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
        let (lo, hi) = vn_bounds(&g, 0.01).unwrap();
        assert!((lo - 0.856025403784).abs() < 1e-9);
        assert!((hi - 1.8149329815475679).abs() < 1e-12);
    }

    #[test]
    fn bounds_are_monotone_in_epsilon() {
        let g = FrameGeometry::from_centers(FrameSpec::equilateral(1.0, 0.01).corner_centers).unwrap();
        let mut prev = vn_bounds(&g, 0.001).unwrap();
        for eps in [0.002, 0.005, 0.01, 0.05, 0.1] {
            let cur = vn_bounds(&g, eps).unwrap();
            assert!(cur.0 <= prev.0 && cur.1 >= prev.1);
            prev = cur;
        }
    }

    #[test]
    fn right_angle_is_rejected() {
        let g = FrameGeometry { o: Point::ZERO, p1: Point::X, p2: Point::Y, m: 1.0, beta: std::f64::consts::FRAC_PI_2, h: 1.0 };
        assert_eq!(vn_bounds(&g, 0.01), Err(ChecksError::NotAcute));
    }

    #[test]
    fn foot_of_perpendicular() {
        let (p1, p2) = (Point::new(-0.5, 0.0, 0.0), Point::new(0.5, 0.0, 0.0));
        let h = 3f64.sqrt() / 2.0;
        let m = foot_on_base(Point::new(0.0, -h, 0.0), p1, p2);
        assert!((m.vn - h).abs() < 1e-15);
        assert!(m.n_interior);
        assert!(foot_on_base(Point::new(0.2, 0.0, 0.0), p1, p2).vn < 1e-15);
    }

    #[test]
    fn empty_sweep_row() {
        let rows = sweep_epsilon(&SweepConfig { side: 1.0, epsilons: vec![0.01], samples: 0, seed: 1 });
        assert_eq!(rows.len(), 1);
        assert!(rows[0].observed_min.is_nan());
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with(SWEEP_HEADER));
        assert!(csv.lines().nth(1).unwrap().starts_with("1.00000000000e-2,NaN"));
    }
}
