//! Folding semantics: straight links, preserved lengths, no crossings.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{point_segment_distance, segment_distance_sq, Point, Vec3};
use crate::scene::{Chain, Scene};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkageError {
    #[error("unknown joint `{0}`")]
    UnknownJoint(String),
    #[error("step size must be positive")]
    StepSize,
    #[error("replay mismatch at step {0}")]
    ReplayMismatch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub len_tol: f64,
    pub clearance: f64,
    pub max_projection_sweeps: usize,
}

impl Tolerances {
    pub fn for_epsilon(eps: f64) -> Tolerances {
        Tolerances { len_tol: 1e-10, clearance: eps / 100.0, max_projection_sweeps: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    ProjectionFailed,
    SelfIntersection,
    InterChainCollision,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FoldOutcome {
    Accepted(Scene),
    Rejected(Rejection),
}

pub fn link_lengths(c: &Chain) -> Vec<f64> {
    c.links().map(|(p, q)| p.dist(q)).collect()
}

/// Largest `|length - rest| / rest` over the chain's links.
pub fn max_relative_length_error(c: &Chain) -> f64 {
    c.links().zip(&c.rest_lengths).map(|((p, q), r)| (p.dist(q) - r).abs() / r).fold(0.0, f64::max)
}

pub fn is_simple(c: &Chain, tol: &Tolerances) -> bool {
    let j = &c.joints;
    let n = c.link_count();
    for i in 0..n {
        for k in i + 1..n {
            let d = if k == i + 1 {
                point_segment_distance(j[i], j[k], j[k + 1]).min(point_segment_distance(j[k + 1], j[i], j[i + 1]))
            } else {
                segment_distance_sq(j[i], j[i + 1], j[k], j[k + 1]).sqrt()
            };
            if !(d >= tol.clearance) || (k == i + 1 && d == 0.0) {
                return false;
            }
        }
    }
    true
}

pub fn min_chain_distance(c1: &Chain, c2: &Chain) -> f64 {
    let mut best = f64::INFINITY;
    for (p, q) in c1.links() {
        for (r, s) in c2.links() {
            best = best.min(segment_distance_sq(p, q, r, s));
        }
    }
    best.sqrt()
}

pub fn chains_disjoint(c1: &Chain, c2: &Chain, tol: &Tolerances) -> bool {
    let d = min_chain_distance(c1, c2);
    d >= tol.clearance && d > 0.0
}

/// Every chain simple and every pair of chains disjoint.
pub fn scene_valid(s: &Scene, tol: &Tolerances) -> bool {
    s.chains.iter().all(|c| is_simple(c, tol))
        && (0..s.chains.len()).all(|i| (i + 1..s.chains.len()).all(|k| chains_disjoint(&s.chains[i], &s.chains[k], tol)))
}

/// Cyclic projection onto the link-length constraints. Each link is
/// rescaled about its midpoint; a frozen endpoint takes no share of the
/// correction. Sweeps alternate direction.
fn project(c: &mut Chain, frozen: &[bool], tol: &Tolerances) -> bool {
    let n = c.link_count();
    for sweep in 0..=tol.max_projection_sweeps {
        if max_relative_length_error(c) < tol.len_tol {
            return true;
        }
        if sweep == tol.max_projection_sweeps {
            break;
        }
        for t in 0..n {
            let i = if sweep % 2 == 0 { t } else { n - 1 - t };
            let (wp, wq) = (if frozen[i] { 0.0 } else { 1.0 }, if frozen[i + 1] { 0.0 } else { 1.0 });
            if wp + wq == 0.0 {
                continue;
            }
            let d = c.joints[i + 1] - c.joints[i];
            let len = d.norm();
            if len == 0.0 {
                return false;
            }
            let corr = d * ((len - c.rest_lengths[i]) / len);
            c.joints[i] += corr * (wp / (wp + wq));
            c.joints[i + 1] -= corr * (wq / (wp + wq));
        }
    }
    false
}

/// Lower bound on the distance between two moving segments over the
/// straight-line interpolation between their old and new positions.
fn swept_clear(d_old: f64, d_new: f64, motion: f64) -> bool {
    d_old + d_new - motion > 0.0
}

fn link_motion(old: &[Point], new: &[Point], i: usize) -> f64 {
    old[i].dist(new[i]).max(old[i + 1].dist(new[i + 1]))
}

fn check_self(old: &Chain, new: &Chain, tol: &Tolerances) -> bool {
    let (o, j) = (&old.joints, &new.joints);
    let n = new.link_count();
    for i in 0..n {
        let mi = link_motion(o, j, i);
        for k in i + 1..n {
            let mk = link_motion(o, j, k);
            let (d_new, d_old) = if k == i + 1 {
                (
                    point_segment_distance(j[i], j[k], j[k + 1]).min(point_segment_distance(j[k + 1], j[i], j[i + 1])),
                    point_segment_distance(o[i], o[k], o[k + 1]).min(point_segment_distance(o[k + 1], o[i], o[i + 1])),
                )
            } else {
                (segment_distance_sq(j[i], j[i + 1], j[k], j[k + 1]).sqrt(), segment_distance_sq(o[i], o[i + 1], o[k], o[k + 1]).sqrt())
            };
            if !(d_new >= tol.clearance) || d_new == 0.0 || !swept_clear(d_old, d_new, mi + mk) {
                return false;
            }
        }
    }
    true
}

fn check_against(old: &Chain, new: &Chain, other: &Chain, tol: &Tolerances) -> bool {
    let (o, j) = (&old.joints, &new.joints);
    for i in 0..new.link_count() {
        let mi = link_motion(o, j, i);
        for (r, s) in other.links() {
            let d_new = segment_distance_sq(j[i], j[i + 1], r, s).sqrt();
            if !(d_new >= tol.clearance) || d_new == 0.0 {
                return false;
            }
            if mi > 0.0 {
                let d_old = segment_distance_sq(o[i], o[i + 1], r, s).sqrt();
                if !swept_clear(d_old, d_new, mi) {
                    return false;
                }
            }
        }
    }
    true
}

/// Move one joint, restore link lengths, and accept only a simple,
/// collision-free result reached without links sweeping through each other.
pub fn fold_step(scene: &Scene, label: &str, displacement: Vec3, tol: &Tolerances, frozen: &BTreeSet<String>) -> Result<FoldOutcome, LinkageError> {
    let (ci, ji) = scene.locate(label).ok_or_else(|| LinkageError::UnknownJoint(label.to_string()))?;
    if displacement == Vec3::ZERO {
        return Ok(FoldOutcome::Accepted(scene.clone()));
    }
    let old = &scene.chains[ci];
    let mut moved = old.clone();
    moved.joints[ji] += displacement;
    let mask: Vec<bool> = moved.labels.iter().map(|l| frozen.contains(l)).collect();
    if !project(&mut moved, &mask, tol) || moved.joints.iter().any(|p| !p.is_finite()) {
        return Ok(FoldOutcome::Rejected(Rejection::ProjectionFailed));
    }
    if !check_self(old, &moved, tol) {
        return Ok(FoldOutcome::Rejected(Rejection::SelfIntersection));
    }
    for (k, other) in scene.chains.iter().enumerate() {
        if k != ci && !check_against(old, &moved, other, tol) {
            return Ok(FoldOutcome::Rejected(Rejection::InterChainCollision));
        }
    }
    let mut out = scene.clone();
    out.chains[ci] = moved;
    Ok(FoldOutcome::Accepted(out))
}

/// One recorded perturbation: the joint and the full displacement applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMeta {
    pub label: String,
    pub displacement: Vec3,
}

impl StepMeta {
    pub fn magnitude(&self) -> f64 {
        self.displacement.norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedStep {
    pub attempt: usize,
    pub label: String,
    pub reason: Rejection,
}

/// A folding: `snapshots[0]` is the initial scene and `snapshots[i + 1]`
/// results from `steps[i]`. Serializes without its snapshots, which are
/// rebuilt by replay on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TrajectoryFile", try_from = "TrajectoryFile")]
pub struct Trajectory {
    pub frozen: BTreeSet<String>,
    pub tolerances: Tolerances,
    pub steps: Vec<StepMeta>,
    pub snapshots: Vec<Scene>,
    pub rejections: Vec<RejectedStep>,
}

impl Trajectory {
    pub fn start(initial: Scene, frozen: BTreeSet<String>, tolerances: Tolerances) -> Trajectory {
        Trajectory { frozen, tolerances, steps: Vec::new(), snapshots: vec![initial], rejections: Vec::new() }
    }

    pub fn initial(&self) -> &Scene {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Scene {
        self.snapshots.last().expect("trajectory has an initial scene")
    }

    pub fn push(&mut self, step: StepMeta, scene: Scene) {
        self.steps.push(step);
        self.snapshots.push(scene);
    }

    /// Re-apply the recorded steps from `initial`. Every step must be
    /// accepted; with `check` set, each result must also match the stored
    /// snapshot to within `check` in every coordinate.
    pub fn replay_from(&self, initial: &Scene, check: Option<f64>) -> Result<Trajectory, LinkageError> {
        let mut out = Trajectory::start(initial.clone(), self.frozen.clone(), self.tolerances);
        if let Some(t) = check {
            if !matches!(initial.max_coordinate_difference(&self.snapshots[0]), Some(d) if d <= t) {
                return Err(LinkageError::ReplayMismatch(0));
            }
        }
        for (i, step) in self.steps.iter().enumerate() {
            match fold_step(out.last(), &step.label, step.displacement, &self.tolerances, &self.frozen)? {
                FoldOutcome::Accepted(next) => {
                    if let Some(t) = check {
                        let stored = self.snapshots.get(i + 1).ok_or(LinkageError::ReplayMismatch(i + 1))?;
                        if !matches!(next.max_coordinate_difference(stored), Some(d) if d <= t) {
                            return Err(LinkageError::ReplayMismatch(i + 1));
                        }
                    }
                    out.push(step.clone(), next);
                }
                FoldOutcome::Rejected(_) => return Err(LinkageError::ReplayMismatch(i + 1)),
            }
        }
        Ok(out)
    }
}

pub const TRAJECTORY_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub version: u32,
    pub initial: Scene,
    pub frozen: BTreeSet<String>,
    pub tolerances: Tolerances,
    pub steps: Vec<StepMeta>,
    #[serde(default)]
    pub rejections: Vec<RejectedStep>,
}

impl From<Trajectory> for TrajectoryFile {
    fn from(mut t: Trajectory) -> TrajectoryFile {
        let initial = t.snapshots.swap_remove(0);
        TrajectoryFile {
            version: TRAJECTORY_FILE_VERSION,
            initial,
            frozen: t.frozen,
            tolerances: t.tolerances,
            steps: t.steps,
            rejections: t.rejections,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryFileError {
    #[error("unsupported trajectory file version {0}")]
    Version(u32),
    #[error(transparent)]
    Replay(#[from] LinkageError),
}

impl TryFrom<TrajectoryFile> for Trajectory {
    type Error = TrajectoryFileError;

    fn try_from(f: TrajectoryFile) -> Result<Trajectory, TrajectoryFileError> {
        if f.version != TRAJECTORY_FILE_VERSION {
            return Err(TrajectoryFileError::Version(f.version));
        }
        let skeleton =
            Trajectory { frozen: f.frozen, tolerances: f.tolerances, steps: f.steps, snapshots: vec![f.initial.clone()], rejections: Vec::new() };
        let mut t = skeleton.replay_from(&f.initial, None)?;
        t.rejections = f.rejections;
        Ok(t)
    }
}

/// Uniformly distributed unit vector.
pub fn random_direction<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        let n = v.norm_sq();
        if n > 1e-12 && n <= 1.0 {
            return v / n.sqrt();
        }
    }
}

pub(crate) fn movable_labels(scene: &Scene, frozen: &BTreeSet<String>) -> Vec<String> {
    scene.labels().filter(|l| !frozen.contains(*l)).map(str::to_string).collect()
}

/// Random folding with the scene's default tolerances.
pub fn random_fold(scene: &Scene, seed: u64, step_size: f64, n_steps: usize, frozen: &BTreeSet<String>) -> Result<Trajectory, LinkageError> {
    random_fold_with(scene, seed, step_size, n_steps, frozen, &Tolerances::for_epsilon(scene.epsilon))
}

/// `n_steps` counts accepted steps. Attempts stop after `20 * n_steps`
/// tries so a jammed configuration still terminates.
pub fn random_fold_with(
    scene: &Scene,
    seed: u64,
    step_size: f64,
    n_steps: usize,
    frozen: &BTreeSet<String>,
    tol: &Tolerances,
) -> Result<Trajectory, LinkageError> {
    if !(step_size > 0.0) {
        return Err(LinkageError::StepSize);
    }
    let step = step_size.min(tol.clearance / 2.0);
    let labels = movable_labels(scene, frozen);
    let mut traj = Trajectory::start(scene.clone(), frozen.clone(), *tol);
    if labels.is_empty() {
        return Ok(traj);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = n_steps.saturating_mul(20);
    let mut attempt = 0;
    while traj.steps.len() < n_steps && attempt < max_attempts {
        let label = &labels[rng.random_range(0..labels.len())];
        let displacement = random_direction(&mut rng) * step;
        match fold_step(traj.last(), label, displacement, tol, frozen)? {
            FoldOutcome::Accepted(next) => traj.push(StepMeta { label: label.clone(), displacement }, next),
            FoldOutcome::Rejected(reason) => traj.rejections.push(RejectedStep { attempt, label: label.clone(), reason }),
        }
        attempt += 1;
    }
    Ok(traj)
}
