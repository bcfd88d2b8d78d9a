//! Randomized search for a folding that separates one chain from the rest.
//!
//! A tree of configurations grows from the initial scene. Each expansion
//! picks a node uniformly at random and either applies one random fold step
//! to any joint of any chain, or (with probability `goal_bias`) drags the
//! mover away from the other chains, one joint at a time, until a step is
//! rejected. The drag direction points from the mover's `v` joint, or from
//! its centroid if it has none, away from the centroid of the others. A node whose mover has escaped ends the search with a witness
//! trajectory from the root.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks::check_threading;
use crate::geom::{Point, Vec3};
use crate::linkage::{fold_step, min_chain_distance, random_direction, FoldOutcome, LinkageError, StepMeta, Tolerances, Trajectory};
use crate::scene::Scene;

/// Samples along the rigid escape path.
pub const ESCAPE_SAMPLES: usize = 100;
/// Length of the rigid escape path in units of the separation radius.
pub const ESCAPE_FACTOR: f64 = 10.0;
pub const REPLAY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("unknown chain `{0}`")]
    UnknownChain(String),
    #[error("scene needs at least two chains")]
    SingleChain,
    #[error("invalid planner config: {0}")]
    Config(&'static str),
    #[error("no witness")]
    NoWitness,
    #[error("replay mismatch at step {0}")]
    ReplayMismatch(usize),
    #[error("witness does not end separated")]
    NotSeparated,
    #[error(transparent)]
    Linkage(#[from] LinkageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Maximum number of fold attempts.
    pub budget: usize,
    pub step_size: f64,
    pub rng_seed: u64,
    /// Separation radius; `None` derives it from the scene.
    pub r_sep: Option<f64>,
    pub goal_bias: f64,
}

impl PlannerConfig {
    pub fn new(budget: usize, step_size: f64, rng_seed: u64) -> PlannerConfig {
        PlannerConfig { budget, step_size, rng_seed, r_sep: None, goal_bias: 0.2 }
    }

    fn validate(&self) -> Result<(), PlannerError> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(PlannerError::Config("step_size must be positive"));
        }
        if matches!(self.r_sep, Some(r) if !(r > 0.0 && r.is_finite())) {
            return Err(PlannerError::Config("r_sep must be positive"));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(PlannerError::Config("goal_bias must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Counts of accepted tree nodes, of those passing every threading
/// predicate, and of failures per predicate.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThreadingStats {
    pub explored: usize,
    pub threaded: usize,
    pub failures: BTreeMap<String, usize>,
}

impl ThreadingStats {
    fn record(&mut self, scene: &Scene) {
        self.explored += 1;
        match check_threading(scene) {
            Ok(r) if r.all() => self.threaded += 1,
            Ok(r) => {
                for name in r.failed() {
                    *self.failures.entry(name.to_string()).or_default() += 1;
                }
            }
            Err(_) => *self.failures.entry("missing_labels".to_string()).or_default() += 1,
        }
    }
}

impl ThreadingStats {
    pub fn fraction(&self) -> f64 {
        if self.explored == 0 {
            return f64::NAN;
        }
        self.threaded as f64 / self.explored as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlockReport {
    pub separated: bool,
    pub best_separation: f64,
    pub iterations: usize,
    pub seed: u64,
    pub r_sep: f64,
    pub mover: String,
    pub nodes: usize,
    /// Present when the scene carries the full set of threading labels.
    pub threading: Option<ThreadingStats>,
    pub witness: Option<Trajectory>,
}

/// Minimum distance between the links of two named chains.
pub fn separation_distance(scene: &Scene, c1: &str, c2: &str) -> Result<f64, PlannerError> {
    let a = scene.chain(c1).ok_or_else(|| PlannerError::UnknownChain(c1.to_string()))?;
    let b = scene.chain(c2).ok_or_else(|| PlannerError::UnknownChain(c2.to_string()))?;
    Ok(min_chain_distance(a, b))
}

/// The chain with the fewest links; ties go to the later chain.
pub fn mover_index(scene: &Scene) -> Result<usize, PlannerError> {
    if scene.chains.len() < 2 {
        return Err(PlannerError::SingleChain);
    }
    let mut best = 0;
    for (i, c) in scene.chains.iter().enumerate() {
        if c.link_count() <= scene.chains[best].link_count() {
            best = i;
        }
    }
    Ok(best)
}

fn others_centroid(scene: &Scene, mover: usize) -> Point {
    let (mut sum, mut n) = (Point::ZERO, 0usize);
    for (i, c) in scene.chains.iter().enumerate() {
        if i != mover {
            for p in &c.joints {
                sum += *p;
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// Twice the diameter of the centroid-centered bounding sphere of the
/// non-moving chains.
pub fn default_r_sep(scene: &Scene) -> Result<f64, PlannerError> {
    let mover = mover_index(scene)?;
    let c = others_centroid(scene, mover);
    let r = scene.chains.iter().enumerate().filter(|(i, _)| *i != mover).flat_map(|(_, ch)| ch.joints.iter()).map(|p| p.dist(c)).fold(0.0, f64::max);
    Ok(4.0 * r)
}

fn mover_separation(scene: &Scene, mover: usize) -> f64 {
    let m = &scene.chains[mover];
    scene.chains.iter().enumerate().filter(|(i, _)| *i != mover).map(|(_, c)| min_chain_distance(m, c)).fold(f64::INFINITY, f64::min)
}

fn separated_with(scene: &Scene, mover: usize, r_sep: f64, clearance: f64) -> bool {
    if !(mover_separation(scene, mover) > r_sep) {
        return false;
    }
    let m = &scene.chains[mover];
    let Some(dir) = (m.centroid() - others_centroid(scene, mover)).normalized() else { return false };
    let mut moved = m.clone();
    for k in 1..=ESCAPE_SAMPLES {
        let shift = dir * (ESCAPE_FACTOR * r_sep * k as f64 / ESCAPE_SAMPLES as f64);
        for (q, p) in moved.joints.iter_mut().zip(&m.joints) {
            *q = *p + shift;
        }
        let clear = scene.chains.iter().enumerate().filter(|(i, _)| *i != mover).all(|(_, c)| min_chain_distance(&moved, c) > clearance);
        if !clear {
            return false;
        }
    }
    true
}

/// Whether the mover is farther than the separation radius from every other
/// chain and a rigid translation away from them stays collision-free.
pub fn is_separated(scene: &Scene, cfg: &PlannerConfig) -> bool {
    let Ok(mover) = mover_index(scene) else { return false };
    let r_sep = match cfg.r_sep {
        Some(r) => r,
        None => match default_r_sep(scene) {
            Ok(r) => r,
            Err(_) => return false,
        },
    };
    separated_with(scene, mover, r_sep, Tolerances::for_epsilon(scene.epsilon).clearance)
}

struct Node {
    joints: Vec<Point>,
    parent: usize,
    step: Option<(u32, Vec3)>,
}

struct Tree {
    template: Scene,
    labels: Vec<String>,
    nodes: Vec<Node>,
}

impl Tree {
    fn flatten(scene: &Scene) -> Vec<Point> {
        scene.chains.iter().flat_map(|c| c.joints.iter().copied()).collect()
    }

    fn scene(&self, i: usize) -> Scene {
        let mut s = self.template.clone();
        let mut it = self.nodes[i].joints.iter();
        for c in &mut s.chains {
            for p in &mut c.joints {
                *p = *it.next().expect("node matches template");
            }
        }
        s
    }

    fn path(&self, mut i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while i != 0 {
            out.push(i);
            i = self.nodes[i].parent;
        }
        out.reverse();
        out
    }

    fn witness(&self, end: usize, tol: Tolerances) -> Trajectory {
        let mut t = Trajectory::start(self.scene(0), BTreeSet::new(), tol);
        for i in self.path(end) {
            let (label, displacement) = self.nodes[i].step.expect("non-root node has a step");
            t.push(StepMeta { label: self.labels[label as usize].clone(), displacement }, self.scene(i));
        }
        t
    }
}

/// Grow a random folding tree until the mover separates or the budget of
/// fold attempts runs out.
pub fn attempt_unlock(scene: &Scene, cfg: &PlannerConfig) -> Result<UnlockReport, PlannerError> {
    cfg.validate()?;
    let mover = mover_index(scene)?;
    let r_sep = match cfg.r_sep {
        Some(r) => r,
        None => default_r_sep(scene)?,
    };
    let tol = Tolerances::for_epsilon(scene.epsilon);
    let step = cfg.step_size.min(tol.clearance / 2.0);
    let labels: Vec<String> = scene.labels().map(str::to_string).collect();
    let mut drag_order: Vec<u32> =
        scene.chains[mover].labels.iter().map(|l| labels.iter().position(|x| x == l).expect("mover label is a scene label") as u32).collect();
    let lead = scene.chains[mover].labels.iter().position(|l| l == "v");
    if let Some(i) = lead {
        drag_order[..=i].rotate_right(1);
    }
    let frozen = BTreeSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let mut tree = Tree { template: scene.clone(), labels, nodes: vec![Node { joints: Tree::flatten(scene), parent: 0, step: None }] };
    let mut stats = check_threading(scene).ok().map(|_| {
        let mut s = ThreadingStats::default();
        s.record(scene);
        s
    });
    let mut best = mover_separation(scene, mover);
    let mut iterations = 0;
    let mut found = separated_with(scene, mover, r_sep, tol.clearance).then_some(0);

    // Add an accepted child and report whether it separates.
    let mut accept = |tree: &mut Tree, parent: usize, label: u32, d: Vec3, next: &Scene| -> (usize, bool) {
        tree.nodes.push(Node { joints: Tree::flatten(next), parent, step: Some((label, d)) });
        if let Some(s) = stats.as_mut() {
            s.record(next);
        }
        let sep = mover_separation(next, mover);
        best = best.max(sep);
        (tree.nodes.len() - 1, sep > r_sep && separated_with(next, mover, r_sep, tol.clearance))
    };

    while found.is_none() && iterations < cfg.budget {
        let start = rng.random_range(0..tree.nodes.len());
        if rng.random::<f64>() < cfg.goal_bias {
            // Drag the mover joint by joint, `v` first when present, away
            // from the other chains.
            let mut cur = start;
            let mut cur_scene = tree.scene(cur);
            let from = match lead {
                Some(_) => cur_scene.point("v").expect("lead exists"),
                None => cur_scene.chains[mover].centroid(),
            };
            let Some(dir) = (from - others_centroid(&cur_scene, mover)).normalized() else {
                iterations += 1;
                continue;
            };
            let d = dir * step;
            'pull: while iterations < cfg.budget {
                for &li in &drag_order {
                    if iterations >= cfg.budget {
                        break 'pull;
                    }
                    iterations += 1;
                    match fold_step(&cur_scene, &tree.labels[li as usize], d, &tol, &frozen)? {
                        FoldOutcome::Accepted(next) => {
                            let (id, done) = accept(&mut tree, cur, li, d, &next);
                            cur = id;
                            cur_scene = next;
                            if done {
                                found = Some(id);
                                break 'pull;
                            }
                        }
                        FoldOutcome::Rejected(_) => break 'pull,
                    }
                }
            }
        } else {
            iterations += 1;
            let li = rng.random_range(0..tree.labels.len());
            let d = random_direction(&mut rng) * step;
            let s = tree.scene(start);
            if let FoldOutcome::Accepted(next) = fold_step(&s, &tree.labels[li], d, &tol, &frozen)? {
                let (id, done) = accept(&mut tree, start, li as u32, d, &next);
                if done {
                    found = Some(id);
                }
            }
        }
    }

    Ok(UnlockReport {
        separated: found.is_some(),
        best_separation: best,
        iterations,
        seed: cfg.rng_seed,
        r_sep,
        mover: scene.chains[mover].name.clone(),
        nodes: tree.nodes.len(),
        threading: stats,
        witness: found.map(|end| tree.witness(end, tol)),
    })
}

/// Re-execute a report's witness from `initial` and return its final scene,
/// which must match the recorded snapshots and be separated.
pub fn replay(report: &UnlockReport, initial: &Scene) -> Result<Scene, PlannerError> {
    let w = report.witness.as_ref().ok_or(PlannerError::NoWitness)?;
    let t = w.replay_from(initial, Some(REPLAY_TOL)).map_err(|e| match e {
        LinkageError::ReplayMismatch(i) => PlannerError::ReplayMismatch(i),
        other => PlannerError::Linkage(other),
    })?;
    let last = t.last().clone();
    let mover = mover_index(&last)?;
    if !separated_with(&last, mover, report.r_sep, t.tolerances.clearance) {
        return Err(PlannerError::NotSeparated);
    }
    Ok(last)
}

/// One run per seed `first_seed..first_seed + seeds`, in parallel.
pub fn run_campaign(scene: &Scene, cfg: &PlannerConfig, first_seed: u64, seeds: usize) -> Result<Vec<UnlockReport>, PlannerError> {
    (0..seeds as u64).into_par_iter().map(|i| attempt_unlock(scene, &PlannerConfig { rng_seed: first_seed + i, ..*cfg })).collect()
}

pub const CAMPAIGN_HEADER: &str = "seed,separated,iterations,best_separation";

pub fn campaign_csv(reports: &[UnlockReport]) -> String {
    let mut out = String::from(CAMPAIGN_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!("{},{},{},{:.11e}\n", r.seed, r.separated, r.iterations, r.best_separation));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_full_scene, build_positive_control, ControlKind, FrameSpec};
    use crate::scene::{Chain, Provenance};

    fn pair(offset: f64) -> Scene {
        let a = Chain::from_joints("big", &[("p", Point::new(0.0, 0.0, 0.0)), ("q", Point::new(0.2, 0.0, 0.0)), ("r", Point::new(0.2, 0.2, 0.0))]);
        let b = Chain::from_joints("small", &[("s", Point::new(offset, 0.0, 0.0)), ("t", Point::new(offset + 0.2, 0.1, 0.0))]);
        Scene::new(vec![a, b], 0.1, None, Provenance::default()).unwrap()
    }

    #[test]
    fn separation_of_translated_chains() {
        let s = pair(2.0);
        assert!(separation_distance(&s, "big", "small").unwrap() >= 1.5);
        assert!((separation_distance(&pair(0.2), "big", "small").unwrap()).abs() < 1e-15);
        assert!(matches!(separation_distance(&s, "big", "nope"), Err(PlannerError::UnknownChain(_))));
    }

    #[test]
    fn far_chains_are_separated_at_once() {
        let s = pair(5.0);
        let cfg = PlannerConfig::new(100, 0.01, 0);
        assert!(is_separated(&s, &cfg));
        let r = attempt_unlock(&s, &cfg).unwrap();
        assert!(r.separated);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.witness.as_ref().unwrap().steps.len(), 0);
        replay(&r, &s).unwrap();
    }

    #[test]
    fn zero_budget() {
        let s = pair(0.5);
        let r = attempt_unlock(&s, &PlannerConfig::new(0, 0.01, 0)).unwrap();
        assert!(!r.separated);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.best_separation, separation_distance(&s, "big", "small").unwrap());
        assert_eq!(replay(&r, &s).unwrap_err().to_string(), "no witness");
    }

    #[test]
    fn full_scene_is_not_separated() {
        let s = build_full_scene(&FrameSpec::equilateral(1.0, 0.01), 5.0).unwrap();
        let d = separation_distance(&s, "ten", "two").unwrap();
        assert!(d > 0.0 && d < 0.01);
        assert!(!is_separated(&s, &PlannerConfig::new(0, 1e-3, 0)));
    }

    #[test]
    fn deterministic_and_stays_threaded() {
        let s = build_full_scene(&FrameSpec::equilateral(1.0, 0.01), 5.0).unwrap();
        let cfg = PlannerConfig::new(300, 1e-3, 7);
        let a = attempt_unlock(&s, &cfg).unwrap();
        assert_eq!(a, attempt_unlock(&s, &cfg).unwrap());
        assert!(!a.separated);
        let st = a.threading.clone().unwrap();
        assert_eq!(st.explored, a.nodes);
        assert_eq!(st.threaded, st.explored);
    }

    #[test]
    fn best_separation_grows_with_budget() {
        let s = build_positive_control(ControlKind::ThreeVsThree);
        let mut prev = 0.0;
        for budget in [0, 50, 200, 800] {
            let r = attempt_unlock(&s, &PlannerConfig::new(budget, 0.01, 3)).unwrap();
            assert!(r.best_separation >= prev);
            prev = r.best_separation;
        }
    }

    #[test]
    fn campaign_header_only() {
        let s = pair(0.5);
        let rows = run_campaign(&s, &PlannerConfig::new(10, 0.01, 0), 0, 0).unwrap();
        assert_eq!(campaign_csv(&rows), "seed,separated,iterations,best_separation\n");
    }
}
