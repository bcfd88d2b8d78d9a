//! Named open chains sharing one global joint-label table.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("chain `{0}` needs at least two joints")]
    TooShort(String),
    #[error("chain `{chain}`: {labels} labels, {joints} joints and {lengths} rest lengths do not match")]
    Shape { chain: String, labels: usize, joints: usize, lengths: usize },
    #[error("joint label `{0}` is used more than once")]
    DuplicateLabel(String),
    #[error("duplicate chain name `{0}`")]
    DuplicateChain(String),
    #[error("non-finite coordinate at joint `{0}`")]
    NonFinite(String),
    #[error("rest length of link {index} in chain `{chain}` must be positive")]
    RestLength { chain: String, index: usize },
    #[error("epsilon must be positive")]
    Epsilon,
}

/// An open chain: ordered labeled joints joined by links of fixed rest length.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub name: String,
    pub labels: Vec<String>,
    pub joints: Vec<Point>,
    pub rest_lengths: Vec<f64>,
}

impl Chain {
    /// A chain whose rest lengths are its current link lengths.
    pub fn from_joints(name: &str, labeled: &[(&str, Point)]) -> Chain {
        let joints: Vec<Point> = labeled.iter().map(|(_, p)| *p).collect();
        let rest_lengths = joints.windows(2).map(|w| w[0].dist(w[1])).collect();
        Chain { name: name.to_string(), labels: labeled.iter().map(|(l, _)| l.to_string()).collect(), joints, rest_lengths }
    }

    pub fn link_count(&self) -> usize {
        self.joints.len().saturating_sub(1)
    }

    pub fn position(&self, label: &str) -> Option<Point> {
        self.labels.iter().position(|l| l == label).map(|i| self.joints[i])
    }

    pub fn links(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.joints.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn centroid(&self) -> Point {
        let sum = self.joints.iter().fold(Point::ZERO, |acc, p| acc + *p);
        sum / self.joints.len() as f64
    }

    fn validate(&self) -> Result<(), SceneError> {
        if self.joints.len() < 2 {
            return Err(SceneError::TooShort(self.name.clone()));
        }
        if self.labels.len() != self.joints.len() || self.rest_lengths.len() + 1 != self.joints.len() {
            return Err(SceneError::Shape {
                chain: self.name.clone(),
                labels: self.labels.len(),
                joints: self.joints.len(),
                lengths: self.rest_lengths.len(),
            });
        }
        for (label, p) in self.labels.iter().zip(&self.joints) {
            if !p.is_finite() {
                return Err(SceneError::NonFinite(label.clone()));
            }
        }
        for (index, &r) in self.rest_lengths.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(SceneError::RestLength { chain: self.name.clone(), index });
            }
        }
        Ok(())
    }
}

/// Centers of the three corner balls of a triangular frame: the tangle
/// corner first, then the corner carrying jag `z-H`, then the one carrying
/// jag `F-G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub corner_centers: [Point; 3],
    pub jag_link_length: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// A set of named chains with a global label table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SceneFile", try_from = "SceneFile")]
pub struct Scene {
    pub chains: Vec<Chain>,
    pub epsilon: f64,
    pub frame: Option<Frame>,
    pub provenance: Provenance,
    index: Arc<BTreeMap<String, (usize, usize)>>,
}

impl Scene {
    pub fn new(chains: Vec<Chain>, epsilon: f64, frame: Option<Frame>, provenance: Provenance) -> Result<Scene, SceneError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(SceneError::Epsilon);
        }
        let mut index = BTreeMap::new();
        let mut names = std::collections::BTreeSet::new();
        for (ci, chain) in chains.iter().enumerate() {
            chain.validate()?;
            if !names.insert(chain.name.clone()) {
                return Err(SceneError::DuplicateChain(chain.name.clone()));
            }
            for (ji, label) in chain.labels.iter().enumerate() {
                if index.insert(label.clone(), (ci, ji)).is_some() {
                    return Err(SceneError::DuplicateLabel(label.clone()));
                }
            }
        }
        Ok(Scene { chains, epsilon, frame, provenance, index: Arc::new(index) })
    }

    /// `(chain index, joint index)` of a label.
    pub fn locate(&self, label: &str) -> Option<(usize, usize)> {
        self.index.get(label).copied()
    }

    pub fn point(&self, label: &str) -> Option<Point> {
        self.locate(label).map(|(c, j)| self.chains[c].joints[j])
    }

    pub fn has_labels(&self, labels: &[&str]) -> bool {
        labels.iter().all(|l| self.index.contains_key(*l))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.chains.iter().flat_map(|c| c.labels.iter().map(String::as_str))
    }

    pub fn chain(&self, name: &str) -> Option<&Chain> {
        self.chains.iter().find(|c| c.name == name)
    }

    pub fn chain_index(&self, name: &str) -> Option<usize> {
        self.chains.iter().position(|c| c.name == name)
    }

    pub fn joint_count(&self) -> usize {
        self.chains.iter().map(|c| c.joints.len()).sum()
    }

    /// Replace the coordinates of one joint, keeping rest lengths.
    pub fn set_point(&mut self, label: &str, p: Point) -> bool {
        match self.locate(label) {
            Some((c, j)) => {
                self.chains[c].joints[j] = p;
                true
            }
            None => false,
        }
    }

    /// Apply `f` to every joint of every chain.
    pub fn map_points(&self, mut f: impl FnMut(Point) -> Point) -> Scene {
        let mut out = self.clone();
        for chain in &mut out.chains {
            for p in &mut chain.joints {
                *p = f(*p);
            }
        }
        out
    }

    /// Largest absolute coordinate difference to another scene with the
    /// same topology; `None` if the topologies differ.
    pub fn max_coordinate_difference(&self, other: &Scene) -> Option<f64> {
        if self.chains.len() != other.chains.len() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.chains.iter().zip(&other.chains) {
            if a.labels != b.labels {
                return None;
            }
            for (p, q) in a.joints.iter().zip(&b.joints) {
                worst = worst.max((p.x - q.x).abs()).max((p.y - q.y).abs()).max((p.z - q.z).abs());
            }
        }
        Some(worst)
    }
}

pub const SCENE_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub name: String,
    pub labels: Vec<String>,
    pub joints: Vec<Point>,
    pub rest_lengths: Vec<f64>,
}

/// On-disk form of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub version: u32,
    pub epsilon: f64,
    pub chains: Vec<ChainRecord>,
    pub frame: Option<Frame>,
    pub provenance: Provenance,
}

impl From<Scene> for SceneFile {
    fn from(s: Scene) -> SceneFile {
        SceneFile {
            version: SCENE_FILE_VERSION,
            epsilon: s.epsilon,
            chains: s
                .chains
                .into_iter()
                .map(|c| ChainRecord { name: c.name, labels: c.labels, joints: c.joints, rest_lengths: c.rest_lengths })
                .collect(),
            frame: s.frame,
            provenance: s.provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneFileError {
    #[error("unsupported scene file version {0}")]
    Version(u32),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

impl TryFrom<SceneFile> for Scene {
    type Error = SceneFileError;

    fn try_from(f: SceneFile) -> Result<Scene, SceneFileError> {
        if f.version != SCENE_FILE_VERSION {
            return Err(SceneFileError::Version(f.version));
        }
        let chains = f.chains.into_iter().map(|c| Chain { name: c.name, labels: c.labels, joints: c.joints, rest_lengths: c.rest_lengths }).collect();
        Ok(Scene::new(chains, f.epsilon, f.frame, f.provenance)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(name: &str, labels: &[&str]) -> Chain {
        let pts: Vec<(&str, Point)> = labels.iter().enumerate().map(|(i, l)| (*l, Point::new(i as f64, 0.0, 0.0))).collect();
        Chain::from_joints(name, &pts)
    }

    #[test]
    fn labels_resolve() {
        let s = Scene::new(vec![chain("one", &["a", "b"]), chain("two", &["c", "d", "e"])], 0.1, None, Provenance::default()).unwrap();
        assert_eq!(s.locate("e"), Some((1, 2)));
        assert_eq!(s.point("b"), Some(Point::new(1.0, 0.0, 0.0)));
        assert!(s.locate("z").is_none());
        assert_eq!(s.joint_count(), 5);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let err = Scene::new(vec![chain("one", &["a", "b"]), chain("two", &["b", "c"])], 0.1, None, Provenance::default()).unwrap_err();
        assert_eq!(err, SceneError::DuplicateLabel("b".into()));
    }

    #[test]
    fn json_round_trip() {
        let mut s = Scene::new(vec![chain("one", &["a", "b"]), chain("two", &["c", "d", "e"])], 0.1, None, Provenance::default()).unwrap();
        s.set_point("d", Point::new(0.1 + 0.2, 1.0 / 3.0, -2.5e-17));
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.starts_with("{\"version\":1,"));
        let back: Scene = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn wrong_version_rejected() {
        let s = Scene::new(vec![chain("one", &["a", "b"])], 0.1, None, Provenance::default()).unwrap();
        let text = serde_json::to_string(&s).unwrap().replace("\"version\":1", "\"version\":2");
        assert!(serde_json::from_str::<Scene>(&text).is_err());
    }

    #[test]
    fn single_joint_chain_rejected() {
        let c = Chain { name: "x".into(), labels: vec!["a".into()], joints: vec![Point::ZERO], rest_lengths: vec![] };
        assert!(matches!(Scene::new(vec![c], 0.1, None, Provenance::default()), Err(SceneError::TooShort(_))));
    }
}
