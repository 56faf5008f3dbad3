//! Domain types shared by every stage of the pipeline.
//!
//! Concept scores are costs: a trajectory's score under a weight vector is the
//! weighted sum of its concept features, and lower scores are preferred. The
//! preference value fed to the Bradley-Terry model is the negated score.

mod feedback;
mod pool;

pub use feedback::{Choice, DifficultyFeedback, FeedbackState, PairwiseFeedback, Query};
pub use pool::TrajectoryPool;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::envs::homegrid::Episode;
use crate::error::{contract, Error, Result};

/// Tolerance for the unit-norm invariant.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    CostLike,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub polarity: Polarity,
}

impl Concept {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self { name: name.into(), description: description.into(), polarity: Polarity::CostLike }
    }
}

/// Ordered, immutable set of named concepts. Position `i` in the catalog is
/// position `i` in every weight and feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CatalogRepr", into = "CatalogRepr")]
pub struct ConceptCatalog {
    concepts: Vec<Concept>,
}

#[derive(Serialize, Deserialize)]
struct CatalogRepr {
    concepts: Vec<Concept>,
}

impl TryFrom<CatalogRepr> for ConceptCatalog {
    type Error = Error;
    fn try_from(r: CatalogRepr) -> Result<Self> {
        ConceptCatalog::new(r.concepts)
    }
}

impl From<ConceptCatalog> for CatalogRepr {
    fn from(c: ConceptCatalog) -> Self {
        CatalogRepr { concepts: c.concepts }
    }
}

impl ConceptCatalog {
    pub fn new(concepts: Vec<Concept>) -> Result<Self> {
        if concepts.is_empty() {
            return Err(contract("concept catalog is empty"));
        }
        let mut seen = HashSet::new();
        for c in &concepts {
            if c.name.trim().is_empty() {
                return Err(contract("concept names must be non-empty"));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(contract(format!("duplicate concept `{}`", c.name)));
            }
        }
        Ok(Self { concepts })
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.concepts.iter().map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.concepts.iter().position(|c| c.name == name)
    }

    /// Case-insensitive lookup used when parsing free-form model output.
    pub fn index_of_loose(&self, name: &str) -> Option<usize> {
        let needle = name.trim().to_ascii_lowercase();
        self.concepts.iter().position(|c| c.name.to_ascii_lowercase() == needle)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrajectoryId(pub String);

impl TrajectoryId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TrajectoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TrajectoryId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for TrajectoryId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Environment-specific payload kept alongside a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Route { nodes: Vec<u64>, edges: Vec<usize> },
    Grid { episode: Episode },
}

/// A behavior with its precomputed concept feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: TrajectoryId,
    pub features: Vec<f64>,
    pub render: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Trajectory {
    pub fn new(
        id: impl Into<TrajectoryId>,
        features: Vec<f64>,
        render: impl Into<String>,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        let t = Self { id: id.into(), features, render: render.into(), provenance };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(x) = self.features.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(contract(format!(
                "trajectory {} has invalid feature value {x}",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormConstraint {
    #[default]
    UnitL2Nonnegative,
    UnitL2,
    Unconstrained,
}

impl NormConstraint {
    /// Maps an arbitrary vector onto the constraint set. Under the nonnegative
    /// constraint negatives are clamped to zero before renormalizing. Returns
    /// `None` when nothing admissible remains (zero or non-finite vector).
    pub fn project(self, v: &[f64]) -> Option<Vec<f64>> {
        if v.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let mut out: Vec<f64> = match self {
            NormConstraint::UnitL2Nonnegative => v.iter().map(|x| x.max(0.0)).collect(),
            _ => v.to_vec(),
        };
        if self == NormConstraint::Unconstrained {
            return Some(out);
        }
        let norm = l2_norm(&out);
        if norm <= f64::MIN_POSITIVE {
            return None;
        }
        out.iter_mut().for_each(|x| *x /= norm);
        Some(out)
    }

    pub fn admits(self, v: &[f64]) -> bool {
        if v.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self {
            NormConstraint::Unconstrained => true,
            NormConstraint::UnitL2 => (l2_norm(v) - 1.0).abs() <= NORM_TOLERANCE,
            NormConstraint::UnitL2Nonnegative => {
                v.iter().all(|x| *x >= 0.0) && (l2_norm(v) - 1.0).abs() <= NORM_TOLERANCE
            }
        }
    }
}

/// Linear weights over the catalog's concepts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceWeights {
    weights: Vec<f64>,
    #[serde(default)]
    constraint: NormConstraint,
}

impl PreferenceWeights {
    /// Wraps `weights` as-is; fails if they violate `constraint`.
    pub fn new(weights: Vec<f64>, constraint: NormConstraint) -> Result<Self> {
        if !constraint.admits(&weights) {
            return Err(Error::Constraint(format!(
                "weights {weights:?} violate {constraint:?}"
            )));
        }
        Ok(Self { weights, constraint })
    }

    /// Projects `raw` onto `constraint` first.
    pub fn projected(raw: &[f64], constraint: NormConstraint) -> Result<Self> {
        let weights = constraint
            .project(raw)
            .ok_or_else(|| Error::Domain(format!("cannot project {raw:?} onto {constraint:?}")))?;
        Ok(Self { weights, constraint })
    }

    pub fn unconstrained(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights, NormConstraint::Unconstrained)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn constraint(&self) -> NormConstraint {
        self.constraint
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::unconstrained(self.weights.iter().map(|w| w * alpha).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Weighted sum of a trajectory's concept features.
pub fn score_trajectory(w: &PreferenceWeights, t: &Trajectory) -> Result<f64> {
    check_dims(w.len(), t.features.len())?;
    Ok(dot(w.as_slice(), &t.features))
}

/// `1 - cos(angle)` between two weight vectors, in `[0, 2]`.
pub fn cosine_distance(w1: &PreferenceWeights, w2: &PreferenceWeights) -> Result<f64> {
    cosine_distance_raw(w1.as_slice(), w2.as_slice())
}

pub fn cosine_distance_raw(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("cosine distance of a zero vector".into()));
    }
    let cos = (dot(a, b) / (na * nb)).clamp(-1.0, 1.0);
    Ok(1.0 - cos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn traj(features: Vec<f64>) -> Trajectory {
        Trajectory::new("t", features, "", None).unwrap()
    }

    fn free(v: Vec<f64>) -> PreferenceWeights {
        PreferenceWeights::unconstrained(v).unwrap()
    }

    #[test]
    fn catalog_rejects_duplicates_and_blanks() {
        assert!(ConceptCatalog::new(vec![Concept::new("a", ""), Concept::new("a", "")]).is_err());
        assert!(ConceptCatalog::new(vec![Concept::new(" ", "")]).is_err());
        assert!(ConceptCatalog::new(vec![]).is_err());
        let c = ConceptCatalog::new(vec![Concept::new("Time", ""), Concept::new("Safety", "")])
            .unwrap();
        assert_eq!(c.index_of("Safety"), Some(1));
        assert_eq!(c.index_of_loose(" safety "), Some(1));
    }

    #[test]
    fn catalog_json_schema() {
        let json = r#"{"concepts":[{"name":"Time","description":"travel time"}]}"#;
        let c: ConceptCatalog = serde_json::from_str(json).unwrap();
        assert_eq!(c.len(), 1);
        let dup = r#"{"concepts":[{"name":"x","description":""},{"name":"x","description":""}]}"#;
        assert!(serde_json::from_str::<ConceptCatalog>(dup).is_err());
    }

    #[test]
    fn trajectory_rejects_negative_or_nan_features() {
        assert!(Trajectory::new("a", vec![0.1, -0.1], "", None).is_err());
        assert!(Trajectory::new("a", vec![f64::NAN], "", None).is_err());
    }

    #[test]
    fn score_examples() {
        let t = traj(vec![0.2, 0.8]);
        assert_eq!(score_trajectory(&free(vec![0.0, 0.0]), &t).unwrap(), 0.0);
        assert_eq!(score_trajectory(&free(vec![0.0, 1.0]), &t).unwrap(), 0.8);
        assert_abs_diff_eq!(score_trajectory(&free(vec![0.5, 0.5]), &t).unwrap(), 0.5);
        assert!(matches!(
            score_trajectory(&free(vec![1.0]), &t),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cosine_examples() {
        let a = free(vec![1.0, 0.0]);
        assert_eq!(cosine_distance(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(cosine_distance(&a, &free(vec![0.0, 1.0])).unwrap(), 1.0);
        assert_abs_diff_eq!(cosine_distance(&a, &free(vec![-1.0, 0.0])).unwrap(), 2.0);
        assert!(matches!(cosine_distance(&a, &free(vec![0.0, 0.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn projection_clamps_then_normalizes() {
        let p = NormConstraint::UnitL2Nonnegative.project(&[3.0, -1.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_eq!(p[1], 0.0);
        assert_abs_diff_eq!(p[2], 0.8, epsilon = 1e-15);
        assert!(NormConstraint::UnitL2Nonnegative.project(&[-1.0, -2.0]).is_none());
        let q = NormConstraint::UnitL2.project(&[-3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(q[0], -0.6, epsilon = 1e-15);
        assert!(PreferenceWeights::new(vec![0.6, 0.8], NormConstraint::UnitL2Nonnegative).is_ok());
        assert!(PreferenceWeights::new(vec![0.6, 0.7], NormConstraint::UnitL2).is_err());
        assert!(PreferenceWeights::new(vec![-0.6, 0.8], NormConstraint::UnitL2Nonnegative).is_err());
    }

    proptest! {
        #[test]
        fn score_is_linear(
            w in prop::collection::vec(-5.0f64..5.0, 4),
            f in prop::collection::vec(0.0f64..1.0, 4),
            alpha in -10.0f64..10.0,
        ) {
            let t = traj(f);
            let w = free(w);
            let lhs = score_trajectory(&w.scaled(alpha).unwrap(), &t).unwrap();
            let rhs = alpha * score_trajectory(&w, &t).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn cosine_is_scale_invariant(
            a in prop::collection::vec(0.1f64..5.0, 5),
            b in prop::collection::vec(-5.0f64..5.0, 5),
            alpha in 0.01f64..100.0,
            beta in 0.01f64..100.0,
        ) {
            prop_assume!(l2_norm(&b) > 1e-3);
            let d = cosine_distance_raw(&a, &b).unwrap();
            let sa: Vec<f64> = a.iter().map(|x| x * alpha).collect();
            let sb: Vec<f64> = b.iter().map(|x| x * beta).collect();
            let ds = cosine_distance_raw(&sa, &sb).unwrap();
            prop_assert!((d - ds).abs() <= 1e-12);
            prop_assert!((0.0..=2.0).contains(&d));
        }
    }
}
