use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ConceptCatalog, Trajectory, TrajectoryId};
use crate::error::{contract, Error, Result};

/// A dataset of unlabeled trajectories produced by one environment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PoolRepr", into = "PoolRepr")]
pub struct TrajectoryPool {
    pub catalog: ConceptCatalog,
    pub source_env: String,
    pub generation: serde_json::Value,
    trajectories: Vec<Trajectory>,
    index: HashMap<TrajectoryId, usize>,
}

#[derive(Serialize, Deserialize)]
struct PoolRepr {
    catalog: ConceptCatalog,
    source_env: String,
    #[serde(default)]
    generation: serde_json::Value,
    trajectories: Vec<Trajectory>,
}

impl TryFrom<PoolRepr> for TrajectoryPool {
    type Error = Error;
    fn try_from(r: PoolRepr) -> Result<Self> {
        TrajectoryPool::new(r.catalog, r.source_env, r.generation, r.trajectories)
    }
}

impl From<TrajectoryPool> for PoolRepr {
    fn from(p: TrajectoryPool) -> Self {
        PoolRepr {
            catalog: p.catalog,
            source_env: p.source_env,
            generation: p.generation,
            trajectories: p.trajectories,
        }
    }
}

impl TrajectoryPool {
    pub fn new(
        catalog: ConceptCatalog,
        source_env: impl Into<String>,
        generation: serde_json::Value,
        trajectories: Vec<Trajectory>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(trajectories.len());
        for (i, t) in trajectories.iter().enumerate() {
            t.validate()?;
            if t.features.len() != catalog.len() {
                return Err(Error::DimensionMismatch { expected: catalog.len(), got: t.features.len() });
            }
            if index.insert(t.id.clone(), i).is_some() {
                return Err(contract(format!("duplicate trajectory id `{}`", t.id)));
            }
        }
        Ok(Self { catalog, source_env: source_env.into(), generation, trajectories, index })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.catalog.len()
    }

    pub fn index_of(&self, id: &TrajectoryId) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownTrajectory(id.0.clone()))
    }

    pub fn get(&self, id: &TrajectoryId) -> Result<&Trajectory> {
        Ok(&self.trajectories[self.index_of(id)?])
    }

    /// Keeps only the trajectories at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let trajectories = indices.iter().map(|&i| self.trajectories[i].clone()).collect();
        Self::new(self.catalog.clone(), self.source_env.clone(), self.generation.clone(), trajectories)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
