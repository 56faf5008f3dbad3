use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::TrajectoryId;
use crate::error::{contract, Error, Result};

/// An ordered pair of distinct trajectories shown to the human. Identity for
/// deduplication ignores orientation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub first: TrajectoryId,
    pub second: TrajectoryId,
}

impl Query {
    pub fn new(first: impl Into<TrajectoryId>, second: impl Into<TrajectoryId>) -> Result<Self> {
        let (first, second) = (first.into(), second.into());
        if first == second {
            return Err(contract(format!("query pairs `{first}` with itself")));
        }
        Ok(Self { first, second })
    }

    pub fn reversed(&self) -> Self {
        Self { first: self.second.clone(), second: self.first.clone() }
    }

    /// Orientation-free key: (lexicographically smaller id, larger id).
    pub fn key(&self) -> (TrajectoryId, TrajectoryId) {
        if self.first <= self.second {
            (self.first.clone(), self.second.clone())
        } else {
            (self.second.clone(), self.first.clone())
        }
    }

    pub fn same_pair(&self, other: &Query) -> bool {
        self.key() == other.key()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseFeedback {
    pub query: Query,
    pub choice: Choice,
}

impl PairwiseFeedback {
    pub fn preferred(&self) -> &TrajectoryId {
        match self.choice {
            Choice::First => &self.query.first,
            Choice::Second => &self.query.second,
        }
    }

    pub fn rejected(&self) -> &TrajectoryId {
        match self.choice {
            Choice::First => &self.query.second,
            Choice::Second => &self.query.first,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifficultyFeedback {
    pub query: Query,
    pub text: String,
}

/// The three feedback sets: pairwise rankings, language, and query difficulty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackState {
    f_h: Vec<PairwiseFeedback>,
    f_l: Vec<String>,
    f_q: Vec<DifficultyFeedback>,
    #[serde(default)]
    skipped: BTreeSet<(TrajectoryId, TrajectoryId)>,
}

impl FeedbackState {
    /// Seeds the language set with the human's instruction.
    pub fn new(instruction: impl Into<String>) -> Result<Self> {
        let instruction = instruction.into();
        if instruction.trim().is_empty() {
            return Err(contract("instruction text is empty"));
        }
        Ok(Self { f_h: Vec::new(), f_l: vec![instruction], f_q: Vec::new(), skipped: BTreeSet::new() })
    }

    pub fn pairwise(&self) -> &[PairwiseFeedback] {
        &self.f_h
    }

    pub fn language(&self) -> &[String] {
        &self.f_l
    }

    pub fn difficulty(&self) -> &[DifficultyFeedback] {
        &self.f_q
    }

    pub fn instruction(&self) -> &str {
        &self.f_l[0]
    }

    /// Whether this unordered pair was answered already.
    pub fn contains(&self, q: &Query) -> bool {
        let key = q.key();
        self.f_h.iter().any(|f| f.query.key() == key)
    }

    /// Whether this pair was asked before, answered or skipped.
    pub fn was_asked(&self, q: &Query) -> bool {
        self.skipped.contains(&q.key()) || self.contains(q)
    }

    pub fn add_pairwise(&mut self, query: Query, choice: Choice) -> Result<()> {
        if self.contains(&query) {
            return Err(Error::DuplicateQuery(query.first.0, query.second.0));
        }
        self.f_h.push(PairwiseFeedback { query, choice });
        Ok(())
    }

    pub fn add_language(&mut self, text: impl Into<String>) {
        let text = text.into();
        if !text.trim().is_empty() {
            self.f_l.push(text);
        }
    }

    pub fn add_difficulty(&mut self, query: Query, text: impl Into<String>) {
        self.f_q.push(DifficultyFeedback { query, text: text.into() });
    }

    /// Records a pair the human could not rank so it is never re-asked.
    pub fn mark_skipped(&mut self, query: &Query) {
        self.skipped.insert(query.key());
    }

    pub fn asked_keys(&self) -> BTreeSet<(TrajectoryId, TrajectoryId)> {
        let mut keys = self.skipped.clone();
        keys.extend(self.f_h.iter().map(|f| f.query.key()));
        keys
    }
}
