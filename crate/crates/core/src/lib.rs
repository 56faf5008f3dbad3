//! Active preference learning over concept-weighted trajectories.
//!
//! A Bradley-Terry likelihood over pairwise comparisons is combined with a
//! prior built from language-model output; queries are chosen by variance
//! ratio, optionally filtered by an answerability oracle.

pub mod acquisition;
pub mod domain;
pub mod envs;
pub mod humansim;
mod error;
pub mod inference;
pub mod oracles;
pub mod runner;
pub mod seed;
pub mod theory;

pub use error::{Error, Result};
