//! Fully dynamic maximal matching that also keeps the graph free of
//! length-3 augmenting paths, which makes the maintained matching a
//! 3/2-approximate maximum cardinality matching.
//!
//! Vertices are split between level 0 (low degree, deterministic local
//! repair) and level 1 (high ownership, random mates drawn from the owned
//! edges). Updates are edge insertions and deletions on a fixed vertex set.
//!
//! ```
//! use dynmatch::{Config, State, VertexId};
//!
//! let mut state = State::new(Config::new(4, 1)).unwrap();
//! for (u, v) in [(1, 2), (0, 1), (2, 3)] {
//!     state.insert_edge(VertexId(u), VertexId(v)).unwrap();
//! }
//! assert_eq!(state.matching_size(), 2);
//! assert!(dynmatch::verifier::check_invariants(&state).is_clean());
//! ```

pub mod engine;
pub mod free_index;
pub mod metrics;
pub mod ownership;
pub mod state;
pub mod verifier;
pub mod workload;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{EngineError, MatchEvent, Procedure, ProcedureCall, ProcedureTrace};
pub use state::{State, StateError};
pub use workload::{OpKind, UpdateOp, UpdateSequence};

/// A vertex in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for VertexId {
    fn from(id: u32) -> Self {
        VertexId(id)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    #[default]
    Zero,
    One,
}

impl Level {
    pub fn as_u8(self) -> u8 {
        match self {
            Level::Zero => 0,
            Level::One => 1,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("vertex count must be at least 1")]
    EmptyVertexSet,
    #[error("vertex count {0} does not fit in a 32-bit vertex id")]
    TooManyVertices(usize),
    #[error("threshold must be at least 1")]
    ZeroThreshold,
}

/// Construction parameters of a [`State`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub n: usize,
    /// Degree / ownership cutoff between the two levels.
    pub threshold: usize,
    pub seed: u64,
}

impl Config {
    /// Config with the default threshold `ceil(sqrt(n))`.
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            threshold: default_threshold(n),
            seed,
        }
    }

    pub fn with_threshold(mut self, threshold: usize) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::EmptyVertexSet);
        }
        if self.n > u32::MAX as usize {
            return Err(ConfigError::TooManyVertices(self.n));
        }
        if self.threshold == 0 {
            return Err(ConfigError::ZeroThreshold);
        }
        Ok(())
    }
}

/// `ceil(sqrt(n))`, computed exactly in integers; at least 1.
pub fn default_threshold(n: usize) -> usize {
    if n <= 1 {
        return 1;
    }
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while r * r < n {
        r += 1;
    }
    r
}
