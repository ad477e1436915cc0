use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Level, VertexId};

/// The repair procedures an update can invoke.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Procedure {
    NaiveSettleAugmented,
    RandomSettleAugmented,
    DeterministicRaiseLevelTo1,
    RandomisedRaiseLevelTo1,
    Fix3AugPathD,
    Fix3AugPath,
    HandleDeleteLevel1,
    HandleInsertLevel0,
}

impl Procedure {
    pub const ALL: [Procedure; 8] = [
        Procedure::NaiveSettleAugmented,
        Procedure::RandomSettleAugmented,
        Procedure::DeterministicRaiseLevelTo1,
        Procedure::RandomisedRaiseLevelTo1,
        Procedure::Fix3AugPathD,
        Procedure::Fix3AugPath,
        Procedure::HandleDeleteLevel1,
        Procedure::HandleInsertLevel0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Procedure::NaiveSettleAugmented => "naive-settle-augmented",
            Procedure::RandomSettleAugmented => "random-settle-augmented",
            Procedure::DeterministicRaiseLevelTo1 => "deterministic-raise-level-to-1",
            Procedure::RandomisedRaiseLevelTo1 => "randomised-raise-level-to-1",
            Procedure::Fix3AugPathD => "fix-3-aug-path-d",
            Procedure::Fix3AugPath => "fix-3-aug-path",
            Procedure::HandleDeleteLevel1 => "handle-delete-level1",
            Procedure::HandleInsertLevel0 => "handle-insert-level0",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcedureCall {
    pub procedure: Procedure,
    pub args: Vec<VertexId>,
    /// The update's flag when the call was made.
    pub flag: bool,
}

/// Procedure calls made during one update, in call order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcedureTrace {
    pub calls: Vec<ProcedureCall>,
}

impl ProcedureTrace {
    pub fn len(&self) -> usize {
        self.calls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }

    pub fn contains(&self, procedure: Procedure) -> bool {
        self.calls.iter().any(|c| c.procedure == procedure)
    }

    pub fn count(&self, procedure: Procedure) -> usize {
        self.calls.iter().filter(|c| c.procedure == procedure).count()
    }

    /// True if no call ran with the flag set before a random settle had
    /// completed earlier in the same update.
    pub fn flag_follows_random_settle(&self) -> bool {
        let mut seen_random = false;
        for call in &self.calls {
            if call.flag && !seen_random {
                return false;
            }
            if call.procedure == Procedure::RandomSettleAugmented {
                seen_random = true;
            }
        }
        true
    }
}

/// How a matched edge came into being.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomPick {
    /// The vertex whose ownership list was sampled.
    pub owner: VertexId,
    /// Other endpoints of the owner's list at sampling time.
    pub init: Vec<VertexId>,
}

/// Changes to the matching and graph, in the order they happened.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchEvent {
    EdgeDeleted {
        u: VertexId,
        v: VertexId,
    },
    Matched {
        u: VertexId,
        v: VertexId,
        /// Innermost procedure running when the edge was added.
        cause: Option<Procedure>,
        random: Option<RandomPick>,
    },
    Unmatched {
        u: VertexId,
        v: VertexId,
        level: Level,
    },
    /// A matched edge moved from level 0 to level 1 without changing.
    Raised {
        u: VertexId,
        v: VertexId,
        cause: Procedure,
    },
}
