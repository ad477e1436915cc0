use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{MatchEvent, Procedure, ProcedureTrace};
use crate::free_index::FreeNeighborIndex;
use crate::ownership::OwnershipList;
use crate::{Config, ConfigError, Level, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: VertexId, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge ({0}, {1}) already present")]
    DuplicateEdge(VertexId, VertexId),
    #[error("edge ({0}, {1}) not present")]
    MissingEdge(VertexId, VertexId),
    #[error("edge ({0}, {1}) is already owned")]
    AlreadyOwned(VertexId, VertexId),
    #[error("edge ({other}, {owner}) is not owned by {owner}")]
    NotOwned { owner: VertexId, other: VertexId },
    #[error("ownership list of {0} is empty")]
    EmptyOwnershipList(VertexId),
    #[error("vertex {0} is already matched")]
    AlreadyMatched(VertexId),
    #[error("vertex {u} is not matched to {v}")]
    NotMatchedTo { u: VertexId, v: VertexId },
}

/// Complete algorithm state: graph, matching, levels, ownership lists and
/// free-neighbour indexes.
///
/// The primitives on this type keep each structure internally consistent
/// but do not restore the matching invariants; that is the job of
/// [`State::insert_edge`] and [`State::delete_edge`].
#[derive(Clone, Debug)]
pub struct State {
    pub(crate) config: Config,
    pub(crate) adj: Vec<BTreeSet<VertexId>>,
    pub(crate) mate: Vec<Option<VertexId>>,
    pub(crate) level: Vec<Level>,
    pub(crate) owned: Vec<OwnershipList>,
    pub(crate) free: FreeNeighborIndex,
    pub(crate) flag: bool,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) edges: usize,
    pub(crate) matched_edges: usize,
    /// Elementary steps (list moves, index probes, scans) since construction.
    pub(crate) work: u64,
    pub(crate) trace: ProcedureTrace,
    pub(crate) events: Vec<MatchEvent>,
    /// Procedures currently executing, innermost last.
    pub(crate) stack: Vec<Procedure>,
}

impl State {
    pub fn new(config: Config) -> Result<Self, StateError> {
        config.validate()?;
        let n = config.n;
        Ok(Self {
            config,
            adj: vec![BTreeSet::new(); n],
            mate: vec![None; n],
            level: vec![Level::Zero; n],
            owned: vec![OwnershipList::new(); n],
            free: FreeNeighborIndex::new(n, config.threshold),
            flag: false,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            edges: 0,
            matched_edges: 0,
            work: 0,
            trace: ProcedureTrace::default(),
            events: Vec::new(),
            stack: Vec::new(),
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub fn threshold(&self) -> usize {
        self.config.threshold
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<(), StateError> {
        if v.index() < self.config.n {
            Ok(())
        } else {
            Err(StateError::VertexOutOfRange { vertex: v, n: self.config.n })
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.config.n as u32).map(VertexId)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj[u.index()].contains(&v)
    }

    /// Neighbours of `v` in ascending id order.
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[v.index()].iter().copied()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v.index()].len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// All edges as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.edges);
        for u in self.vertices() {
            for &v in self.adj[u.index()].range(VertexId(u.0 + 1)..) {
                out.push((u, v));
            }
        }
        out
    }

    pub fn mate(&self, v: VertexId) -> Option<VertexId> {
        self.mate[v.index()]
    }

    pub fn is_free(&self, v: VertexId) -> bool {
        self.mate[v.index()].is_none()
    }

    pub fn level(&self, v: VertexId) -> Level {
        self.level[v.index()]
    }

    pub fn matching_size(&self) -> usize {
        self.matched_edges
    }

    /// Matched edges as `(u, v)` with `u < v`, ascending.
    pub fn matching(&self) -> Vec<(VertexId, VertexId)> {
        self.vertices()
            .filter_map(|u| self.mate(u).filter(|&v| u < v).map(|v| (u, v)))
            .collect()
    }

    pub fn owned(&self, v: VertexId) -> &crate::ownership::OwnershipList {
        &self.owned[v.index()]
    }

    pub fn owned_count(&self, v: VertexId) -> usize {
        self.owned[v.index()].len()
    }

    pub fn free_index(&self) -> &FreeNeighborIndex {
        &self.free
    }

    pub fn flag(&self) -> bool {
        self.flag
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    /// Trace of the most recent update.
    pub fn last_trace(&self) -> &ProcedureTrace {
        &self.trace
    }

    /// Matching events recorded since the last call.
    pub fn take_events(&mut self) -> Vec<MatchEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn has_free(&self, v: VertexId) -> bool {
        self.free.has_free(v)
    }

    pub fn get_free(&mut self, v: VertexId) -> Option<VertexId> {
        let (found, probes) = self.free.get_free(v);
        self.work += probes;
        found
    }

    pub fn f_insert(&mut self, v: VertexId, u: VertexId) {
        self.free.insert(v, u);
    }

    pub fn f_delete(&mut self, v: VertexId, u: VertexId) {
        self.free.remove(v, u);
    }

    pub fn own_add(&mut self, owner: VertexId, other: VertexId) -> Result<(), StateError> {
        if !self.has_edge(owner, other) {
            return Err(StateError::MissingEdge(owner, other));
        }
        if self.owned[owner.index()].contains(other) || self.owned[other.index()].contains(owner) {
            return Err(StateError::AlreadyOwned(owner, other));
        }
        self.owned[owner.index()].insert(other);
        Ok(())
    }

    pub fn own_remove(&mut self, owner: VertexId, other: VertexId) -> Result<(), StateError> {
        if self.owned[owner.index()].remove(other) {
            Ok(())
        } else {
            Err(StateError::NotOwned { owner, other })
        }
    }

    /// Draws an owned edge uniformly with the state's generator and returns
    /// its other endpoint.
    pub fn own_sample_uniform(&mut self, owner: VertexId) -> Result<VertexId, StateError> {
        self.owned[owner.index()]
            .sample(&mut self.rng)
            .ok_or(StateError::EmptyOwnershipList(owner))
    }

    pub fn set_match(&mut self, u: VertexId, v: VertexId) -> Result<(), StateError> {
        if !self.has_edge(u, v) {
            return Err(StateError::MissingEdge(u, v));
        }
        for w in [u, v] {
            if self.mate[w.index()].is_some() {
                return Err(StateError::AlreadyMatched(w));
            }
        }
        self.mate[u.index()] = Some(v);
        self.mate[v.index()] = Some(u);
        self.matched_edges += 1;
        Ok(())
    }

    pub fn unset_match(&mut self, u: VertexId, v: VertexId) -> Result<(), StateError> {
        if self.mate[u.index()] != Some(v) {
            return Err(StateError::NotMatchedTo { u, v });
        }
        self.mate[u.index()] = None;
        self.mate[v.index()] = None;
        self.matched_edges -= 1;
        Ok(())
    }

    pub(crate) fn set_level(&mut self, v: VertexId, level: Level) {
        self.level[v.index()] = level;
    }

    pub(crate) fn validate_new_edge(&self, u: VertexId, v: VertexId) -> Result<(), StateError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(StateError::SelfLoop(u));
        }
        if self.has_edge(u, v) {
            return Err(StateError::DuplicateEdge(u, v));
        }
        Ok(())
    }

    pub(crate) fn adj_insert(&mut self, u: VertexId, v: VertexId) {
        self.adj[u.index()].insert(v);
        self.adj[v.index()].insert(u);
        self.edges += 1;
    }

    pub(crate) fn adj_remove(&mut self, u: VertexId, v: VertexId) {
        self.adj[u.index()].remove(&v);
        self.adj[v.index()].remove(&u);
        self.edges -= 1;
    }

    /// Adds an edge to the adjacency only, bypassing ownership, matching and
    /// index maintenance. Meant for building deliberately inconsistent
    /// states in verifier tests.
    #[doc(hidden)]
    pub fn raw_insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<(), StateError> {
        self.validate_new_edge(u, v)?;
        self.adj_insert(u, v);
        Ok(())
    }

    /// Overwrites a level without any repair. Test hook, see
    /// [`State::raw_insert_edge`].
    #[doc(hidden)]
    pub fn raw_set_level(&mut self, v: VertexId, level: Level) {
        self.set_level(v, level);
    }
}
