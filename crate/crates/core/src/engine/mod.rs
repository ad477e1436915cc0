//! Edge insertion and deletion, and the repair procedures they drive.
//!
//! Each procedure fixes the invariant its caller left violated and then
//! recurses into at most a constant number of further procedures. Calls are
//! recorded in a [`ProcedureTrace`] and matching changes in a stream of
//! [`MatchEvent`]s.
//!
//! Where the procedures below differ from a literal reading of the
//! published pseudocode, the difference is a guard that routes a freed
//! vertex to the settle routine matching its current level, or a repair of
//! free-neighbour bookkeeping that the pseudocode leaves implicit.

mod trace;

use thiserror::Error;

pub use trace::{MatchEvent, Procedure, ProcedureCall, ProcedureTrace, RandomPick};

use crate::state::{State, StateError};
use crate::{Level, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("{name}: precondition violated: {detail}")]
    Precondition { name: &'static str, detail: String },
}

type Result<T> = std::result::Result<T, EngineError>;

fn require(cond: bool, name: &'static str, detail: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(EngineError::Precondition { name, detail: detail() })
    }
}

impl State {
    /// Inserts edge `(u, v)` and restores all invariants.
    pub fn insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<ProcedureTrace> {
        self.validate_new_edge(u, v)?;
        self.begin_update();
        self.adj_insert(u, v);
        // A free endpoint is a free neighbour of the other from now on.
        for (a, b) in [(u, v), (v, u)] {
            if self.is_free(a) {
                self.free.insert(b, a);
            }
        }
        let t = self.config.threshold;
        match (self.level(u), self.level(v)) {
            (Level::One, Level::One) => {
                let (lo, hi) = if u < v { (u, v) } else { (v, u) };
                self.own_add(lo, hi)?;
            }
            (Level::One, Level::Zero) | (Level::Zero, Level::One) => {
                let (hi, lo) = if self.level(u) == Level::One { (u, v) } else { (v, u) };
                self.own_add(hi, lo)?;
                if self.is_free(lo) {
                    if let Some(z) = self.check_3_aug_path(lo, hi)? {
                        let y = self.mate_of(hi)?;
                        self.fix_3_aug_path(lo, hi, y, z)?;
                    }
                } else if self.degree(lo) >= t {
                    self.randomised_raise_level_to_1(lo)?;
                }
            }
            (Level::Zero, Level::Zero) => self.handle_insert_level0(u, v)?,
        }
        for (a, b) in [(u, v), (v, u)] {
            if self.is_free(a) {
                self.free.insert(b, a);
            } else {
                self.free.remove(b, a);
            }
        }
        Ok(self.finish_update())
    }

    /// Deletes edge `(u, v)` and restores all invariants.
    pub fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<ProcedureTrace> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v || !self.has_edge(u, v) {
            return Err(StateError::MissingEdge(u, v).into());
        }
        self.begin_update();
        self.events.push(MatchEvent::EdgeDeleted { u, v });
        if self.owned[u.index()].contains(v) {
            self.own_remove(u, v)?;
        } else {
            self.own_remove(v, u)?;
        }
        self.free.remove(u, v);
        self.free.remove(v, u);
        self.adj_remove(u, v);
        if self.mate(u) == Some(v) {
            let level = self.level(u);
            self.unlink(u, v)?;
            match level {
                Level::Zero => self.naive_settle_augmented(u, false)?,
                Level::One => self.handle_delete_level1(u, false)?,
            }
            // The first settle may already have raised the flag.
            let flag = self.flag;
            self.settle_freed(v, flag)?;
        }
        Ok(self.finish_update())
    }

    fn begin_update(&mut self) {
        self.flag = false;
        self.trace.calls.clear();
        self.stack.clear();
    }

    fn finish_update(&mut self) -> ProcedureTrace {
        self.trace.clone()
    }

    fn enter(&mut self, procedure: Procedure, args: &[VertexId], flag: bool) {
        self.trace.calls.push(ProcedureCall {
            procedure,
            args: args.to_vec(),
            flag,
        });
        self.stack.push(procedure);
    }

    fn leave(&mut self) {
        self.stack.pop();
    }

    fn mate_of(&self, v: VertexId) -> Result<VertexId> {
        self.mate(v).ok_or_else(|| EngineError::Precondition {
            name: "mate",
            detail: format!("vertex {v} is free"),
        })
    }

    fn link(&mut self, u: VertexId, v: VertexId, random: Option<RandomPick>) -> Result<()> {
        self.set_match(u, v)?;
        self.events.push(MatchEvent::Matched {
            u,
            v,
            cause: self.stack.last().copied(),
            random,
        });
        Ok(())
    }

    fn unlink(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let level = self.level(u);
        self.unset_match(u, v)?;
        self.events.push(MatchEvent::Unmatched { u, v, level });
        Ok(())
    }

    fn raise(&mut self, u: VertexId) {
        self.set_level(u, Level::One);
    }

    // ----- macros -----

    /// Looks for a free `z != u` adjacent to `y = mate(v)`, so that
    /// `u - v - y - z` would be a length-3 augmenting path if `u` is free.
    pub fn check_3_aug_path(&mut self, u: VertexId, v: VertexId) -> Result<Option<VertexId>> {
        let y = self.mate(v).ok_or_else(|| EngineError::Precondition {
            name: "check-3-aug-path",
            detail: format!("vertex {v} is free"),
        })?;
        let removed = self.free.remove(y, u);
        let z = if self.has_free(y) { self.get_free(y) } else { None };
        if removed {
            self.free.insert(y, u);
        }
        self.work += 1;
        Ok(z)
    }

    /// Hands every owned edge whose other endpoint is at level 1 over to
    /// that endpoint.
    pub fn transfer_ownership_from(&mut self, u: VertexId) {
        let mut moved = Vec::new();
        for w in self.owned[u.index()].iter() {
            if self.level[w.index()] == Level::One {
                moved.push(w);
            }
        }
        self.work += self.owned[u.index()].len() as u64;
        for w in moved {
            self.owned[u.index()].remove(w);
            self.owned[w.index()].insert(u);
        }
    }

    /// Takes over every incident edge currently owned by a level-0 neighbour.
    pub fn transfer_ownership_to(&mut self, u: VertexId) {
        for &w in self.adj[u.index()].iter() {
            if self.level[w.index()] == Level::Zero && self.owned[w.index()].remove(u) {
                self.owned[u.index()].insert(w);
            }
        }
        self.work += self.adj[u.index()].len() as u64;
    }

    /// Takes over every incident edge.
    pub fn take_ownership(&mut self, u: VertexId) {
        for &w in self.adj[u.index()].iter() {
            if self.owned[w.index()].remove(u) {
                self.owned[u.index()].insert(w);
            }
        }
        self.work += self.adj[u.index()].len() as u64;
    }

    pub fn insert_to_f_list(&mut self, u: VertexId) {
        for &w in self.adj[u.index()].iter() {
            self.free.insert(w, u);
        }
        self.work += self.adj[u.index()].len() as u64;
    }

    pub fn delete_from_f_list(&mut self, u: VertexId) {
        for &w in self.adj[u.index()].iter() {
            self.free.remove(w, u);
        }
        self.work += self.adj[u.index()].len() as u64;
    }

    // ----- procedures -----

    /// Settles a free level-0 vertex: matches it to a free neighbour if one
    /// exists, otherwise removes a length-3 augmenting path through it if
    /// one exists, otherwise advertises it as free to its neighbours.
    pub fn naive_settle_augmented(&mut self, u: VertexId, flag: bool) -> Result<()> {
        const NAME: &str = "naive-settle-augmented";
        require(self.is_free(u), NAME, || format!("vertex {u} is matched"))?;
        require(self.level(u) == Level::Zero, NAME, || format!("vertex {u} is at level 1"))?;
        self.enter(Procedure::NaiveSettleAugmented, &[u], flag);
        let t = self.config.threshold;

        if let Some(w) = self.get_free(u) {
            self.link(u, w, None)?;
            if self.degree(u) >= t {
                if flag {
                    self.deterministic_raise_level_to_1(u)?;
                    self.delete_from_f_list(u);
                    self.delete_from_f_list(w);
                } else {
                    self.randomised_raise_level_to_1(u)?;
                }
            } else if self.degree(w) >= t {
                if flag {
                    self.deterministic_raise_level_to_1(w)?;
                    self.delete_from_f_list(u);
                    self.delete_from_f_list(w);
                } else {
                    self.randomised_raise_level_to_1(w)?;
                    self.settle_freed(u, true)?;
                }
            } else {
                self.delete_from_f_list(u);
                self.delete_from_f_list(w);
            }
        } else {
            let mut next = self.adj[u.index()].iter().next().copied();
            while let Some(x) = next {
                next = self.adj[u.index()].range(VertexId(x.0 + 1)..).next().copied();
                let Some(y) = self.mate(x) else { continue };
                if let Some(z) = self.check_3_aug_path(u, x)? {
                    if flag {
                        self.fix_3_aug_path_d(u, x, y, z)?;
                    } else {
                        self.fix_3_aug_path(u, x, y, z)?;
                    }
                    break;
                }
            }
            if self.is_free(u) {
                self.insert_to_f_list(u);
            }
        }
        self.leave();
        Ok(())
    }

    /// Matches a free level-0 vertex with a large ownership list to a
    /// uniformly random owned neighbour, raising both to level 1. Returns
    /// the neighbour's previous mate, now free, if there was one.
    pub fn random_settle_augmented(&mut self, u: VertexId) -> Result<Option<VertexId>> {
        const NAME: &str = "random-settle-augmented";
        require(self.is_free(u), NAME, || format!("vertex {u} is matched"))?;
        require(self.level(u) == Level::Zero, NAME, || format!("vertex {u} is at level 1"))?;
        let owned = self.owned_count(u);
        require(owned >= self.config.threshold, NAME, || {
            format!("vertex {u} owns {owned} edges")
        })?;
        self.enter(Procedure::RandomSettleAugmented, &[u], self.flag);

        let init = self.owned[u.index()].as_slice().to_vec();
        self.work += init.len() as u64;
        let y = self.own_sample_uniform(u)?;
        self.transfer_ownership_to(y);
        let x = self.mate(y);
        if let Some(x) = x {
            self.unlink(x, y)?;
        }
        self.link(u, y, Some(RandomPick { owner: u, init }))?;
        self.raise(u);
        self.raise(y);
        self.delete_from_f_list(u);
        self.delete_from_f_list(y);

        if let Some((w, z)) = self.free_path_through(u)? {
            self.fix_3_aug_path_d(w, u, y, z)?;
        }
        self.flag = true;
        self.leave();
        Ok(x)
    }

    /// For a matched `v` with mate `y`, finds free `w` adjacent to `v` and
    /// free `z != w` adjacent to `y`.
    ///
    /// The first candidate is `get_free(v)`. If `y`'s only free neighbour
    /// is that same vertex, a second free neighbour of `v` is tried so that
    /// no path is missed.
    fn free_path_through(&mut self, v: VertexId) -> Result<Option<(VertexId, VertexId)>> {
        let Some(w) = self.get_free(v) else {
            return Ok(None);
        };
        if let Some(z) = self.check_3_aug_path(w, v)? {
            return Ok(Some((w, z)));
        }
        let y = self.mate_of(v)?;
        if !self.free.contains(y, w) {
            return Ok(None);
        }
        self.free.remove(v, w);
        let other = self.get_free(v);
        self.free.insert(v, w);
        Ok(other.map(|w2| (w2, w)))
    }

    /// Raises a matched level-0 vertex of large degree, together with its
    /// mate, to level 1 without changing the matching.
    pub fn deterministic_raise_level_to_1(&mut self, u: VertexId) -> Result<()> {
        const NAME: &str = "deterministic-raise-level-to-1";
        self.require_raisable(u, NAME)?;
        self.enter(Procedure::DeterministicRaiseLevelTo1, &[u], self.flag);
        let v = self.mate_of(u)?;
        self.take_ownership(u);
        self.transfer_ownership_to(v);
        self.raise(u);
        self.raise(v);
        self.events.push(MatchEvent::Raised {
            u,
            v,
            cause: Procedure::DeterministicRaiseLevelTo1,
        });
        self.leave();
        Ok(())
    }

    /// Breaks the match of a level-0 vertex of large degree and rematches it
    /// at level 1 to a random owned neighbour, then settles whoever was left
    /// free.
    pub fn randomised_raise_level_to_1(&mut self, u: VertexId) -> Result<()> {
        const NAME: &str = "randomised-raise-level-to-1";
        self.require_raisable(u, NAME)?;
        self.enter(Procedure::RandomisedRaiseLevelTo1, &[u], self.flag);
        let v = self.mate_of(u)?;
        self.unlink(u, v)?;
        self.take_ownership(u);
        let x = self.random_settle_augmented(u)?;
        if let Some(x) = x {
            self.settle_freed(x, true)?;
        }
        self.settle_freed(v, true)?;
        self.leave();
        Ok(())
    }

    fn require_raisable(&self, u: VertexId, name: &'static str) -> Result<()> {
        require(!self.is_free(u), name, || format!("vertex {u} is free"))?;
        require(self.level(u) == Level::Zero, name, || format!("vertex {u} is at level 1"))?;
        let deg = self.degree(u);
        require(deg >= self.config.threshold, name, || {
            format!("vertex {u} has degree {deg}")
        })
    }

    /// Settles `x` if it is free, with the routine for its current level.
    fn settle_freed(&mut self, x: VertexId, flag: bool) -> Result<()> {
        if self.is_free(x) {
            match self.level(x) {
                Level::One => self.handle_delete_level1(x, flag)?,
                Level::Zero => self.naive_settle_augmented(x, flag)?,
            }
        }
        Ok(())
    }

    fn require_path(&self, u: VertexId, v: VertexId, y: VertexId, z: VertexId, name: &'static str) -> Result<()> {
        require(self.is_free(u), name, || format!("vertex {u} is matched"))?;
        require(self.is_free(z), name, || format!("vertex {z} is matched"))?;
        require(u != z, name, || format!("path endpoints coincide at {u}"))?;
        require(self.mate(v) == Some(y), name, || format!("{v} is not matched to {y}"))?;
        require(self.has_edge(u, v) && self.has_edge(y, z), name, || {
            format!("{u}-{v}-{y}-{z} is not a path")
        })
    }

    /// Replaces matched edge `(v, y)` by `(u, v)` and `(y, z)`.
    fn augment(&mut self, u: VertexId, v: VertexId, y: VertexId, z: VertexId) -> Result<()> {
        self.unlink(v, y)?;
        self.link(u, v, None)?;
        self.link(y, z, None)?;
        Ok(())
    }

    /// Removes augmenting path `u - v - y - z` and puts all four vertices at
    /// level 1. Makes no further procedure calls.
    pub fn fix_3_aug_path_d(&mut self, u: VertexId, v: VertexId, y: VertexId, z: VertexId) -> Result<()> {
        self.require_path(u, v, y, z, "fix-3-aug-path-d")?;
        self.enter(Procedure::Fix3AugPathD, &[u, v, y, z], self.flag);
        for p in [u, z] {
            self.transfer_ownership_to(p);
            self.delete_from_f_list(p);
        }
        for p in [v, y] {
            if self.level(p) == Level::Zero {
                self.transfer_ownership_to(p);
                self.raise(p);
            }
        }
        self.augment(u, v, y, z)?;
        self.raise(u);
        self.raise(z);
        self.leave();
        Ok(())
    }

    /// Removes augmenting path `u - v - y - z`, then restores the degree
    /// invariant at the new endpoints, raising them at random when their
    /// degree is large.
    pub fn fix_3_aug_path(&mut self, u: VertexId, v: VertexId, y: VertexId, z: VertexId) -> Result<()> {
        self.require_path(u, v, y, z, "fix-3-aug-path")?;
        self.enter(Procedure::Fix3AugPath, &[u, v, y, z], self.flag);
        let t = self.config.threshold;
        self.augment(u, v, y, z)?;
        // Both endpoints are matched now; stale entries would otherwise be
        // visible to the nested calls below.
        self.delete_from_f_list(u);
        self.delete_from_f_list(z);

        if self.level(v) == Level::One {
            if self.degree(u) >= t {
                self.randomised_raise_level_to_1(u)?;
                self.settle_freed(v, true)?;
                self.raise_if_still_matched(z, y);
            } else if self.degree(z) >= t {
                self.randomised_raise_level_to_1(z)?;
                self.settle_freed(y, true)?;
                self.raise_if_still_matched(u, v);
            } else {
                for p in [u, z] {
                    self.transfer_ownership_to(p);
                    self.raise(p);
                }
            }
        } else {
            if self.degree(u) >= t {
                self.randomised_raise_level_to_1(u)?;
                self.settle_freed(v, true)?;
            }
            if self.degree(z) >= t && !self.is_free(z) && self.level(z) == Level::Zero {
                self.randomised_raise_level_to_1(z)?;
                self.settle_freed(y, true)?;
            }
        }
        self.leave();
        Ok(())
    }

    /// Puts `p` at level 1 next to its level-1 mate `q`, if the two are still
    /// matched and `p` has not been raised already.
    fn raise_if_still_matched(&mut self, p: VertexId, q: VertexId) {
        if self.mate(p) == Some(q) && self.level(p) == Level::Zero {
            self.transfer_ownership_to(p);
            self.delete_from_f_list(p);
            self.raise(p);
        }
    }

    /// Settles a free level-1 vertex: drops it to level 0 and either
    /// rematches it at random (large ownership list) or settles it naively.
    pub fn handle_delete_level1(&mut self, u: VertexId, flag: bool) -> Result<()> {
        const NAME: &str = "handle-delete-level1";
        require(self.is_free(u), NAME, || format!("vertex {u} is matched"))?;
        require(self.level(u) == Level::One, NAME, || format!("vertex {u} is at level 0"))?;
        self.enter(Procedure::HandleDeleteLevel1, &[u], flag);
        self.transfer_ownership_from(u);
        self.set_level(u, Level::Zero);
        if self.owned_count(u) >= self.config.threshold {
            if let Some(x) = self.random_settle_augmented(u)? {
                self.settle_freed(x, true)?;
            }
        } else {
            self.naive_settle_augmented(u, flag)?;
        }
        self.leave();
        Ok(())
    }

    /// Handles a newly inserted edge between two level-0 vertices.
    pub fn handle_insert_level0(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        const NAME: &str = "handle-insert-level0";
        require(self.has_edge(u, v), NAME, || format!("({u}, {v}) is not an edge"))?;
        require(
            self.level(u) == Level::Zero && self.level(v) == Level::Zero,
            NAME,
            || format!("({u}, {v}) is not a level-0 edge"),
        )?;
        self.enter(Procedure::HandleInsertLevel0, &[u, v], self.flag);
        let t = self.config.threshold;

        if self.owned_count(u) >= self.owned_count(v) {
            self.own_add(u, v)?;
        } else {
            self.own_add(v, u)?;
        }
        let uv_matched = self.is_free(u) && self.is_free(v);
        if uv_matched {
            self.link(u, v, None)?;
        }
        let (u, v) = if self.owned_count(v) > self.owned_count(u) { (v, u) } else { (u, v) };

        if self.owned_count(u) >= t {
            self.transfer_ownership_to(u);
            let old = self.mate(u);
            if let Some(m) = old {
                self.unlink(u, m)?;
            }
            if let Some(x) = self.random_settle_augmented(u)? {
                self.settle_freed(x, true)?;
            }
            if uv_matched {
                if self.mate(u) != Some(v) {
                    self.settle_freed(v, true)?;
                }
            } else {
                if let Some(m) = old {
                    self.settle_freed(m, true)?;
                }
                if self.is_free(v) {
                    self.settle_freed(v, true)?;
                } else if self.degree(v) >= t && self.level(v) == Level::Zero {
                    self.deterministic_raise_level_to_1(v)?;
                }
            }
        } else if !self.is_free(v) {
            if self.degree(v) >= t {
                self.randomised_raise_level_to_1(v)?;
                if !self.is_free(u) && self.degree(u) >= t && self.level(u) == Level::Zero {
                    self.deterministic_raise_level_to_1(u)?;
                }
            } else if self.is_free(u) {
                if let Some(z) = self.check_3_aug_path(u, v)? {
                    let y = self.mate_of(v)?;
                    self.fix_3_aug_path(u, v, y, z)?;
                }
            } else if self.degree(u) >= t {
                self.randomised_raise_level_to_1(u)?;
            }
        } else if !self.is_free(u) {
            if self.degree(u) >= t {
                self.randomised_raise_level_to_1(u)?;
            } else if let Some(z) = self.check_3_aug_path(v, u)? {
                let y = self.mate_of(u)?;
                self.fix_3_aug_path(v, u, y, z)?;
            }
        }

        if uv_matched && self.mate(u) == Some(v) && self.degree(u) < t && self.degree(v) < t {
            self.delete_from_f_list(u);
            self.delete_from_f_list(v);
        }
        self.leave();
        Ok(())
    }
}
