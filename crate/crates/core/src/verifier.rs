//! Independent invariant checker and exact maximum-matching oracle.
//!
//! Everything here is recomputed from the adjacency sets, the mate map, the
//! levels and the raw contents of the ownership lists and free-neighbour
//! indexes. No engine routine is reused.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::{Level, State, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum InvariantId {
    /// Level-1 vertices are matched.
    I1a,
    /// Free vertices are at level 0 and have no free neighbour.
    I1b,
    /// Level-0 vertices own fewer than `threshold` edges.
    I2,
    /// Matched level-0 vertices have degree below `threshold`.
    I3,
    /// Mates share a level.
    I4,
    /// No length-3 augmenting path.
    I5,
    /// Every edge is owned by exactly one endpoint, the level-1 one if the
    /// levels differ.
    Own,
    /// Free-neighbour indexes hold exactly the free neighbours.
    F,
    /// Mate map and adjacency are symmetric.
    Sym,
    /// No edge joins two free vertices.
    Max,
}

impl InvariantId {
    pub fn as_str(self) -> &'static str {
        match self {
            InvariantId::I1a => "1a",
            InvariantId::I1b => "1b",
            InvariantId::I2 => "2",
            InvariantId::I3 => "3",
            InvariantId::I4 => "4",
            InvariantId::I5 => "5",
            InvariantId::Own => "OWN",
            InvariantId::F => "F",
            InvariantId::Sym => "SYM",
            InvariantId::Max => "MAX",
        }
    }
}

impl fmt::Display for InvariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Subject {
    Vertex(VertexId),
    Edge(VertexId, VertexId),
    Path([VertexId; 4]),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Vertex(v) => write!(f, "vertex {v}"),
            Subject::Edge(u, v) => write!(f, "edge ({u},{v})"),
            Subject::Path([u, v, y, z]) => write!(f, "path {u}-{v}-{y}-{z}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub invariant: InvariantId,
    pub subject: Subject,
    pub description: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, id: InvariantId) -> bool {
        self.violations.iter().any(|v| v.invariant == id)
    }

    fn push(&mut self, invariant: InvariantId, subject: Subject, description: impl Into<String>) {
        self.violations.push(Violation {
            invariant,
            subject,
            description: description.into(),
        });
    }
}

/// One line per violation: `<id> <subject>: <description>`.
impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{} {}: {}", v.invariant, v.subject, v.description)?;
        }
        Ok(())
    }
}

pub fn check_invariants(state: &State) -> ViolationReport {
    use InvariantId::*;

    let mut report = ViolationReport::default();
    let n = state.n();
    let t = state.threshold();
    let adj: Vec<Vec<VertexId>> = state.vertices().map(|v| state.neighbors(v).collect()).collect();
    let mate: Vec<Option<VertexId>> = state.vertices().map(|v| state.mate(v)).collect();
    let free = |v: VertexId| mate[v.index()].is_none();

    for u in state.vertices() {
        for &w in &adj[u.index()] {
            if w == u {
                report.push(Sym, Subject::Vertex(u), "self-loop in adjacency");
            } else if !adj[w.index()].contains(&u) {
                report.push(Sym, Subject::Edge(u, w), "adjacency is not symmetric");
            }
        }
        if let Some(m) = mate[u.index()] {
            if m == u || m.index() >= n {
                report.push(Sym, Subject::Vertex(u), format!("invalid mate {m}"));
                continue;
            }
            if mate[m.index()] != Some(u) {
                report.push(Sym, Subject::Edge(u, m), "mate map is not symmetric");
            }
            if !adj[u.index()].contains(&m) {
                report.push(Sym, Subject::Edge(u, m), "matched pair is not an edge");
            }
        }
    }

    for u in state.vertices() {
        let level = state.level(u);
        let owned = state.owned(u).len();
        let deg = adj[u.index()].len();
        match mate[u.index()] {
            None => {
                if level == Level::One {
                    report.push(I1a, Subject::Vertex(u), "free vertex at level 1");
                    report.push(I1b, Subject::Vertex(u), "free vertex is not at level 0");
                }
                if let Some(&w) = adj[u.index()].iter().find(|&&w| free(w)) {
                    report.push(I1b, Subject::Vertex(u), format!("free neighbour {w}"));
                }
            }
            Some(m) => {
                if level == Level::Zero && deg >= t {
                    report.push(I3, Subject::Vertex(u), format!("matched level-0 vertex has degree {deg}"));
                }
                if m.index() < n && state.level(m) != level {
                    report.push(I4, Subject::Edge(u, m), "mates at different levels");
                }
            }
        }
        if level == Level::Zero && owned >= t {
            report.push(I2, Subject::Vertex(u), format!("level-0 vertex owns {owned} edges"));
        }
    }

    for u in state.vertices() {
        for w in state.owned(u).iter() {
            if w.index() >= n || !adj[u.index()].contains(&w) {
                report.push(Own, Subject::Edge(u, w), "owned pair is not an edge");
            }
        }
        for &w in adj[u.index()].iter().filter(|&&w| u < w) {
            let by_u = state.owned(u).contains(w);
            let by_w = state.owned(w).contains(u);
            match (by_u, by_w) {
                (false, false) => report.push(Own, Subject::Edge(u, w), "edge has no owner"),
                (true, true) => report.push(Own, Subject::Edge(u, w), "edge owned by both endpoints"),
                _ => {
                    let owner = if by_u { u } else { w };
                    let other = if by_u { w } else { u };
                    if state.level(owner) == Level::Zero && state.level(other) == Level::One {
                        report.push(
                            Own,
                            Subject::Edge(u, w),
                            format!("owned by level-0 endpoint {owner} instead of level-1 endpoint {other}"),
                        );
                    }
                }
            }
        }
    }

    let index = state.free_index();
    let width = index.bucket_width();
    for v in state.vertices() {
        let mut expected: Vec<VertexId> = adj[v.index()].iter().copied().filter(|&w| free(w)).collect();
        let mut actual: Vec<VertexId> = index.members(v).collect();
        expected.sort_unstable();
        actual.sort_unstable();
        if expected != actual {
            report.push(
                F,
                Subject::Vertex(v),
                format!("index holds {actual:?}, free neighbours are {expected:?}"),
            );
        }
        let mut buckets = vec![0u32; index.bucket_count()];
        for w in &actual {
            buckets[w.index() / width] += 1;
        }
        if index.bucket_counts(v) != buckets || index.total(v) != actual.len() {
            report.push(F, Subject::Vertex(v), "bucket counters disagree with members");
        }
    }

    if let Some((u, v, y, z)) = find_3_aug_path(&adj, &mate) {
        report.push(I5, Subject::Path([u, v, y, z]), "length-3 augmenting path");
    }

    for (u, w) in state.edges() {
        if free(u) && free(w) {
            report.push(Max, Subject::Edge(u, w), "both endpoints free");
        }
    }
    report
}

/// First length-3 augmenting path `u - v - y - z` in ascending
/// `(v, y, u, z)` order, where `(v, y)` is matched and `u != z` are free.
pub fn find_3_aug_path(
    adj: &[Vec<VertexId>],
    mate: &[Option<VertexId>],
) -> Option<(VertexId, VertexId, VertexId, VertexId)> {
    let free_nbrs = |x: VertexId| -> Vec<VertexId> {
        let mut out: Vec<VertexId> = adj[x.index()].iter().copied().filter(|w| mate[w.index()].is_none()).collect();
        out.sort_unstable();
        out.truncate(2);
        out
    };
    for (i, m) in mate.iter().enumerate() {
        let v = VertexId(i as u32);
        let Some(y) = *m else { continue };
        let us = free_nbrs(v);
        let zs = free_nbrs(y);
        for &u in &us {
            if let Some(&z) = zs.iter().find(|&&z| z != u) {
                return Some((u, v, y, z));
            }
        }
    }
    None
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance with {vertices} vertices and {edges} edges exceeds the exact-search limit")]
    TooLarge { vertices: usize, edges: usize },
}

pub const ORACLE_MAX_VERTICES: usize = 20;
pub const ORACLE_MAX_EDGES: usize = 28;

pub fn fits_oracle(vertices: usize, edges: usize) -> bool {
    vertices <= ORACLE_MAX_VERTICES || edges <= ORACLE_MAX_EDGES
}

/// Exact maximum matching size by exhaustive search with memoisation over
/// the set of still-available vertices. The size guard counts only
/// vertices with at least one edge, so `n` is just an upper bound on ids.
pub fn brute_force_mcm(n: usize, edges: &[(VertexId, VertexId)]) -> Result<usize, OracleError> {
    debug_assert!(edges.iter().all(|&(a, b)| a.index() < n && b.index() < n));
    // Relabel the non-isolated vertices densely so they fit in a 64-bit mask.
    let mut ids: HashMap<VertexId, usize> = HashMap::new();
    for &(a, b) in edges {
        let next = ids.len();
        ids.entry(a).or_insert(next);
        let next = ids.len();
        ids.entry(b).or_insert(next);
    }
    let k = ids.len();
    if !fits_oracle(k, edges.len()) {
        return Err(OracleError::TooLarge {
            vertices: k,
            edges: edges.len(),
        });
    }
    let mut nbr = vec![0u64; k];
    for &(a, b) in edges {
        let (i, j) = (ids[&a], ids[&b]);
        nbr[i] |= 1 << j;
        nbr[j] |= 1 << i;
    }
    let all = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut memo = HashMap::new();
    Ok(mcm_rec(all, &nbr, &mut memo))
}

fn mcm_rec(avail: u64, nbr: &[u64], memo: &mut HashMap<u64, usize>) -> usize {
    // Lowest available vertex that still has an available neighbour.
    let mut rest = avail;
    let i = loop {
        if rest == 0 {
            return 0;
        }
        let i = rest.trailing_zeros() as usize;
        if nbr[i] & avail != 0 {
            break i;
        }
        rest &= rest - 1;
    };
    let avail = rest;
    if let Some(&r) = memo.get(&avail) {
        return r;
    }
    let without = avail & !(1 << i);
    let mut best = mcm_rec(without, nbr, memo);
    let mut cand = nbr[i] & without;
    while cand != 0 {
        let j = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        best = best.max(1 + mcm_rec(without & !(1 << j), nbr, memo));
    }
    memo.insert(avail, best);
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RatioCheck {
    pub maximum: usize,
    pub maintained: usize,
}

impl RatioCheck {
    /// `2 * maximum <= 3 * maintained`.
    pub fn within_three_halves(&self) -> bool {
        2 * self.maximum <= 3 * self.maintained
    }

    /// `maintained >= ceil(2 * maximum / 3)`.
    pub fn meets_two_thirds(&self) -> bool {
        self.maintained >= (2 * self.maximum).div_ceil(3)
    }
}

pub fn ratio(state: &State) -> Result<RatioCheck, OracleError> {
    let maximum = brute_force_mcm(state.n(), &state.edges())?;
    Ok(RatioCheck {
        maximum,
        maintained: state.matching().len(),
    })
}

/// True iff the maintained matching is within a factor 3/2 of maximum.
pub fn check_ratio(state: &State) -> Result<bool, OracleError> {
    Ok(ratio(state)?.within_three_halves())
}
