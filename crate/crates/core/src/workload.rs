//! Update sequences: generation, teardown closure and the text format.
//!
//! The file format is line oriented:
//!
//! ```text
//! n=4
//! # seed=7 gen=path-zipper
//! + 1 2
//! - 1 2
//! ```
//!
//! The first line gives the vertex count. Lines starting with `#` are
//! comments; a `# seed=<int> gen=<name>` comment records provenance. Every
//! other non-empty line is one update.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::VertexId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Insert,
    Delete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UpdateOp {
    pub kind: OpKind,
    pub u: VertexId,
    pub v: VertexId,
}

impl UpdateOp {
    pub fn insert(u: u32, v: u32) -> Self {
        Self {
            kind: OpKind::Insert,
            u: VertexId(u),
            v: VertexId(v),
        }
    }

    pub fn delete(u: u32, v: u32) -> Self {
        Self {
            kind: OpKind::Delete,
            u: VertexId(u),
            v: VertexId(v),
        }
    }
}

impl fmt::Display for UpdateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.kind {
            OpKind::Insert => '+',
            OpKind::Delete => '-',
        };
        write!(f, "{sign} {} {}", self.u, self.v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateSequence {
    pub n: usize,
    pub generator: Option<String>,
    pub seed: Option<u64>,
    pub ops: Vec<UpdateOp>,
}

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("p_insert must lie strictly between 0 and 1, got {0}")]
    BadProbability(f64),
    #[error("need at least 2 vertices to generate updates, got {0}")]
    TooFewVertices(usize),
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("op {index} ({op}): {reason}")]
    NotReplayable { index: usize, op: UpdateOp, reason: String },
}

/// Normalised edge key with the smaller id first.
fn key(u: VertexId, v: VertexId) -> (u32, u32) {
    if u < v {
        (u.0, v.0)
    } else {
        (v.0, u.0)
    }
}

/// Edge set that replays a sequence and rejects invalid updates.
#[derive(Clone, Debug, Default)]
pub struct ShadowGraph {
    n: usize,
    edges: BTreeSet<(u32, u32)>,
}

impl ShadowGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn apply(&mut self, op: &UpdateOp) -> Result<(), String> {
        if op.u.index() >= self.n || op.v.index() >= self.n {
            return Err(format!("vertex out of range for n = {}", self.n));
        }
        if op.u == op.v {
            return Err("self-loop".into());
        }
        let k = key(op.u, op.v);
        match op.kind {
            OpKind::Insert if !self.edges.insert(k) => Err("edge already present".into()),
            OpKind::Delete if !self.edges.remove(&k) => Err("edge not present".into()),
            _ => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Present edges in ascending `(u, v)` order with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.edges.iter().copied()
    }
}

impl UpdateSequence {
    pub fn new(n: usize, ops: Vec<UpdateOp>) -> Self {
        Self {
            n,
            generator: None,
            seed: None,
            ops,
        }
    }

    /// Replays the sequence on an empty graph and returns the final edge set.
    pub fn validate(&self) -> Result<ShadowGraph, WorkloadError> {
        let mut shadow = ShadowGraph::new(self.n);
        for (index, op) in self.ops.iter().enumerate() {
            shadow.apply(op).map_err(|reason| WorkloadError::NotReplayable {
                index,
                op: *op,
                reason,
            })?;
        }
        Ok(shadow)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Present edges with O(1) insert, remove and uniform sampling.
#[derive(Default)]
struct EdgePool {
    pos: HashMap<(u32, u32), usize>,
    items: Vec<(u32, u32)>,
}

impl EdgePool {
    fn contains(&self, e: (u32, u32)) -> bool {
        self.pos.contains_key(&e)
    }

    fn insert(&mut self, e: (u32, u32)) {
        self.pos.insert(e, self.items.len());
        self.items.push(e);
    }

    fn remove_at(&mut self, i: usize) -> (u32, u32) {
        let e = self.items.swap_remove(i);
        self.pos.remove(&e);
        if let Some(&moved) = self.items.get(i) {
            self.pos.insert(moved, i);
        }
        e
    }
}

/// Random absent pair, or `None` if the graph is complete. Rejection
/// sampling first, then a deterministic scan for dense graphs.
fn random_absent_pair(rng: &mut ChaCha8Rng, n: u32, pool: &EdgePool) -> Option<(u32, u32)> {
    let max_edges = n as u64 * (n as u64 - 1) / 2;
    if pool.items.len() as u64 >= max_edges {
        return None;
    }
    for _ in 0..64 {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !pool.contains(key(VertexId(a), VertexId(b))) {
            return Some(key(VertexId(a), VertexId(b)));
        }
    }
    // Dense graph: pick uniformly among the absent pairs by rank.
    let absent = max_edges - pool.items.len() as u64;
    let mut rank = rng.gen_range(0..absent);
    for a in 0..n {
        for b in a + 1..n {
            if !pool.contains((a, b)) {
                if rank == 0 {
                    return Some((a, b));
                }
                rank -= 1;
            }
        }
    }
    unreachable!("absent pair count was positive")
}

/// `t` random updates on `n` vertices: an insert of a uniformly random
/// absent pair with probability `p_insert`, otherwise a delete of a
/// uniformly random present edge. Falls back to the other kind when the
/// graph is complete or empty.
pub fn gen_random(n: usize, t: usize, p_insert: f64, seed: u64) -> Result<UpdateSequence, WorkloadError> {
    if !(p_insert > 0.0 && p_insert < 1.0) {
        return Err(WorkloadError::BadProbability(p_insert));
    }
    if t > 0 && n < 2 {
        return Err(WorkloadError::TooFewVertices(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = EdgePool::default();
    let mut ops = Vec::with_capacity(t);
    for _ in 0..t {
        let want_insert = rng.gen_bool(p_insert);
        let pair = if want_insert || pool.items.is_empty() {
            random_absent_pair(&mut rng, n as u32, &pool)
        } else {
            None
        };
        match pair {
            Some((a, b)) => {
                pool.insert((a, b));
                ops.push(UpdateOp::insert(a, b));
            }
            None => {
                let i = rng.gen_range(0..pool.items.len());
                let (a, b) = pool.remove_at(i);
                ops.push(UpdateOp::delete(a, b));
            }
        }
    }
    Ok(UpdateSequence {
        n,
        generator: Some("random".into()),
        seed: Some(seed),
        ops,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    StarChurn,
    CliqueBuildTeardown,
    PathZipper,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::StarChurn => "star-churn",
            Pattern::CliqueBuildTeardown => "clique-build-teardown",
            Pattern::PathZipper => "path-zipper",
        }
    }
}

impl FromStr for Pattern {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "star-churn" => Ok(Pattern::StarChurn),
            "clique-build-teardown" => Ok(Pattern::CliqueBuildTeardown),
            "path-zipper" => Ok(Pattern::PathZipper),
            other => Err(WorkloadError::UnknownPattern(other.to_string())),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Structured stress sequences.
///
/// * `star-churn`: star centred at 0 over every other vertex, spokes written
///   leaf first, then `2n` rounds each deleting and reinserting a random
///   spoke.
/// * `clique-build-teardown`: every pair inserted, then every pair deleted,
///   both in ascending order.
/// * `path-zipper`: a path grown four vertices at a time so that each block
///   first forms a length-3 augmenting path `b, b+1, b+2, b+3`, followed by
///   random deletes and reinserts of path edges.
pub fn gen_named(pattern: Pattern, n: usize, seed: u64) -> Result<UpdateSequence, WorkloadError> {
    if n < 2 {
        return Err(WorkloadError::TooFewVertices(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n32 = n as u32;
    let mut ops = Vec::new();
    match pattern {
        Pattern::StarChurn => {
            // Leaf first: on equal list sizes the first endpoint takes
            // ownership, so the centre gains degree without owning edges.
            for leaf in 1..n32 {
                ops.push(UpdateOp::insert(leaf, 0));
            }
            for _ in 0..2 * n {
                let leaf = rng.gen_range(1..n32);
                ops.push(UpdateOp::delete(leaf, 0));
                ops.push(UpdateOp::insert(leaf, 0));
            }
        }
        Pattern::CliqueBuildTeardown => {
            let pairs: Vec<(u32, u32)> = (0..n32).flat_map(|a| (a + 1..n32).map(move |b| (a, b))).collect();
            ops.extend(pairs.iter().map(|&(a, b)| UpdateOp::insert(a, b)));
            ops.extend(pairs.iter().map(|&(a, b)| UpdateOp::delete(a, b)));
        }
        Pattern::PathZipper => {
            let mut path = Vec::new();
            let mut b = 0u32;
            while b + 3 < n32 {
                if b > 0 {
                    path.push((b - 1, b));
                }
                path.extend([(b + 1, b + 2), (b, b + 1), (b + 2, b + 3)]);
                b += 4;
            }
            while b < n32 {
                if b > 0 {
                    path.push((b - 1, b));
                }
                b += 1;
            }
            ops.extend(path.iter().map(|&(a, b)| UpdateOp::insert(a, b)));
            if !path.is_empty() {
                for _ in 0..n {
                    let &(a, b) = &path[rng.gen_range(0..path.len())];
                    ops.push(UpdateOp::delete(a, b));
                    ops.push(UpdateOp::insert(a, b));
                }
            }
        }
    }
    Ok(UpdateSequence {
        n,
        generator: Some(pattern.name().into()),
        seed: Some(seed),
        ops,
    })
}

/// Appends deletes of every edge still present at the end of `seq`, in
/// ascending `(u, v)` order.
pub fn extend_with_teardown(seq: &UpdateSequence) -> Result<UpdateSequence, WorkloadError> {
    let shadow = seq.validate()?;
    let mut out = seq.clone();
    out.ops.extend(shadow.edges().map(|(a, b)| UpdateOp::delete(a, b)));
    Ok(out)
}

pub fn serialize(seq: &UpdateSequence) -> String {
    let mut out = String::new();
    writeln!(out, "n={}", seq.n).unwrap();
    if seq.seed.is_some() || seq.generator.is_some() {
        let mut parts = Vec::new();
        if let Some(seed) = seq.seed {
            parts.push(format!("seed={seed}"));
        }
        if let Some(generator) = &seq.generator {
            parts.push(format!("gen={generator}"));
        }
        writeln!(out, "# {}", parts.join(" ")).unwrap();
    }
    for op in &seq.ops {
        writeln!(out, "{op}").unwrap();
    }
    out
}

/// Parses and validates a sequence file. Errors carry 1-based line numbers.
pub fn parse(text: &str) -> Result<UpdateSequence, WorkloadError> {
    let err = |line: usize, reason: String| WorkloadError::Parse { line, reason };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let n = loop {
        let Some((no, line)) = lines.next() else {
            return Err(err(1, "missing `n=<int>` header".into()));
        };
        if line.is_empty() {
            continue;
        }
        let value = line
            .strip_prefix("n=")
            .ok_or_else(|| err(no, format!("expected `n=<int>`, found `{line}`")))?;
        break value
            .trim()
            .parse::<usize>()
            .map_err(|e| err(no, format!("bad vertex count: {e}")))?;
    };
    let mut seq = UpdateSequence::new(n, Vec::new());
    let mut shadow = ShadowGraph::new(n);
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for field in comment.split_whitespace() {
                if let Some(s) = field.strip_prefix("seed=") {
                    seq.seed = Some(s.parse().map_err(|e| err(no, format!("bad seed: {e}")))?);
                } else if let Some(g) = field.strip_prefix("gen=") {
                    seq.generator = Some(g.to_string());
                }
            }
            continue;
        }
        let mut fields = line.split_whitespace();
        let kind = match fields.next() {
            Some("+") => OpKind::Insert,
            Some("-") => OpKind::Delete,
            Some(other) => return Err(err(no, format!("expected `+` or `-`, found `{other}`"))),
            None => unreachable!("line is non-empty"),
        };
        let mut vertex = || -> Result<VertexId, WorkloadError> {
            let field = fields.next().ok_or_else(|| err(no, "expected two vertex ids".into()))?;
            let id: u32 = field.parse().map_err(|e| err(no, format!("bad vertex id `{field}`: {e}")))?;
            Ok(VertexId(id))
        };
        let u = vertex()?;
        let v = vertex()?;
        if fields.next().is_some() {
            return Err(err(no, "trailing fields".into()));
        }
        let op = UpdateOp { kind, u, v };
        shadow.apply(&op).map_err(|reason| err(no, reason))?;
        seq.ops.push(op);
    }
    Ok(seq)
}
