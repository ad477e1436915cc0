//! Epoch accounting and run statistics.
//!
//! An epoch is the lifetime of one matched edge. Epochs are opened and
//! closed from the engine's [`MatchEvent`] stream; an epoch's level is the
//! level its edge had when the update that created it finished (or when it
//! was unmatched, if that happened first). A matched edge raised from level
//! 0 to level 1 in a later update ends its level-0 epoch and starts a
//! deterministic level-1 one.
//!
//! Epoch-sets group each random level-1 epoch (the representative) with
//! the deterministic level-1 epochs created after it in the same update.
//!
//! # Export schemas
//!
//! JSON: an object with `n`, `threshold`, `seed`, `generator`, `totals`,
//! `procedures` (call counts by name), `epochs`, `updates` (one row per
//! update) and `timing`. Wall-clock data appears only under `timing`.
//!
//! CSV: `# key=value` comment lines for the metadata and totals (timing
//! totals prefixed `timing.`), then the header
//! `index,op,u,v,calls,matching_size,edge_count,work,wall_ns` and one row
//! per update. `wall_ns` is always the last column.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{EngineError, MatchEvent, Procedure, ProcedureTrace};
use crate::workload::{OpKind, UpdateOp};
use crate::{Config, Level, State, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("edge ({0}, {1}) unmatched without an open epoch")]
    NoOpenEpoch(VertexId, VertexId),
    #[error("edge ({0}, {1}) matched while its epoch is still open")]
    AlreadyOpen(VertexId, VertexId),
    #[error("epoch-set {0} has a live representative")]
    LiveEpoch(usize),
    #[error("no epoch-set with id {0}")]
    UnknownSet(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpochClass {
    /// Created by a uniform draw from an ownership list.
    Random,
    Deterministic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EpochRecord {
    pub u: VertexId,
    pub v: VertexId,
    pub created: usize,
    pub terminated: Option<usize>,
    /// `None` until the creating update has finished.
    pub level: Option<Level>,
    pub class: EpochClass,
    pub cause: Option<Procedure>,
    /// Ownership list sampled for a random epoch.
    pub owner: Option<VertexId>,
    pub owner_init_size: usize,
    /// Edges of the sampled list deleted from the graph while the epoch
    /// was live.
    pub deletions_from_init: usize,
    /// The epoch ended because its own edge was deleted.
    pub ended_by_deletion: bool,
    pub set: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetClass {
    Good,
    Bad,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EpochSetRecord {
    pub representative: usize,
    /// All members including the representative.
    pub members: Vec<usize>,
}

fn key(u: VertexId, v: VertexId) -> (u32, u32) {
    if u < v {
        (u.0, v.0)
    } else {
        (v.0, u.0)
    }
}

/// Bad iff fewer than `ceil(init / 3)` of the sampled edges were deleted
/// before the representative epoch ended.
pub fn classify_counts(owner_init_size: usize, deletions_from_init: usize) -> SetClass {
    if deletions_from_init < owner_init_size.div_ceil(3) {
        SetClass::Bad
    } else {
        SetClass::Good
    }
}

#[derive(Clone, Debug, Default)]
pub struct EpochTracker {
    pub epochs: Vec<EpochRecord>,
    pub sets: Vec<EpochSetRecord>,
    live: HashMap<(u32, u32), usize>,
    // Sampled edge -> random epochs whose sampled list contained it.
    watchers: HashMap<(u32, u32), Vec<usize>>,
    pending: Vec<usize>,
    current_set: Option<usize>,
    update: usize,
    deleted: Option<(u32, u32)>,
    /// Level-1 epochs created by a deterministic raise or deterministic
    /// path fix with no random epoch created earlier in the same update.
    pub unpreceded_deterministic: usize,
}

impl EpochTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    pub fn begin_update(&mut self, update_index: usize) {
        self.update = update_index;
        self.current_set = None;
        self.deleted = None;
    }

    pub fn on_match_set(
        &mut self,
        u: VertexId,
        v: VertexId,
        cause: Option<Procedure>,
        random: Option<(VertexId, &[VertexId])>,
    ) -> Result<usize, MetricsError> {
        let k = key(u, v);
        if self.live.contains_key(&k) {
            return Err(MetricsError::AlreadyOpen(u, v));
        }
        let id = self.epochs.len();
        let (a, b) = (VertexId(k.0), VertexId(k.1));
        let mut record = EpochRecord {
            u: a,
            v: b,
            created: self.update,
            terminated: None,
            level: None,
            class: EpochClass::Deterministic,
            cause,
            owner: None,
            owner_init_size: 0,
            deletions_from_init: 0,
            ended_by_deletion: false,
            set: self.current_set,
        };
        if let Some((owner, init)) = random {
            record.class = EpochClass::Random;
            record.level = Some(Level::One);
            record.owner = Some(owner);
            record.owner_init_size = init.len();
            for &w in init {
                self.watchers.entry(key(owner, w)).or_default().push(id);
            }
            let set = self.sets.len();
            self.sets.push(EpochSetRecord {
                representative: id,
                members: vec![id],
            });
            record.set = Some(set);
            self.current_set = Some(set);
        }
        self.epochs.push(record);
        self.live.insert(k, id);
        self.pending.push(id);
        Ok(id)
    }

    pub fn on_match_unset(&mut self, u: VertexId, v: VertexId, level: Level) -> Result<usize, MetricsError> {
        let k = key(u, v);
        let id = self.live.remove(&k).ok_or(MetricsError::NoOpenEpoch(u, v))?;
        let record = &mut self.epochs[id];
        record.terminated = Some(self.update);
        record.ended_by_deletion = self.deleted == Some(k);
        record.level.get_or_insert(level);
        Ok(id)
    }

    pub fn on_edge_deleted(&mut self, u: VertexId, v: VertexId) {
        self.deleted = Some(key(u, v));
        if let Some(ids) = self.watchers.remove(&key(u, v)) {
            for id in ids {
                if self.epochs[id].terminated.is_none() {
                    self.epochs[id].deletions_from_init += 1;
                }
            }
        }
    }

    /// A matched edge moved to level 1 without being rematched.
    pub fn on_raised(&mut self, u: VertexId, v: VertexId, cause: Procedure) -> Result<(), MetricsError> {
        let id = *self.live.get(&key(u, v)).ok_or(MetricsError::NoOpenEpoch(u, v))?;
        if self.epochs[id].created == self.update {
            // Level is resolved when the update finishes.
            return Ok(());
        }
        self.on_match_unset(u, v, Level::Zero)?;
        self.on_match_set(u, v, Some(cause), None)?;
        Ok(())
    }

    pub fn apply_events(&mut self, events: &[MatchEvent]) -> Result<(), MetricsError> {
        for event in events {
            match event {
                MatchEvent::EdgeDeleted { u, v } => self.on_edge_deleted(*u, *v),
                MatchEvent::Matched { u, v, cause, random } => {
                    let random = random.as_ref().map(|r| (r.owner, r.init.as_slice()));
                    self.on_match_set(*u, *v, *cause, random)?;
                }
                MatchEvent::Unmatched { u, v, level } => {
                    self.on_match_unset(*u, *v, *level)?;
                }
                MatchEvent::Raised { u, v, cause } => self.on_raised(*u, *v, *cause)?,
            }
        }
        Ok(())
    }

    /// Resolves the levels of epochs created in this update from `state`
    /// and assigns deterministic level-1 epochs to the open epoch-set.
    pub fn end_update(&mut self, state: &State) {
        for id in std::mem::take(&mut self.pending) {
            let record = &mut self.epochs[id];
            if record.level.is_none() {
                record.level = Some(state.level(record.u));
            }
            if record.class != EpochClass::Deterministic || record.level != Some(Level::One) {
                if record.class == EpochClass::Deterministic {
                    record.set = None;
                }
                continue;
            }
            let expensive = matches!(
                record.cause,
                Some(Procedure::DeterministicRaiseLevelTo1 | Procedure::Fix3AugPathD)
            );
            match record.set {
                Some(set) => self.sets[set].members.push(id),
                None if expensive => self.unpreceded_deterministic += 1,
                None => {}
            }
        }
    }

    pub fn classify_epoch_set(&self, set: usize) -> Result<SetClass, MetricsError> {
        let rec = self.sets.get(set).ok_or(MetricsError::UnknownSet(set))?;
        let rep = &self.epochs[rec.representative];
        if rep.terminated.is_none() {
            return Err(MetricsError::LiveEpoch(set));
        }
        Ok(classify_counts(rep.owner_init_size, rep.deletions_from_init))
    }

    pub fn summary(&self) -> EpochSummary {
        let mut s = EpochSummary::default();
        for e in &self.epochs {
            match (e.level, e.class) {
                (Some(Level::One), EpochClass::Random) => s.level1_random += 1,
                (Some(Level::One), EpochClass::Deterministic) => s.level1_deterministic += 1,
                _ => s.level0 += 1,
            }
        }
        s.live = self.live.len();
        s.sets = self.sets.len();
        for (i, set) in self.sets.iter().enumerate() {
            s.max_set_size = s.max_set_size.max(set.members.len());
            let class = self.classify_epoch_set(i);
            match class {
                Ok(SetClass::Good) => s.good_sets += 1,
                Ok(SetClass::Bad) => s.bad_sets += 1,
                Err(_) => s.open_sets += 1,
            }
            if self.epochs[set.representative].ended_by_deletion {
                s.deletion_closed_sets += 1;
                if class == Ok(SetClass::Bad) {
                    s.deletion_closed_bad_sets += 1;
                }
            }
        }
        s.unpreceded_deterministic = self.unpreceded_deterministic;
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EpochSummary {
    pub level0: usize,
    pub level1_random: usize,
    pub level1_deterministic: usize,
    pub live: usize,
    pub sets: usize,
    pub good_sets: usize,
    pub bad_sets: usize,
    /// Sets whose representative is still live.
    pub open_sets: usize,
    /// Closed sets whose representative ended with the deletion of its
    /// own edge, and how many of those are bad.
    pub deletion_closed_sets: usize,
    pub deletion_closed_bad_sets: usize,
    pub max_set_size: usize,
    pub unpreceded_deterministic: usize,
}

impl EpochSummary {
    pub fn bad_fraction(&self) -> Option<f64> {
        let closed = self.good_sets + self.bad_sets;
        (closed > 0).then(|| self.bad_sets as f64 / closed as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UpdateRow {
    pub index: usize,
    pub op: char,
    pub u: VertexId,
    pub v: VertexId,
    pub calls: usize,
    pub matching_size: usize,
    pub edge_count: usize,
    /// Elementary steps spent in this update.
    pub work: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub updates: usize,
    pub final_matching_size: usize,
    pub final_edge_count: usize,
    pub max_calls: usize,
    pub total_calls: usize,
    pub total_work: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunStats {
    pub n: usize,
    pub threshold: usize,
    pub seed: u64,
    pub generator: Option<String>,
    pub totals: Totals,
    pub procedures: Vec<(Procedure, usize)>,
    pub epochs: EpochSummary,
    pub updates: Vec<UpdateRow>,
    pub wall_ns: Vec<u64>,
}

impl RunStats {
    pub fn total_wall_ns(&self) -> u64 {
        self.wall_ns.iter().sum()
    }

    pub fn amortized_wall_ns(&self) -> f64 {
        if self.wall_ns.is_empty() {
            0.0
        } else {
            self.total_wall_ns() as f64 / self.wall_ns.len() as f64
        }
    }

    pub fn amortized_work(&self) -> f64 {
        if self.totals.updates == 0 {
            0.0
        } else {
            self.totals.total_work as f64 / self.totals.updates as f64
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("update {index} ({op}): {source}")]
    Engine {
        index: usize,
        op: UpdateOp,
        source: EngineError,
    },
    #[error("update {index}: {source}")]
    Metrics { index: usize, source: MetricsError },
}

/// Drives a [`State`] through updates while collecting statistics.
pub struct Recorder {
    pub state: State,
    pub tracker: EpochTracker,
    generator: Option<String>,
    rows: Vec<UpdateRow>,
    wall_ns: Vec<u64>,
    histogram: [usize; 8],
}

impl Recorder {
    pub fn new(config: Config) -> Result<Self, crate::StateError> {
        Ok(Self {
            state: State::new(config)?,
            tracker: EpochTracker::new(),
            generator: None,
            rows: Vec::new(),
            wall_ns: Vec::new(),
            histogram: [0; 8],
        })
    }

    pub fn with_generator(mut self, generator: Option<String>) -> Self {
        self.generator = generator;
        self
    }

    pub fn updates(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&mut self, op: &UpdateOp) -> Result<&ProcedureTrace, RunError> {
        let index = self.rows.len();
        let work_before = self.state.work();
        let start = Instant::now();
        let result = match op.kind {
            OpKind::Insert => self.state.insert_edge(op.u, op.v),
            OpKind::Delete => self.state.delete_edge(op.u, op.v),
        };
        let elapsed = start.elapsed().as_nanos() as u64;
        let trace = result.map_err(|source| RunError::Engine { index, op: *op, source })?;

        self.tracker.begin_update(index);
        let events = self.state.take_events();
        self.tracker
            .apply_events(&events)
            .map_err(|source| RunError::Metrics { index, source })?;
        self.tracker.end_update(&self.state);

        for call in &trace.calls {
            self.histogram[call.procedure.index()] += 1;
        }
        self.rows.push(UpdateRow {
            index,
            op: match op.kind {
                OpKind::Insert => '+',
                OpKind::Delete => '-',
            },
            u: op.u,
            v: op.v,
            calls: trace.len(),
            matching_size: self.state.matching_size(),
            edge_count: self.state.edge_count(),
            work: self.state.work() - work_before,
        });
        self.wall_ns.push(elapsed);
        Ok(self.state.last_trace())
    }

    pub fn finish(&self) -> RunStats {
        let config = self.state.config();
        let totals = Totals {
            updates: self.rows.len(),
            final_matching_size: self.state.matching_size(),
            final_edge_count: self.state.edge_count(),
            max_calls: self.rows.iter().map(|r| r.calls).max().unwrap_or(0),
            total_calls: self.rows.iter().map(|r| r.calls).sum(),
            total_work: self.rows.iter().map(|r| r.work).sum(),
        };
        RunStats {
            n: config.n,
            threshold: config.threshold,
            seed: config.seed,
            generator: self.generator.clone(),
            totals,
            procedures: Procedure::ALL.iter().map(|&p| (p, self.histogram[p.index()])).collect(),
            epochs: self.tracker.summary(),
            updates: self.rows.clone(),
            wall_ns: self.wall_ns.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub fn export(stats: &RunStats, format: Format) -> String {
    match format {
        Format::Json => export_json(stats),
        Format::Csv => export_csv(stats),
    }
}

fn export_json(stats: &RunStats) -> String {
    let procedures: serde_json::Map<String, serde_json::Value> = stats
        .procedures
        .iter()
        .map(|(p, c)| (p.name().to_string(), (*c).into()))
        .collect();
    let doc = serde_json::json!({
        "n": stats.n,
        "threshold": stats.threshold,
        "seed": stats.seed,
        "generator": stats.generator,
        "totals": stats.totals,
        "amortized_work": stats.amortized_work(),
        "procedures": procedures,
        "epochs": stats.epochs,
        "bad_set_fraction": stats.epochs.bad_fraction(),
        "updates": stats.updates,
        "timing": {
            "total_wall_ns": stats.total_wall_ns(),
            "amortized_wall_ns": stats.amortized_wall_ns(),
            "per_update_wall_ns": stats.wall_ns,
        },
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("stats serialize");
    out.push('\n');
    out
}

fn export_csv(stats: &RunStats) -> String {
    let mut out = String::new();
    let mut meta = |k: &str, v: String| writeln!(out, "# {k}={v}").unwrap();
    meta("n", stats.n.to_string());
    meta("threshold", stats.threshold.to_string());
    meta("seed", stats.seed.to_string());
    meta("generator", stats.generator.clone().unwrap_or_default());
    let t = &stats.totals;
    meta("updates", t.updates.to_string());
    meta("final_matching_size", t.final_matching_size.to_string());
    meta("final_edge_count", t.final_edge_count.to_string());
    meta("max_calls", t.max_calls.to_string());
    meta("total_calls", t.total_calls.to_string());
    meta("total_work", t.total_work.to_string());
    let e = &stats.epochs;
    meta("epochs.level0", e.level0.to_string());
    meta("epochs.level1_random", e.level1_random.to_string());
    meta("epochs.level1_deterministic", e.level1_deterministic.to_string());
    meta("epochs.good_sets", e.good_sets.to_string());
    meta("epochs.bad_sets", e.bad_sets.to_string());
    meta("epochs.open_sets", e.open_sets.to_string());
    meta("epochs.deletion_closed_sets", e.deletion_closed_sets.to_string());
    meta("epochs.deletion_closed_bad_sets", e.deletion_closed_bad_sets.to_string());
    meta("timing.total_wall_ns", stats.total_wall_ns().to_string());
    writeln!(out, "index,op,u,v,calls,matching_size,edge_count,work,wall_ns").unwrap();
    for (row, ns) in stats.updates.iter().zip(&stats.wall_ns) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.index, row.op, row.u, row.v, row.calls, row.matching_size, row.edge_count, row.work, ns
        )
        .unwrap();
    }
    out
}
