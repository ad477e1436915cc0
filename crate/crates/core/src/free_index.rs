//! Free-neighbour index `F(v)`.
//!
//! Each vertex keeps the set of its free neighbours together with a row of
//! bucket counters. Bucket `j` counts the members whose id lies in
//! `[j * width, (j + 1) * width)`, so `has_free` is a single comparison and
//! `get_free` scans at most `ceil(n / width)` counters followed by `width`
//! membership probes.
//!
//! Membership is stored as a hash set instead of a length-`n` boolean row per
//! vertex; the probe sequence inside a bucket is identical, but memory stays
//! proportional to the number of members plus the counter rows.

use std::collections::HashSet;

use crate::VertexId;

#[derive(Clone, Debug, Default)]
struct Row {
    members: HashSet<u32>,
    // Allocated on first insert.
    buckets: Vec<u32>,
}

/// The free-neighbour indexes of all vertices.
#[derive(Clone, Debug)]
pub struct FreeNeighborIndex {
    n: usize,
    width: usize,
    bucket_count: usize,
    rows: Vec<Row>,
}

impl FreeNeighborIndex {
    pub fn new(n: usize, width: usize) -> Self {
        assert!(width >= 1, "bucket width must be positive");
        let bucket_count = n.div_ceil(width).max(1);
        Self {
            n,
            width,
            bucket_count,
            rows: vec![Row::default(); n],
        }
    }

    pub fn bucket_width(&self) -> usize {
        self.width
    }

    pub fn bucket_count(&self) -> usize {
        self.bucket_count
    }

    /// Adds `member` to `F(owner)`. Returns `false` if it was already present.
    pub fn insert(&mut self, owner: VertexId, member: VertexId) -> bool {
        debug_assert!(member.index() < self.n);
        let bucket = member.index() / self.width;
        let bucket_count = self.bucket_count;
        let row = &mut self.rows[owner.index()];
        if !row.members.insert(member.0) {
            return false;
        }
        if row.buckets.is_empty() {
            row.buckets = vec![0; bucket_count];
        }
        row.buckets[bucket] += 1;
        true
    }

    /// Removes `member` from `F(owner)`. Returns `false` if it was absent.
    pub fn remove(&mut self, owner: VertexId, member: VertexId) -> bool {
        let row = &mut self.rows[owner.index()];
        if !row.members.remove(&member.0) {
            return false;
        }
        row.buckets[member.index() / self.width] -= 1;
        true
    }

    pub fn contains(&self, owner: VertexId, member: VertexId) -> bool {
        self.rows[owner.index()].members.contains(&member.0)
    }

    pub fn total(&self, owner: VertexId) -> usize {
        self.rows[owner.index()].members.len()
    }

    pub fn has_free(&self, owner: VertexId) -> bool {
        !self.rows[owner.index()].members.is_empty()
    }

    /// Lowest-id member of the lowest non-empty bucket, i.e. the minimum of
    /// `F(owner)`. The second element is the number of counter and
    /// membership probes spent.
    pub fn get_free(&self, owner: VertexId) -> (Option<VertexId>, u64) {
        let row = &self.rows[owner.index()];
        if row.members.is_empty() {
            return (None, 1);
        }
        let mut probes = 0u64;
        for (j, &count) in row.buckets.iter().enumerate() {
            probes += 1;
            if count == 0 {
                continue;
            }
            let lo = j * self.width;
            let hi = ((j + 1) * self.width).min(self.n);
            for id in lo..hi {
                probes += 1;
                if row.members.contains(&(id as u32)) {
                    return (Some(VertexId(id as u32)), probes);
                }
            }
            unreachable!("bucket {j} of vertex {owner} counts {count} members but none found");
        }
        unreachable!("vertex {owner} has free neighbours but all buckets are zero");
    }

    pub fn members(&self, owner: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.rows[owner.index()].members.iter().map(|&id| VertexId(id))
    }

    /// The counter row of `owner`; all zeros if nothing was ever inserted.
    pub fn bucket_counts(&self, owner: VertexId) -> Vec<u32> {
        let row = &self.rows[owner.index()];
        if row.buckets.is_empty() {
            vec![0; self.bucket_count]
        } else {
            row.buckets.clone()
        }
    }
}
