use std::collections::HashMap;

use rand::Rng;

use crate::VertexId;

/// The edges owned by one vertex, keyed by the other endpoint.
///
/// A position map next to a dense array gives O(1) insert, remove and
/// membership; the dense array makes uniform sampling a single index draw.
/// Removal swaps the victim with the last element.
#[derive(Clone, Debug, Default)]
pub struct OwnershipList {
    pos: HashMap<u32, u32>,
    items: Vec<VertexId>,
}

impl OwnershipList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, other: VertexId) -> bool {
        self.pos.contains_key(&other.0)
    }

    pub fn insert(&mut self, other: VertexId) -> bool {
        if self.pos.contains_key(&other.0) {
            return false;
        }
        self.pos.insert(other.0, self.items.len() as u32);
        self.items.push(other);
        true
    }

    pub fn remove(&mut self, other: VertexId) -> bool {
        let Some(index) = self.pos.remove(&other.0) else {
            return false;
        };
        let index = index as usize;
        self.items.swap_remove(index);
        if let Some(moved) = self.items.get(index) {
            self.pos.insert(moved.0, index as u32);
        }
        true
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<VertexId> {
        if self.items.is_empty() {
            None
        } else {
            Some(self.items[rng.gen_range(0..self.items.len())])
        }
    }

    /// Other endpoints in dense-array order.
    pub fn as_slice(&self) -> &[VertexId] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.items.iter().copied()
    }
}
