//! Array-embedded binary min-heap of (expiration, key) pairs, the
//! supporting priority queue paired with the non-treap indexes for eager
//! expiration. Only finite expirations ever enter the heap.
//!
//! Deleting from the middle of a binary heap is prohibitively expensive,
//! so explicit removals tombstone their entry instead; stale entries are
//! skipped when they surface and the whole heap is rebuilt once half of
//! it is dead.

use std::collections::HashMap;

/// (expiration ms, key); ordered by expiration, key breaking ties.
type Entry = (u64, u64);

#[derive(Default)]
pub struct ExpiryHeap {
    entries: Vec<Entry>,
    dead: HashMap<Entry, u32>,
    dead_count: usize,
}

impl ExpiryHeap {
    pub fn new() -> ExpiryHeap {
        ExpiryHeap::default()
    }

    /// Total entries physically in the array, tombstoned ones included.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live_len() == 0
    }

    /// Entries that are still meaningful.
    pub fn live_len(&self) -> usize {
        self.entries.len() - self.dead_count
    }

    pub fn tombstones(&self) -> usize {
        self.dead_count
    }

    pub fn push(&mut self, exp_ms: u64, key: u64) {
        self.entries.push((exp_ms, key));
        self.sift_up(self.entries.len() - 1);
    }

    /// Mark an entry dead without touching the array. Rebuilds when the
    /// tombstone ratio reaches one half.
    pub fn invalidate(&mut self, exp_ms: u64, key: u64) {
        *self.dead.entry((exp_ms, key)).or_insert(0) += 1;
        self.dead_count += 1;
        if self.dead_count * 2 > self.entries.len() {
            self.rebuild();
        }
    }

    /// Smallest live entry, purging dead ones off the top.
    pub fn peek_min(&mut self) -> Option<Entry> {
        self.purge_dead_top();
        self.entries.first().copied()
    }

    /// Pop the smallest live entry.
    pub fn pop_min(&mut self) -> Option<Entry> {
        self.purge_dead_top();
        if self.entries.is_empty() {
            return None;
        }
        Some(self.pop_root())
    }

    /// Min-heap order: every parent's expiration is at most its children's.
    /// For tests.
    pub fn verify_heap_order(&self) -> bool {
        (1..self.entries.len()).all(|i| self.entries[(i - 1) / 2] <= self.entries[i])
    }

    fn purge_dead_top(&mut self) {
        while let Some(&top) = self.entries.first() {
            match self.dead.get_mut(&top) {
                Some(n) => {
                    *n -= 1;
                    if *n == 0 {
                        self.dead.remove(&top);
                    }
                    self.dead_count -= 1;
                    self.pop_root();
                }
                None => break,
            }
        }
    }

    fn pop_root(&mut self) -> Entry {
        let root = self.entries.swap_remove(0);
        if !self.entries.is_empty() {
            self.sift_down(0);
        }
        root
    }

    fn rebuild(&mut self) {
        let dead = &mut self.dead;
        self.entries.retain(|e| match dead.get_mut(e) {
            Some(n) => {
                *n -= 1;
                if *n == 0 {
                    dead.remove(e);
                }
                false
            }
            None => true,
        });
        self.dead_count = 0;
        debug_assert!(self.dead.is_empty());
        for i in (0..self.entries.len() / 2).rev() {
            self.sift_down(i);
        }
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.entries[i] < self.entries[parent] {
                self.entries.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.entries.len();
        loop {
            let mut smallest = i;
            for child in [2 * i + 1, 2 * i + 2] {
                if child < n && self.entries[child] < self.entries[smallest] {
                    smallest = child;
                }
            }
            if smallest == i {
                break;
            }
            self.entries.swap(i, smallest);
            i = smallest;
        }
    }
}
