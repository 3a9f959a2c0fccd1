//! Chained hash table over 64-bit keys, one mutable version.
//!
//! Power-of-two bucket array; grows at load factor 3/4, shrinks at 1/8.
//! Traversal order is bucket order, not key order; the hash-table
//! scenarios stand in for treaps whose keys were hashed anyway.

use expire_treap::hash::mix64;
use expire_treap::ExpirationTime;

const MIN_BUCKETS: usize = 16;

pub struct HashIndex<P> {
    buckets: Vec<Vec<(u64, ExpirationTime, P)>>,
    len: usize,
}

impl<P> Default for HashIndex<P> {
    fn default() -> Self {
        HashIndex::new()
    }
}

impl<P> HashIndex<P> {
    pub fn new() -> HashIndex<P> {
        HashIndex {
            buckets: (0..MIN_BUCKETS).map(|_| Vec::new()).collect(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    fn bucket_of(&self, key: u64) -> usize {
        mix64(key) as usize & (self.buckets.len() - 1)
    }

    /// Insert; duplicate keys are a no-op returning false.
    pub fn insert(&mut self, key: u64, exp: ExpirationTime, payload: P) -> bool {
        let b = self.bucket_of(key);
        if self.buckets[b].iter().any(|(k, _, _)| *k == key) {
            return false;
        }
        self.buckets[b].push((key, exp, payload));
        self.len += 1;
        if self.len * 4 > self.buckets.len() * 3 {
            self.resize(self.buckets.len() * 2);
        }
        true
    }

    pub fn find(&self, key: u64) -> Option<(ExpirationTime, &P)> {
        self.buckets[self.bucket_of(key)]
            .iter()
            .find(|(k, _, _)| *k == key)
            .map(|(_, e, p)| (*e, p))
    }

    pub fn remove(&mut self, key: u64) -> Option<(ExpirationTime, P)> {
        let b = self.bucket_of(key);
        let pos = self.buckets[b].iter().position(|(k, _, _)| *k == key)?;
        let (_, exp, payload) = self.buckets[b].swap_remove(pos);
        self.len -= 1;
        if self.buckets.len() > MIN_BUCKETS && self.len * 8 < self.buckets.len() {
            self.resize(self.buckets.len() / 2);
        }
        Some((exp, payload))
    }

    /// Visit every record, bucket by bucket.
    pub fn each_entry(&self, f: &mut dyn FnMut(u64, ExpirationTime, &P)) {
        for bucket in &self.buckets {
            for (k, e, p) in bucket {
                f(*k, *e, p);
            }
        }
    }

    fn resize(&mut self, new_count: usize) {
        let old = std::mem::replace(
            &mut self.buckets,
            (0..new_count).map(|_| Vec::new()).collect(),
        );
        for bucket in old {
            for entry in bucket {
                let b = mix64(entry.0) as usize & (new_count - 1);
                self.buckets[b].push(entry);
            }
        }
    }

    /// Every record findable through its bucket and load factor within
    /// bounds; for tests.
    pub fn verify_invariants(&self) -> Result<(), String> {
        let mut seen = 0;
        for (i, bucket) in self.buckets.iter().enumerate() {
            for (k, _, _) in bucket {
                if self.bucket_of(*k) != i {
                    return Err(format!("key {k} in wrong bucket"));
                }
                seen += 1;
            }
        }
        if seen != self.len {
            return Err(format!("len {} but buckets hold {seen}", self.len));
        }
        if self.len * 4 > self.buckets.len() * 3 {
            return Err("load factor above 3/4".into());
        }
        Ok(())
    }
}
