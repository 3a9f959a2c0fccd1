//! Baseline structures for the comparative study: AVL tree, red-black
//! tree, and chained hash table, each usable bare with periodic
//! cleansing or paired with a supporting min-heap for eager expiration.

mod avl;
mod hash;
mod heap;
mod rbtree;

pub use avl::AvlTree;
pub use hash::HashIndex;
pub use heap::ExpiryHeap;
pub use rbtree::RedBlackTree;

use expire_treap::ExpirationTime;

/// Common surface the benchmark driver needs from a key index.
/// Duplicate-key inserts are no-ops, matching the treap's contract so the
/// structures stay comparable under identical operation streams.
pub trait KeyedIndex<P> {
    fn insert(&mut self, key: u64, exp: ExpirationTime, payload: P) -> bool;
    fn remove(&mut self, key: u64) -> Option<(ExpirationTime, P)>;
    fn find(&self, key: u64) -> Option<(ExpirationTime, &P)>;
    /// Visit every record; key order for trees, bucket order for hashes.
    fn each_entry(&self, f: &mut dyn FnMut(u64, ExpirationTime, &P));
    fn len(&self) -> usize;
}

impl<P> KeyedIndex<P> for AvlTree<P> {
    fn insert(&mut self, key: u64, exp: ExpirationTime, payload: P) -> bool {
        AvlTree::insert(self, key, exp, payload)
    }
    fn remove(&mut self, key: u64) -> Option<(ExpirationTime, P)> {
        AvlTree::remove(self, key)
    }
    fn find(&self, key: u64) -> Option<(ExpirationTime, &P)> {
        AvlTree::find(self, key)
    }
    fn each_entry(&self, f: &mut dyn FnMut(u64, ExpirationTime, &P)) {
        AvlTree::each_entry(self, f)
    }
    fn len(&self) -> usize {
        AvlTree::len(self)
    }
}

impl<P: Default> KeyedIndex<P> for RedBlackTree<P> {
    fn insert(&mut self, key: u64, exp: ExpirationTime, payload: P) -> bool {
        RedBlackTree::insert(self, key, exp, payload)
    }
    fn remove(&mut self, key: u64) -> Option<(ExpirationTime, P)> {
        RedBlackTree::remove(self, key)
    }
    fn find(&self, key: u64) -> Option<(ExpirationTime, &P)> {
        RedBlackTree::find(self, key)
    }
    fn each_entry(&self, f: &mut dyn FnMut(u64, ExpirationTime, &P)) {
        RedBlackTree::each_entry(self, f)
    }
    fn len(&self) -> usize {
        RedBlackTree::len(self)
    }
}

impl<P> KeyedIndex<P> for HashIndex<P> {
    fn insert(&mut self, key: u64, exp: ExpirationTime, payload: P) -> bool {
        HashIndex::insert(self, key, exp, payload)
    }
    fn remove(&mut self, key: u64) -> Option<(ExpirationTime, P)> {
        HashIndex::remove(self, key)
    }
    fn find(&self, key: u64) -> Option<(ExpirationTime, &P)> {
        HashIndex::find(self, key)
    }
    fn each_entry(&self, f: &mut dyn FnMut(u64, ExpirationTime, &P)) {
        HashIndex::each_entry(self, f)
    }
    fn len(&self) -> usize {
        HashIndex::len(self)
    }
}

/// How a non-treap index disposes of expired records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpirationStrategy {
    /// Full traversal at interval ends removing everything stale. Cheap
    /// bookkeeping, staleness bounded only by the interval.
    PeriodicCleansing { interval_ms: u64, last_sweep_ms: u64 },
    /// Pop the supporting heap while its minimum is due, deleting each
    /// popped key from the index. Zero staleness at step boundaries.
    EagerHeap,
}

impl ExpirationStrategy {
    pub fn periodic(interval_ms: u64) -> ExpirationStrategy {
        ExpirationStrategy::PeriodicCleansing {
            interval_ms,
            last_sweep_ms: 0,
        }
    }
}

/// Run one expiration step at time `now_ms`. The heap must be present
/// exactly for `EagerHeap`. Returns the number of records expelled from
/// the index.
pub fn strat_step<P>(
    index: &mut dyn KeyedIndex<P>,
    heap: Option<&mut ExpiryHeap>,
    strategy: &mut ExpirationStrategy,
    now_ms: u64,
) -> usize {
    match strategy {
        ExpirationStrategy::EagerHeap => {
            let heap = heap.expect("eager strategy requires a supporting heap");
            let mut expelled = 0;
            while let Some((exp, key)) = heap.peek_min() {
                if exp > now_ms {
                    break;
                }
                heap.pop_min();
                let removed = index.remove(key);
                debug_assert!(
                    matches!(removed, Some((e, _)) if e == ExpirationTime::finite(exp)),
                    "heap and index out of sync for key {key}"
                );
                expelled += usize::from(removed.is_some());
            }
            expelled
        }
        ExpirationStrategy::PeriodicCleansing {
            interval_ms,
            last_sweep_ms,
        } => {
            debug_assert!(heap.is_none(), "periodic cleansing runs without a heap");
            if now_ms < *last_sweep_ms + *interval_ms {
                return 0;
            }
            *last_sweep_ms = now_ms;
            let mut stale = Vec::new();
            index.each_entry(&mut |key, exp, _| {
                if exp.is_expired_at(now_ms) {
                    stale.push(key);
                }
            });
            for key in &stale {
                index.remove(*key);
            }
            stale.len()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use expire_treap::{ExpirationTime as Exp, ExtendedComparator, TreapSnapshot};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn fin(ms: u64) -> Exp {
        Exp::finite(ms)
    }

    #[test]
    fn avl_ascending_insert_height_bound() {
        let mut t = AvlTree::new();
        for k in 1..=1000u64 {
            assert!(t.insert(k, fin(k), k as u32));
        }
        t.verify_invariants().unwrap();
        let bound = (1.44 * (1001f64).log2()).floor() as usize;
        assert!(t.max_depth() <= bound, "depth {} > {bound}", t.max_depth());
    }

    #[test]
    fn trees_match_oracle_under_random_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut avl: AvlTree<u32> = AvlTree::new();
        let mut rb: RedBlackTree<u32> = RedBlackTree::new();
        let mut hash: HashIndex<u32> = HashIndex::new();
        let mut oracle: BTreeMap<u64, (Exp, u32)> = BTreeMap::new();

        for i in 0..10_000u64 {
            let key = rng.random_range(0..2000u64);
            if rng.random_bool(0.6) {
                let exp = fin(rng.random_range(0..5000u64));
                let payload = i as u32;
                let fresh = !oracle.contains_key(&key);
                if fresh {
                    oracle.insert(key, (exp, payload));
                }
                assert_eq!(avl.insert(key, exp, payload), fresh);
                assert_eq!(rb.insert(key, exp, payload), fresh);
                assert_eq!(hash.insert(key, exp, payload), fresh);
            } else {
                let want = oracle.remove(&key);
                assert_eq!(avl.remove(key), want);
                assert_eq!(rb.remove(key), want);
                assert_eq!(hash.remove(key), want);
            }
            let probe = rng.random_range(0..2000u64);
            let want = oracle.get(&probe).map(|(e, p)| (*e, p));
            assert_eq!(avl.find(probe), want);
            assert_eq!(rb.find(probe), want);
            assert_eq!(hash.find(probe), want);

            if i % 1000 == 0 {
                avl.verify_invariants().unwrap();
                rb.verify_invariants().unwrap();
                hash.verify_invariants().unwrap();
            }
        }
        avl.verify_invariants().unwrap();
        rb.verify_invariants().unwrap();
        hash.verify_invariants().unwrap();

        let mut in_order = Vec::new();
        avl.each_entry(&mut |k, e, p| in_order.push((k, (e, *p))));
        let want: Vec<(u64, (Exp, u32))> = oracle.iter().map(|(k, v)| (*k, *v)).collect();
        assert_eq!(in_order, want, "AVL traversal mismatch");

        let mut rb_order = Vec::new();
        rb.each_entry(&mut |k, e, p| rb_order.push((k, (e, *p))));
        assert_eq!(rb_order, want, "red-black traversal mismatch");

        assert_eq!(hash.len(), oracle.len());
    }

    #[test]
    fn eager_step_with_nothing_due() {
        let mut idx: AvlTree<u32> = AvlTree::new();
        let mut heap = ExpiryHeap::new();
        idx.insert(1, fin(100), 0);
        heap.push(100, 1);
        let mut strat = ExpirationStrategy::EagerHeap;
        assert_eq!(strat_step(&mut idx, Some(&mut heap), &mut strat, 50), 0);
        assert_eq!(idx.len(), 1);
        assert_eq!(heap.live_len(), 1);
    }

    #[test]
    fn periodic_step_removes_exactly_the_stale_set() {
        let mut idx: RedBlackTree<u32> = RedBlackTree::new();
        for k in 0..100u64 {
            idx.insert(k, fin(k + 1), 0);
        }
        let mut strat = ExpirationStrategy::periodic(10);
        let expelled = strat_step(&mut idx, None, &mut strat, 50);
        assert_eq!(expelled, 50, "keys 0..50 have exp 1..=50 ≤ 50");
        assert_eq!(idx.len(), 50);
        idx.verify_invariants().unwrap();
        // Before the next interval boundary nothing happens.
        assert_eq!(strat_step(&mut idx, None, &mut strat, 55), 0);
        assert_eq!(strat_step(&mut idx, None, &mut strat, 60), 10);
    }

    #[test]
    fn heap_tracks_finite_records_after_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut idx: AvlTree<u32> = AvlTree::new();
        let mut heap = ExpiryHeap::new();
        let mut strat = ExpirationStrategy::EagerHeap;
        let mut now = 0u64;
        for i in 0..3000u64 {
            now += rng.random_range(0..3u64);
            let key = i;
            if rng.random_bool(0.85) {
                let exp = if rng.random_bool(0.1) {
                    Exp::INFINITY
                } else {
                    fin(now + 1 + rng.random_range(0..500u64))
                };
                if idx.insert(key, exp, 0) {
                    if let Some(ms) = exp.millis() {
                        heap.push(ms, key);
                    }
                }
            } else if i > 0 {
                // Explicit delete of a random earlier key, exercising the
                // tombstone path.
                let victim = rng.random_range(0..i);
                if let Some((exp, _)) = idx.remove(victim) {
                    if let Some(ms) = exp.millis() {
                        heap.invalidate(ms, victim);
                    }
                }
            }
            strat_step(&mut idx, Some(&mut heap), &mut strat, now);

            // Synchronisation: every live heap entry names an index record
            // with the same expiration.
            let mut finite = 0;
            idx.each_entry(&mut |_, e, _| finite += usize::from(e.is_finite()));
            assert_eq!(heap.live_len(), finite, "heap/index drifted at op {i}");
        }
    }

    #[test]
    fn cross_structure_agreement_with_treap() {
        // Same stream through the treap and every baseline: identical
        // logical contents and identical expelled counts at shared
        // boundaries.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut cmp = ExtendedComparator::new(17);
        let mut treap: TreapSnapshot<u64, u32> = TreapSnapshot::empty();
        let mut avl: AvlTree<u32> = AvlTree::new();
        let mut avl_heap = ExpiryHeap::new();
        let mut avl_strat = ExpirationStrategy::EagerHeap;
        let mut rb: RedBlackTree<u32> = RedBlackTree::new();
        let mut rb_heap = ExpiryHeap::new();
        let mut rb_strat = ExpirationStrategy::EagerHeap;

        let mut now = 0u64;
        let mut treap_total = 0usize;
        let mut avl_total = 0usize;
        let mut rb_total = 0usize;
        for i in 0..5000u64 {
            now += rng.random_range(1..4u64);
            let key = rng.random_range(0..3000u64);
            let exp = fin(now + rng.random_range(1..200u64));
            let next = treap.insert(key, exp, i as u32, &mut cmp);
            let fresh = next.len() > treap.len();
            treap = next;
            assert_eq!(avl.insert(key, exp, i as u32), fresh);
            assert_eq!(rb.insert(key, exp, i as u32), fresh);
            if fresh {
                avl_heap.push(exp.millis().unwrap(), key);
                rb_heap.push(exp.millis().unwrap(), key);
            }

            let (t2, expelled) = treap.expire(now, &mut cmp);
            treap = t2;
            treap_total += expelled.len();
            avl_total += strat_step(&mut avl, Some(&mut avl_heap), &mut avl_strat, now);
            rb_total += strat_step(&mut rb, Some(&mut rb_heap), &mut rb_strat, now);
            assert_eq!(treap_total, avl_total);
            assert_eq!(treap_total, rb_total);
            assert_eq!(treap.len(), avl.len());
        }

        let treap_contents: Vec<(u64, u32)> = treap.iter().map(|(k, _, p)| (*k, *p)).collect();
        let mut avl_contents = Vec::new();
        avl.each_entry(&mut |k, _, p| avl_contents.push((k, *p)));
        assert_eq!(treap_contents, avl_contents);
    }
}
