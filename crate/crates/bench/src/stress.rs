//! Multi-reader stress: readers query published snapshots while a single
//! writer advances the lineage. Readers validate that everything they see
//! is internally consistent, exercising the snapshot-isolation contract.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use expire_treap::{ExpirationTime, ExtendedComparator, TreapSnapshot};

use crate::runner::payload_for;

#[derive(Debug, Default)]
pub struct StressReport {
    pub lookups: u64,
    pub hits: u64,
    pub traversals: u64,
    /// Observations inconsistent with *any* snapshot: wrong payloads,
    /// unsorted traversals, or a snapshot changing underfoot.
    pub violations: u64,
    pub writer_ops: u64,
}

/// Run `readers` threads doing `total_lookups` lookups (split evenly)
/// against snapshots published by one writer performing `writer_ops`
/// random updates. Returns counts; `violations` must be zero.
pub fn reader_stress(
    readers: usize,
    total_lookups: u64,
    writer_ops: u64,
    seed: u64,
) -> StressReport {
    const KEY_SPACE: u64 = 20_000;
    let published: Arc<RwLock<TreapSnapshot<u64, u32>>> =
        Arc::new(RwLock::new(TreapSnapshot::empty()));
    let done = Arc::new(AtomicBool::new(false));
    let violations = Arc::new(AtomicU64::new(0));

    let mut handles = Vec::new();
    let per_reader = total_lookups / readers.max(1) as u64;
    for r in 0..readers {
        let published = published.clone();
        let done = done.clone();
        let violations = violations.clone();
        handles.push(thread::spawn(move || -> (u64, u64, u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (r as u64 + 1).wrapping_mul(0x9e37));
            let mut lookups = 0u64;
            let mut hits = 0u64;
            let mut traversals = 0u64;
            while lookups < per_reader {
                let snap = published.read().unwrap().clone();
                let frozen_len = snap.len();
                // A burst of lookups against one snapshot.
                for _ in 0..64 {
                    if lookups >= per_reader {
                        break;
                    }
                    let key = rng.random_range(0..KEY_SPACE);
                    lookups += 1;
                    if let Ok(payload) = snap.find(&key) {
                        hits += 1;
                        if *payload != payload_for(key) {
                            violations.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                }
                // Occasionally walk the whole snapshot: keys must be
                // strictly increasing and the length stable, i.e. the
                // version cannot change underneath the reader.
                if rng.random_bool(0.05) {
                    traversals += 1;
                    let mut n = 0usize;
                    let mut prev: Option<u64> = None;
                    for (k, _, p) in snap.iter() {
                        n += 1;
                        if prev.is_some_and(|prev| prev >= *k) || *p != payload_for(*k) {
                            violations.fetch_add(1, Ordering::Relaxed);
                        }
                        prev = Some(*k);
                    }
                    if n != frozen_len || snap.len() != frozen_len {
                        violations.fetch_add(1, Ordering::Relaxed);
                    }
                }
                if done.load(Ordering::Relaxed) && lookups >= per_reader {
                    break;
                }
            }
            (lookups, hits, traversals)
        }));
    }

    // Writer: random inserts, removes, and expirations, publishing each
    // new version.
    let mut cmp = ExtendedComparator::new(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current: TreapSnapshot<u64, u32> = TreapSnapshot::empty();
    let mut now = 0u64;
    let mut performed = 0u64;
    for _ in 0..writer_ops {
        let key = rng.random_range(0..KEY_SPACE);
        match rng.random_range(0..10u32) {
            0..=6 => {
                let exp = if rng.random_bool(0.2) {
                    ExpirationTime::INFINITY
                } else {
                    ExpirationTime::finite(now + rng.random_range(1..500u64))
                };
                current = current.insert(key, exp, payload_for(key), &mut cmp);
            }
            7..=8 => {
                if let Ok(next) = current.remove(&key, &mut cmp) {
                    current = next;
                }
            }
            _ => {
                now += rng.random_range(1..20u64);
                let (next, _) = current.expire(now, &mut cmp);
                current = next;
            }
        }
        performed += 1;
        *published.write().unwrap() = current.clone();
    }
    done.store(true, Ordering::Relaxed);

    let mut report = StressReport {
        writer_ops: performed,
        ..StressReport::default()
    };
    for h in handles {
        let (lookups, hits, traversals) = h.join().expect("reader panicked");
        report.lookups += lookups;
        report.hits += hits;
        report.traversals += traversals;
    }
    report.violations = violations.load(Ordering::Relaxed);
    report
}
