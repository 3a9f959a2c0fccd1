//! Randomised oracle-equivalence replay: a seeded stream of mixed
//! operations applied to the treap and to a brute-force sorted map, with
//! every observable result compared. Used by the `verify` command and by
//! the acceptance suite.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use expire_treap::{ExpirationTime, ExtendedComparator, TreapError, TreapSnapshot};

#[derive(Debug, Clone, Copy)]
pub struct ReplayOptions {
    pub ops: u64,
    pub seed: u64,
    /// Keys are drawn from `0..key_space`; smaller spaces mean more
    /// collisions and deletions of present keys.
    pub key_space: u64,
    /// Capture a snapshot after this many ops and verify at the end that
    /// it still traverses identically.
    pub snapshot_at: Option<u64>,
    /// Walk the full tree invariants every this many ops.
    pub invariant_every: u64,
    /// Compare complete contents against the oracle every this many ops.
    pub full_compare_every: u64,
}

impl ReplayOptions {
    pub fn new(ops: u64, seed: u64) -> ReplayOptions {
        ReplayOptions {
            ops,
            seed,
            key_space: 4_000,
            snapshot_at: Some(ops / 2),
            invariant_every: 100,
            full_compare_every: 1_000,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ReplayStats {
    pub inserts: u64,
    pub removes: u64,
    pub expirations: u64,
    pub finds: u64,
    pub ranges: u64,
    pub max_live: usize,
    pub final_live: usize,
}

type Oracle = BTreeMap<u64, (ExpirationTime, u32)>;

fn contents(treap: &TreapSnapshot<u64, u32>) -> Vec<(u64, ExpirationTime, u32)> {
    treap.iter().map(|(k, e, p)| (*k, e, *p)).collect()
}

fn oracle_contents(oracle: &Oracle) -> Vec<(u64, ExpirationTime, u32)> {
    oracle.iter().map(|(k, (e, p))| (*k, *e, *p)).collect()
}

/// Replay `opts.ops` random operations; `Err` describes the first
/// divergence from the oracle or broken invariant.
pub fn oracle_replay(opts: &ReplayOptions) -> Result<ReplayStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut cmp = ExtendedComparator::new(opts.seed ^ 0xc0ffee);
    let mut treap: TreapSnapshot<u64, u32> = TreapSnapshot::empty();
    let mut oracle = Oracle::new();
    let mut now = 0u64;
    let mut stats = ReplayStats::default();
    let mut frozen: Option<(TreapSnapshot<u64, u32>, Vec<(u64, ExpirationTime, u32)>)> = None;

    for op_index in 0..opts.ops {
        if Some(op_index) == opts.snapshot_at {
            let snap = treap.clone();
            let seen = contents(&snap);
            frozen = Some((snap, seen));
        }

        let key = rng.random_range(0..opts.key_space);
        match rng.random_range(0..100u32) {
            // Insert: 40%
            0..=39 => {
                stats.inserts += 1;
                let exp = if rng.random_bool(0.1) {
                    ExpirationTime::INFINITY
                } else {
                    ExpirationTime::finite(now + rng.random_range(1..80u64))
                };
                let payload = rng.random::<u32>();
                let next = treap.insert(key, exp, payload, &mut cmp);
                let was_present = oracle.contains_key(&key);
                if was_present && next.len() != treap.len() {
                    return Err(format!("op {op_index}: duplicate insert changed count"));
                }
                if !was_present {
                    if next.len() != treap.len() + 1 {
                        return Err(format!("op {op_index}: insert did not grow count"));
                    }
                    oracle.insert(key, (exp, payload));
                }
                treap = next;
            }
            // Remove: 15%
            40..=54 => {
                stats.removes += 1;
                let expected = oracle.remove(&key);
                match treap.remove(&key, &mut cmp) {
                    Ok(next) => {
                        if expected.is_none() {
                            return Err(format!(
                                "op {op_index}: removed key {key} the oracle does not have"
                            ));
                        }
                        treap = next;
                    }
                    Err(TreapError::KeyNotFound) => {
                        if expected.is_some() {
                            return Err(format!("op {op_index}: key {key} missing from treap"));
                        }
                    }
                    Err(e) => return Err(format!("op {op_index}: unexpected error {e}")),
                }
            }
            // Expire: 15%
            55..=69 => {
                now += rng.random_range(1..30u64);
                let (next, expelled) = treap.expire(now, &mut cmp);
                treap = next;
                stats.expirations += expelled.len() as u64;

                let mut expelled_keys: Vec<u64> = expelled.iter().map(|(k, _, _)| *k).collect();
                expelled_keys.sort_unstable();
                let stale: Vec<u64> = oracle
                    .iter()
                    .filter(|(_, (e, _))| e.is_expired_at(now))
                    .map(|(k, _)| *k)
                    .collect();
                if expelled_keys != stale {
                    return Err(format!(
                        "op {op_index}: expire({now}) expelled {expelled_keys:?}, oracle says {stale:?}"
                    ));
                }
                for k in &stale {
                    oracle.remove(k);
                }
                let mut last = 0u64;
                for (_, e, _) in &expelled {
                    let Some(ms) = e.millis() else {
                        return Err(format!("op {op_index}: expire expelled an infinite record"));
                    };
                    if ms < last {
                        return Err(format!("op {op_index}: expelled out of expiration order"));
                    }
                    last = ms;
                }
                if let Some(min) = treap.min_expiration() {
                    if min.is_expired_at(now) {
                        return Err(format!(
                            "op {op_index}: stale minimum {min} after expire({now})"
                        ));
                    }
                }
            }
            // Find: 20%
            70..=89 => {
                stats.finds += 1;
                let got = treap.find(&key).ok().copied();
                let want = oracle.get(&key).map(|(_, p)| *p);
                if got != want {
                    return Err(format!(
                        "op {op_index}: find({key}) = {got:?}, oracle says {want:?}"
                    ));
                }
            }
            // Range: 10%
            _ => {
                stats.ranges += 1;
                let other = rng.random_range(0..opts.key_space);
                let (lo, hi) = (key.min(other), key.max(other));
                let got: Vec<(u64, u32)> = treap
                    .range(&lo, &hi)
                    .map_err(|e| format!("op {op_index}: range failed: {e}"))?
                    .map(|(k, _, p)| (*k, *p))
                    .collect();
                let want: Vec<(u64, u32)> =
                    oracle.range(lo..=hi).map(|(k, (_, p))| (*k, *p)).collect();
                if got != want {
                    return Err(format!("op {op_index}: range({lo},{hi}) diverged"));
                }
            }
        }

        stats.max_live = stats.max_live.max(treap.len());
        if treap.len() != oracle.len() {
            return Err(format!(
                "op {op_index}: count {} vs oracle {}",
                treap.len(),
                oracle.len()
            ));
        }
        if opts.invariant_every > 0 && op_index % opts.invariant_every == 0 {
            treap.verify_invariants().map_err(|e| format!("op {op_index}: {e}"))?;
        }
        if opts.full_compare_every > 0 && op_index % opts.full_compare_every == 0
            && contents(&treap) != oracle_contents(&oracle)
        {
            return Err(format!("op {op_index}: full contents diverged"));
        }
    }

    treap.verify_invariants().map_err(|e| format!("final: {e}"))?;
    if contents(&treap) != oracle_contents(&oracle) {
        return Err("final contents diverged from oracle".into());
    }
    if let Some((snap, before)) = frozen {
        let after = contents(&snap);
        if before != after {
            return Err("captured snapshot changed under later updates".into());
        }
        snap.verify_invariants()
            .map_err(|e| format!("captured snapshot: {e}"))?;
    }
    stats.final_live = treap.len();
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_passes_for_many_seeds() {
        for seed in 0..20u64 {
            let stats = oracle_replay(&ReplayOptions::new(2_000, seed)).unwrap();
            assert!(stats.inserts > 0);
        }
    }

    #[test]
    fn replay_visits_every_op_kind() {
        let stats = oracle_replay(&ReplayOptions::new(5_000, 1)).unwrap();
        assert!(stats.inserts > 0);
        assert!(stats.removes > 0);
        assert!(stats.expirations > 0);
        assert!(stats.finds > 0);
        assert!(stats.ranges > 0);
        assert!(stats.max_live > 0);
    }
}
