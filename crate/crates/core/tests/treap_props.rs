//! Property tests: random operation sequences replayed against a
//! brute-force sorted-map oracle, plus structural invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use expire_treap::{ExpirationTime, ExtendedComparator, TreapError, TreapSnapshot};

#[derive(Debug, Clone)]
enum Op {
    Insert { key: u64, life: u64, payload: u32, infinite: bool },
    Remove { key: u64 },
    Expire { advance: u64 },
    Find { key: u64 },
    Range { lo: u64, hi: u64 },
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => (0..400u64, 1..60u64, any::<u32>(), prop::bool::weighted(0.15)).prop_map(
            |(key, life, payload, infinite)| Op::Insert { key, life, payload, infinite }
        ),
        2 => (0..400u64).prop_map(|key| Op::Remove { key }),
        1 => (1..25u64).prop_map(|advance| Op::Expire { advance }),
        2 => (0..400u64).prop_map(|key| Op::Find { key }),
        1 => (0..400u64, 0..400u64).prop_map(|(lo, hi)| Op::Range { lo, hi }),
    ]
}

type Oracle = BTreeMap<u64, (ExpirationTime, u32)>;

struct Replay {
    treap: TreapSnapshot<u64, u32>,
    oracle: Oracle,
    cmp: ExtendedComparator,
    now: u64,
}

impl Replay {
    fn new(seed: u64) -> Replay {
        Replay {
            treap: TreapSnapshot::empty(),
            oracle: Oracle::new(),
            cmp: ExtendedComparator::new(seed),
            now: 0,
        }
    }

    fn apply(&mut self, op: &Op) -> Result<(), TestCaseError> {
        match *op {
            Op::Insert { key, life, payload, infinite } => {
                let exp = if infinite {
                    ExpirationTime::INFINITY
                } else {
                    ExpirationTime::finite(self.now + life)
                };
                self.treap = self.treap.insert(key, exp, payload, &mut self.cmp);
                self.oracle.entry(key).or_insert((exp, payload));
            }
            Op::Remove { key } => {
                let expected = self.oracle.remove(&key);
                match self.treap.remove(&key, &mut self.cmp) {
                    Ok(next) => {
                        prop_assert!(expected.is_some(), "treap removed a key the oracle lacks");
                        self.treap = next;
                    }
                    Err(TreapError::KeyNotFound) => prop_assert!(expected.is_none()),
                    Err(e) => prop_assert!(false, "unexpected error: {e}"),
                }
            }
            Op::Expire { advance } => {
                self.now += advance;
                let (next, expelled) = self.treap.expire(self.now, &mut self.cmp);
                self.treap = next;

                let stale: Vec<u64> = self
                    .oracle
                    .iter()
                    .filter(|(_, (exp, _))| exp.is_expired_at(self.now))
                    .map(|(k, _)| *k)
                    .collect();
                let mut expelled_keys: Vec<u64> = expelled.iter().map(|(k, _, _)| *k).collect();
                expelled_keys.sort_unstable();
                prop_assert_eq!(&expelled_keys, &stale, "expelled set mismatch");
                for k in &stale {
                    self.oracle.remove(k);
                }

                // Removal order is nondecreasing in expiration.
                let order: Vec<u64> = expelled
                    .iter()
                    .map(|(_, e, _)| e.millis().expect("infinity expelled"))
                    .collect();
                prop_assert!(order.windows(2).all(|w| w[0] <= w[1]));
                // Eagerness: whatever remains expires strictly later.
                if let Some(min) = self.treap.min_expiration() {
                    prop_assert!(!min.is_expired_at(self.now));
                }
            }
            Op::Find { key } => {
                let got = self.treap.find(&key).ok();
                let want = self.oracle.get(&key).map(|(_, p)| p);
                prop_assert_eq!(got, want);
            }
            Op::Range { lo, hi } => {
                if lo > hi {
                    prop_assert!(matches!(self.treap.range(&lo, &hi), Err(TreapError::InvalidRange)));
                } else {
                    let got: Vec<(u64, u32)> = self
                        .treap
                        .range(&lo, &hi)
                        .unwrap()
                        .map(|(k, _, p)| (*k, *p))
                        .collect();
                    let want: Vec<(u64, u32)> = self
                        .oracle
                        .range(lo..=hi)
                        .map(|(k, (_, p))| (*k, *p))
                        .collect();
                    prop_assert_eq!(got, want);
                }
            }
        }
        Ok(())
    }

    fn check_contents(&self) -> Result<(), TestCaseError> {
        let got: Vec<(u64, ExpirationTime, u32)> =
            self.treap.iter().map(|(k, e, p)| (*k, e, *p)).collect();
        let want: Vec<(u64, ExpirationTime, u32)> =
            self.oracle.iter().map(|(k, (e, p))| (*k, *e, *p)).collect();
        prop_assert_eq!(got, want);
        prop_assert_eq!(self.treap.len(), self.oracle.len());
        Ok(())
    }
}

proptest! {
    #[test]
    fn oracle_equivalence(seed in any::<u64>(), ops in prop::collection::vec(op_strategy(), 1..300)) {
        let mut replay = Replay::new(seed);
        for (i, op) in ops.iter().enumerate() {
            replay.apply(op)?;
            if i % 50 == 0 {
                replay.treap.verify_invariants().map_err(TestCaseError::fail)?;
            }
        }
        replay.check_contents()?;
        replay.treap.verify_invariants().map_err(TestCaseError::fail)?;
    }

    #[test]
    fn persistence_is_observable(seed in any::<u64>(), ops in prop::collection::vec(op_strategy(), 20..200)) {
        let mut replay = Replay::new(seed);
        let mid = ops.len() / 2;
        for op in &ops[..mid] {
            replay.apply(op)?;
        }
        let frozen = replay.treap.clone();
        let before: Vec<(u64, ExpirationTime, u32)> =
            frozen.iter().map(|(k, e, p)| (*k, e, *p)).collect();
        for op in &ops[mid..] {
            replay.apply(op)?;
        }
        let after: Vec<(u64, ExpirationTime, u32)> =
            frozen.iter().map(|(k, e, p)| (*k, e, *p)).collect();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn range_agrees_with_traverse(keys in prop::collection::btree_set(0..1000u64, 0..200), lo in 0..1000u64, hi in 0..1000u64) {
        prop_assume!(lo <= hi);
        let mut cmp = ExtendedComparator::new(1);
        let mut t = TreapSnapshot::empty();
        for &k in &keys {
            t = t.insert(k, ExpirationTime::finite(k % 97), k as u32, &mut cmp);
        }
        let via_range: Vec<u64> = t.range(&lo, &hi).unwrap().map(|(k, _, _)| *k).collect();
        let via_filter: Vec<u64> = t.iter().map(|(k, _, _)| *k).filter(|k| (lo..=hi).contains(k)).collect();
        prop_assert_eq!(via_range, via_filter);
    }

    #[test]
    fn count_matches_distinct_inserts(keys in prop::collection::vec(0..500u64, 1..300)) {
        let mut cmp = ExtendedComparator::new(2);
        let mut t = TreapSnapshot::empty();
        let mut distinct = std::collections::HashSet::new();
        for &k in &keys {
            t = t.insert(k, ExpirationTime::finite(k), 0u32, &mut cmp);
            distinct.insert(k);
            prop_assert_eq!(t.len(), distinct.len());
        }
        prop_assert_eq!(t.iter().count(), distinct.len());
    }
}

/// Mean depth stays within the probabilistic balance bound for uniformly
/// random keys; seed-pinned. The acceptance suite runs the full-size
/// version over 100 seeds.
#[test]
fn random_keys_stay_shallow() {
    let n = 20_000u64;
    let bound = 3.0 * (n as f64).log2();
    for seed in [1u64, 2, 3] {
        let mut cmp = ExtendedComparator::new(seed);
        let mut t = TreapSnapshot::empty();
        for i in 0..n {
            let key = expire_treap::hash::mix64(i ^ (seed << 32));
            t = t.insert(key, ExpirationTime::finite(i), 0u32, &mut cmp);
        }
        let stats = t.depth_stats();
        assert!(
            stats.mean_depth <= bound,
            "seed {seed}: mean depth {} > bound {bound}",
            stats.mean_depth
        );
    }
}
