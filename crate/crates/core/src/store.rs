//! Expirable key-value store over the persistent treap.
//!
//! Implements the visibility rule for expirable data: a query issued at
//! time τ sees exactly the records whose expiration lies strictly after
//! τ. Reads filter by time on their own, so correctness never depends on
//! when the physical sweep happens; the sweep only bounds how much stale
//! data is retained.

use std::time::{SystemTime, UNIX_EPOCH};

use crate::time::{ExpirationTime, ExtendedComparator};
use crate::treap::TreapSnapshot;

/// Store clock: wall time or an explicitly advanced simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    RealTime,
    Simulated { now_ms: u64 },
}

impl Clock {
    pub fn simulated(start_ms: u64) -> Clock {
        Clock::Simulated { now_ms: start_ms }
    }

    pub fn now_ms(&self) -> u64 {
        match self {
            Clock::RealTime => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .expect("system clock before epoch")
                .as_millis() as u64,
            Clock::Simulated { now_ms } => *now_ms,
        }
    }
}

/// When the store physically expunges stale records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPolicy {
    /// Sweep whenever at least this many milliseconds passed since the
    /// previous sweep. The default cadence is 100 ms.
    Cadence { every_ms: u64 },
    /// Sweep as soon as the earliest expiration is due.
    OnMinExpiration,
}

impl Default for SweepPolicy {
    fn default() -> Self {
        SweepPolicy::Cadence { every_ms: 100 }
    }
}

/// Outcome of a `put`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PutOutcome {
    Inserted,
    /// The key was already present; the store is unchanged.
    KeyExists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("record expires at {exp} which is not after now ({now_ms})")]
    AlreadyExpired { exp: ExpirationTime, now_ms: u64 },
    #[error("invalid range: lo > hi")]
    InvalidRange,
}

type ExpirationHook<K, P> = Box<dyn FnMut(&K, ExpirationTime, &P) + Send>;

/// A table of records tagged with expiration times.
///
/// The store owns the writer side of a treap lineage: one thread drives
/// it, while any number of reader threads may hold [`Self::snapshot`]
/// results and query them concurrently.
pub struct ExpirableStore<K, P> {
    current: TreapSnapshot<K, P>,
    cmp: ExtendedComparator,
    clock: Clock,
    policy: SweepPolicy,
    last_sweep_ms: u64,
    hook: Option<ExpirationHook<K, P>>,
}

impl<K: Ord + Clone, P: Clone> ExpirableStore<K, P> {
    pub fn new(clock: Clock, seed: u64) -> Self {
        Self::with_policy(clock, seed, SweepPolicy::default())
    }

    pub fn with_policy(clock: Clock, seed: u64, policy: SweepPolicy) -> Self {
        let start = clock.now_ms();
        ExpirableStore {
            current: TreapSnapshot::empty(),
            cmp: ExtendedComparator::new(seed),
            clock,
            policy,
            last_sweep_ms: start,
            hook: None,
        }
    }

    /// Called once per expelled record, in removal order.
    pub fn set_expiration_hook(&mut self, hook: impl FnMut(&K, ExpirationTime, &P) + Send + 'static) {
        self.hook = Some(Box::new(hook));
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    /// Advance a simulated clock; runs the sweep if the policy says one
    /// is due. Panics on a real-time clock.
    pub fn tick(&mut self, ms: u64) {
        match &mut self.clock {
            Clock::Simulated { now_ms } => *now_ms += ms,
            Clock::RealTime => panic!("tick on a real-time clock"),
        }
        self.maybe_sweep();
    }

    /// Insert a record. The expiration must lie strictly after the
    /// current time (infinity always qualifies); a key that is already
    /// present leaves the store unchanged and reports `KeyExists`.
    pub fn put(&mut self, key: K, exp: ExpirationTime, payload: P) -> Result<PutOutcome, StoreError> {
        let now_ms = self.now_ms();
        if exp.is_expired_at(now_ms) {
            return Err(StoreError::AlreadyExpired { exp, now_ms });
        }
        let next = self.current.insert(key, exp, payload, &mut self.cmp);
        let outcome = if next.len() == self.current.len() {
            PutOutcome::KeyExists
        } else {
            PutOutcome::Inserted
        };
        self.current = next;
        self.maybe_sweep();
        Ok(outcome)
    }

    /// Payload under `key` if the record is visible now, i.e. present and
    /// not expired. A stale record that has not been swept yet is already
    /// invisible here.
    pub fn get(&self, key: &K) -> Option<&P> {
        let now_ms = self.now_ms();
        self.current
            .entry(key)
            .filter(|(exp, _)| !exp.is_expired_at(now_ms))
            .map(|(_, payload)| payload)
    }

    /// Ordered, time-filtered range scan over `[lo, hi]`.
    pub fn scan(&self, lo: &K, hi: &K) -> Result<impl Iterator<Item = (&K, &P)>, StoreError> {
        let now_ms = self.now_ms();
        let iter = self
            .current
            .range(lo, hi)
            .map_err(|_| StoreError::InvalidRange)?;
        Ok(iter
            .filter(move |(_, exp, _)| !exp.is_expired_at(now_ms))
            .map(|(k, _, p)| (k, p)))
    }

    /// Physically expunge everything that has expired by now. Returns
    /// the number of expelled records; the hook sees each one in removal
    /// order.
    pub fn run_expiration(&mut self) -> usize {
        let now_ms = self.now_ms();
        self.last_sweep_ms = now_ms;
        let (next, expelled) = self.current.expire(now_ms, &mut self.cmp);
        self.current = next;
        if let Some(hook) = self.hook.as_mut() {
            for (key, exp, payload) in &expelled {
                hook(key, *exp, payload);
            }
        }
        expelled.len()
    }

    /// The current version, cheap to clone and safe to hand to other
    /// threads. Contains whatever is physically present, including stale
    /// records the sweep has not reached yet.
    pub fn snapshot(&self) -> TreapSnapshot<K, P> {
        self.current.clone()
    }

    /// Physical record count, including stale-but-unswept records.
    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    fn maybe_sweep(&mut self) {
        let now_ms = self.now_ms();
        let due = match self.policy {
            SweepPolicy::Cadence { every_ms } => now_ms.saturating_sub(self.last_sweep_ms) >= every_ms,
            SweepPolicy::OnMinExpiration => self
                .current
                .min_expiration()
                .is_some_and(|exp| exp.is_expired_at(now_ms)),
        };
        if due {
            self.run_expiration();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sim_store(seed: u64) -> ExpirableStore<u64, u32> {
        ExpirableStore::new(Clock::simulated(0), seed)
    }

    #[test]
    fn put_then_get_within_lifetime() {
        let mut s = sim_store(0);
        let now = s.now_ms();
        s.put(1, ExpirationTime::finite(now + 1000), 11).unwrap();
        assert_eq!(s.get(&1), Some(&11));
    }

    #[test]
    fn put_at_now_is_rejected() {
        let mut s = sim_store(0);
        let now = s.now_ms();
        let err = s.put(1, ExpirationTime::finite(now), 11).unwrap_err();
        assert!(matches!(err, StoreError::AlreadyExpired { .. }));
    }

    #[test]
    fn infinity_survives_any_advance() {
        let mut s = sim_store(0);
        s.put(1, ExpirationTime::INFINITY, 11).unwrap();
        s.tick(1_000_000_000);
        assert_eq!(s.get(&1), Some(&11));
    }

    #[test]
    fn duplicate_put_reports_key_exists() {
        let mut s = sim_store(0);
        let exp = ExpirationTime::finite(100);
        assert_eq!(s.put(1, exp, 11).unwrap(), PutOutcome::Inserted);
        assert_eq!(s.put(1, exp, 22).unwrap(), PutOutcome::KeyExists);
        assert_eq!(s.get(&1), Some(&11));
    }

    #[test]
    fn reads_filter_before_sweep() {
        // Cadence so large the sweep never runs during the test.
        let mut s: ExpirableStore<u64, u32> = ExpirableStore::with_policy(
            Clock::simulated(0),
            0,
            SweepPolicy::Cadence { every_ms: u64::MAX },
        );
        s.put(1, ExpirationTime::finite(10), 11).unwrap();
        s.tick(11);
        assert_eq!(s.get(&1), None, "stale record visible before sweep");
        assert_eq!(s.len(), 1, "record should still be physically present");
        assert_eq!(s.run_expiration(), 1);
        assert_eq!(s.len(), 0);
    }

    #[test]
    fn get_on_empty_store() {
        let s = sim_store(0);
        assert_eq!(s.get(&1), None);
    }

    #[test]
    fn scan_is_ordered_and_filtered() {
        let mut s = sim_store(0);
        for k in 0..10u64 {
            let exp = if k % 2 == 0 {
                ExpirationTime::finite(5)
            } else {
                ExpirationTime::finite(1000)
            };
            s.put(k, exp, k as u32).unwrap();
        }
        s.tick(6);
        let got: Vec<u64> = s.scan(&0, &9).unwrap().map(|(k, _)| *k).collect();
        assert_eq!(got, vec![1, 3, 5, 7, 9]);
        assert!(s.scan(&5, &2).is_err());

        let empty = sim_store(0);
        assert_eq!(empty.scan(&0, &100).unwrap().count(), 0);
    }

    #[test]
    fn run_expiration_counts_and_preserves() {
        let mut s = sim_store(0);
        s.put(1, ExpirationTime::finite(50), 1).unwrap();
        s.put(2, ExpirationTime::finite(60), 2).unwrap();
        assert_eq!(s.run_expiration(), 0, "nothing stale yet");
        assert_eq!(s.len(), 2);
        match &mut s.clock {
            Clock::Simulated { now_ms } => *now_ms = 55,
            _ => unreachable!(),
        }
        assert_eq!(s.run_expiration(), 1);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn expiration_step_of_worked_example() {
        let mut s = sim_store(0);
        for (k, e) in [(1, 7), (2, 6), (3, 6), (4, 0), (5, 7), (6, 6), (7, 8)] {
            // Shift by +1 so every expiration is in the future at put time.
            s.put(k as u64, ExpirationTime::finite(e + 1), k as u32).unwrap();
        }
        match &mut s.clock {
            Clock::Simulated { now_ms } => *now_ms = 2, // paper's "time 1", shifted
            _ => unreachable!(),
        }
        let expelled = Arc::new(AtomicUsize::new(0));
        let seen = expelled.clone();
        s.set_expiration_hook(move |_, _, _| {
            seen.fetch_add(1, Ordering::Relaxed);
        });
        assert_eq!(s.run_expiration(), 1);
        assert_eq!(expelled.load(Ordering::Relaxed), 1);
        assert_eq!(s.get(&4), None);
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn hook_sees_every_finite_record_once() {
        let counts: Arc<std::sync::Mutex<BTreeMap<u64, usize>>> =
            Arc::new(std::sync::Mutex::new(BTreeMap::new()));
        let sink = counts.clone();
        let mut s: ExpirableStore<u64, u32> = ExpirableStore::with_policy(
            Clock::simulated(0),
            0,
            SweepPolicy::Cadence { every_ms: 10 },
        );
        s.set_expiration_hook(move |k, _, _| {
            *sink.lock().unwrap().entry(*k).or_insert(0) += 1;
        });
        let mut finite = 0;
        for k in 0..200u64 {
            let exp = if k % 10 == 0 {
                ExpirationTime::INFINITY
            } else {
                finite += 1;
                ExpirationTime::finite(1 + (k * 7) % 500)
            };
            s.put(k, exp, 0).unwrap();
        }
        for _ in 0..60 {
            s.tick(10);
        }
        let counts = counts.lock().unwrap();
        assert_eq!(counts.len(), finite);
        assert!(counts.values().all(|&c| c == 1));
    }

    #[test]
    fn staleness_bounded_by_cadence() {
        let cadence = 25u64;
        let mut s: ExpirableStore<u64, u32> = ExpirableStore::with_policy(
            Clock::simulated(0),
            0,
            SweepPolicy::Cadence { every_ms: cadence },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for step in 0..400u64 {
            let now = s.now_ms();
            let key = step;
            let life = rng.random_range(1..100u64);
            s.put(key, ExpirationTime::finite(now + life), 0).unwrap();
            s.tick(rng.random_range(1..=5));
            let now = s.now_ms();
            // No record may linger more than `cadence` past its expiration.
            let snap = s.snapshot();
            for (_, exp, _) in snap.iter() {
                if let Some(e) = exp.millis() {
                    assert!(e + cadence >= now, "stale record: exp {e}, now {now}");
                }
            }
        }
    }

    #[test]
    fn min_expiration_policy_sweeps_eagerly() {
        let mut s: ExpirableStore<u64, u32> =
            ExpirableStore::with_policy(Clock::simulated(0), 0, SweepPolicy::OnMinExpiration);
        s.put(1, ExpirationTime::finite(5), 0).unwrap();
        s.put(2, ExpirationTime::finite(50), 0).unwrap();
        s.tick(6);
        assert_eq!(s.len(), 1, "due record should be swept by the tick");
        s.tick(100);
        assert_eq!(s.len(), 0);
    }

    #[test]
    fn visibility_matches_time_filtered_oracle() {
        let mut s = sim_store(3);
        let mut oracle: BTreeMap<u64, (u64, u32)> = BTreeMap::new(); // key -> (exp, payload)
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..1000u64 {
            let now = s.now_ms();
            let key = rng.random_range(0..500u64);
            let life = rng.random_range(1..200u64);
            let payload = i as u32;
            match s.put(key, ExpirationTime::finite(now + life), payload) {
                Ok(PutOutcome::Inserted) => {
                    oracle.insert(key, (now + life, payload));
                }
                Ok(PutOutcome::KeyExists) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
            if rng.random_bool(0.3) {
                s.tick(rng.random_range(1..30));
            }
            let now = s.now_ms();
            oracle.retain(|_, (exp, _)| *exp > now);
            // Compare a handful of random point reads plus a full scan.
            for _ in 0..5 {
                let probe = rng.random_range(0..500u64);
                assert_eq!(s.get(&probe), oracle.get(&probe).map(|(_, p)| p));
            }
            let scanned: Vec<(u64, u32)> = s.scan(&0, &500).unwrap().map(|(k, p)| (*k, *p)).collect();
            let expected: Vec<(u64, u32)> = oracle.iter().map(|(k, (_, p))| (*k, *p)).collect();
            assert_eq!(scanned, expected);
        }
    }
}
