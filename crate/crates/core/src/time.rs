//! Expiration timestamps and the extended comparison used by treap rebalancing.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A tuple's expiration time: a finite millisecond timestamp or infinity.
///
/// Infinity marks records that never expire and only leave the database
/// through an explicit removal. The derived `Ord` gives the deterministic
/// order: finite values compare numerically, every finite value is less
/// than infinity, and infinity compares equal to itself.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExpirationTime(u64);

const INFINITY_REPR: u64 = u64::MAX;

impl ExpirationTime {
    pub const INFINITY: ExpirationTime = ExpirationTime(INFINITY_REPR);

    /// A finite timestamp in milliseconds since the epoch.
    ///
    /// Panics if `ms == u64::MAX`, which is reserved as the infinity
    /// sentinel and is about 585 million years past any real clock.
    #[inline]
    pub fn finite(ms: u64) -> ExpirationTime {
        assert!(ms != INFINITY_REPR, "finite expiration out of range");
        ExpirationTime(ms)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0 != INFINITY_REPR
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0 == INFINITY_REPR
    }

    /// The millisecond value, or `None` for infinity.
    #[inline]
    pub fn millis(self) -> Option<u64> {
        if self.is_finite() {
            Some(self.0)
        } else {
            None
        }
    }

    /// True when this record is stale at time `now_ms`, i.e. expiration ≤ now.
    /// Infinity is never stale.
    #[inline]
    pub fn is_expired_at(self, now_ms: u64) -> bool {
        self.0 <= now_ms && self.0 != INFINITY_REPR
    }
}

impl fmt::Display for ExpirationTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.millis() {
            Some(ms) => write!(f, "{ms}"),
            None => write!(f, "inf"),
        }
    }
}

impl fmt::Debug for ExpirationTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.millis() {
            Some(ms) => write!(f, "Finite({ms})"),
            None => write!(f, "Infinity"),
        }
    }
}

/// Strict order on expiration times extended to infinity.
///
/// Finite values compare numerically and any finite value is less than
/// infinity. Comparing infinity against infinity answers true or false
/// with probability one half from a seeded generator; these coin flips
/// are what keep regions of never-expiring records probabilistically
/// balanced. The generator is owned by whoever updates a treap lineage,
/// so a fixed seed reproduces a run exactly.
pub struct ExtendedComparator {
    rng: ChaCha8Rng,
}

impl ExtendedComparator {
    pub fn new(seed: u64) -> ExtendedComparator {
        ExtendedComparator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `x < y` under the extended order. Infinity vs. infinity is a fresh
    /// fair coin on every call.
    #[inline]
    pub fn lt(&mut self, x: ExpirationTime, y: ExpirationTime) -> bool {
        if x.0 == INFINITY_REPR && y.0 == INFINITY_REPR {
            self.rng.next_u64() & 1 == 1
        } else {
            x.0 < y.0
        }
    }

    /// `x ≤ y`, defined as `!(y < x)` so ties among finite values answer
    /// true and infinity vs. infinity stays a single coin flip.
    #[inline]
    pub fn le(&mut self, x: ExpirationTime, y: ExpirationTime) -> bool {
        !self.lt(y, x)
    }
}

impl fmt::Debug for ExtendedComparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ExtendedComparator")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_order() {
        let a = ExpirationTime::finite(3);
        let b = ExpirationTime::finite(7);
        assert!(a < b);
        assert!(a < ExpirationTime::INFINITY);
        assert_eq!(
            ExpirationTime::INFINITY.cmp(&ExpirationTime::INFINITY),
            std::cmp::Ordering::Equal
        );
        assert_eq!(b.millis(), Some(7));
        assert_eq!(ExpirationTime::INFINITY.millis(), None);
    }

    #[test]
    fn extended_comparator_finite_cases() {
        let mut cmp = ExtendedComparator::new(1);
        let t3 = ExpirationTime::finite(3);
        let t7 = ExpirationTime::finite(7);
        assert!(cmp.lt(t3, t7));
        assert!(!cmp.lt(t7, t3));
        assert!(!cmp.lt(t3, t3));
        assert!(cmp.le(t3, t3));
        assert!(cmp.lt(t3, ExpirationTime::INFINITY));
        assert!(!cmp.lt(ExpirationTime::INFINITY, t3));
    }

    #[test]
    fn infinity_coin_is_fair_and_seeded() {
        let inf = ExpirationTime::INFINITY;
        let mut cmp = ExtendedComparator::new(42);
        let draws: Vec<bool> = (0..1000).map(|_| cmp.lt(inf, inf)).collect();
        let trues = draws.iter().filter(|&&d| d).count();
        assert!((400..=600).contains(&trues), "biased coin: {trues}/1000");

        let mut cmp2 = ExtendedComparator::new(42);
        let again: Vec<bool> = (0..1000).map(|_| cmp2.lt(inf, inf)).collect();
        assert_eq!(draws, again);
    }

    #[test]
    fn expiry_check_honours_infinity() {
        assert!(ExpirationTime::finite(5).is_expired_at(5));
        assert!(!ExpirationTime::finite(6).is_expired_at(5));
        assert!(!ExpirationTime::INFINITY.is_expired_at(u64::MAX - 1));
    }

    #[test]
    #[should_panic(expected = "finite expiration out of range")]
    fn finite_rejects_sentinel() {
        let _ = ExpirationTime::finite(u64::MAX);
    }
}
