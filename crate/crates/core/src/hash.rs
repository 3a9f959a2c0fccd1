//! Key hashing for decorrelating keys from expiration times.

/// Maps 64-bit keys before they enter a treap.
///
/// Treap balance relies on keys and expiration times being statistically
/// independent. When an application's keys correlate with time (sequence
/// numbers, timestamps as keys), `Mixed` destroys key order with an
/// avalanching bijection while preserving equality, at the price of range
/// queries over the original key order. `Identity` keeps keys as-is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyHasher {
    Identity,
    Mixed { seed: u64 },
}

impl KeyHasher {
    #[inline]
    pub fn apply(self, key: u64) -> u64 {
        match self {
            KeyHasher::Identity => key,
            KeyHasher::Mixed { seed } => mix64(key ^ seed),
        }
    }
}

/// SplitMix64 finalizer. Each step (xor-shift, odd multiply) is invertible,
/// so the whole map is a bijection on u64 and distinct keys stay distinct.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn identity_is_identity() {
        assert_eq!(KeyHasher::Identity.apply(12345), 12345);
    }

    #[test]
    fn mixed_destroys_order_preserves_distinctness() {
        let h = KeyHasher::Mixed { seed: 7 };
        let hashed: Vec<u64> = (0..10_000u64).map(|k| h.apply(k)).collect();
        let distinct: HashSet<u64> = hashed.iter().copied().collect();
        assert_eq!(distinct.len(), hashed.len());

        let ascending = hashed.windows(2).filter(|w| w[0] < w[1]).count();
        // Sequential inputs should look unordered after mixing.
        assert!((4000..=6000).contains(&ascending), "ascending pairs: {ascending}");
    }

    #[test]
    fn seeds_give_different_maps() {
        let a = KeyHasher::Mixed { seed: 1 }.apply(99);
        let b = KeyHasher::Mixed { seed: 2 }.apply(99);
        assert_ne!(a, b);
    }
}
