use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::Error;

/// Prime used for hash arithmetic unless a caller picks another.
pub const DEFAULT_HASH_PRIME: u64 = (1 << 61) - 1;

/// h(x) = ((a·x + b) mod p) mod range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PairwiseHash {
    pub a: u64,
    pub b: u64,
    pub p: u64,
    pub range: u64,
}

impl PairwiseHash {
    pub fn new(a: u64, b: u64, p: u64, range: u64) -> Result<Self, Error> {
        if p < 2 || range == 0 || a % p == 0 || b >= p || a >= p {
            return Err(Error::InvalidParams("hash needs 0 < a < p, b < p, p >= 2, range >= 1"));
        }
        Ok(Self { a, b, p, range })
    }

    /// Random member of the family over `[0, DEFAULT_HASH_PRIME)` into `[range]`.
    pub fn random<R: RngCore + ?Sized>(range: u64, rng: &mut R) -> Self {
        let p = DEFAULT_HASH_PRIME;
        let a = 1 + rng.next_u64() % (p - 1);
        let b = rng.next_u64() % p;
        Self { a, b, p, range }
    }

    #[inline]
    pub fn eval(&self, x: u64) -> u64 {
        let v = (self.a as u128 * x as u128 + self.b as u128) % self.p as u128;
        (v % self.range as u128) as u64
    }

    /// A hash can only be trusted on items below its prime.
    pub fn covers(&self, universe: u64) -> bool {
        universe <= self.p
    }
}

/// Random search over the pairwise family for a hash injective on `items`.
///
/// Returns the hash and the 1-based trial on which it was found.
pub fn find_perfect_hash<R: RngCore + ?Sized>(
    items: &[u64],
    range: u64,
    max_trials: u32,
    rng: &mut R,
) -> Result<(PairwiseHash, u32), Error> {
    let mut buckets: Vec<u64> = Vec::with_capacity(items.len());
    for trial in 1..=max_trials {
        let h = PairwiseHash::random(range, rng);
        buckets.clear();
        buckets.extend(items.iter().map(|&x| h.eval(x)));
        buckets.sort_unstable();
        if buckets.windows(2).all(|w| w[0] != w[1]) {
            return Ok((h, trial));
        }
    }
    Err(Error::PerfectHashNotFound { trials: max_trials })
}
