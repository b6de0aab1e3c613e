//! Prime field arithmetic with a runtime modulus.
//!
//! Values are stored in a `u128`. Two Mersenne moduli get dedicated
//! reductions: 2^61-1 is the default and 2^127-1 is the wide fallback used when a
//! scheme's magnitude bound does not fit the default.

use core::fmt;

use rand_core::RngCore;

use crate::error::Error;

pub const MERSENNE_61: u128 = (1 << 61) - 1;
pub const MERSENNE_127: u128 = (1 << 127) - 1;

const LO64: u128 = u64::MAX as u128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Reduction {
    Mersenne61,
    Mersenne127,
    /// q < 2^64: the product of two residues fits in a u128.
    Narrow,
    /// 2^64 <= q < 2^127, not Mersenne: shift-and-subtract on a 256-bit product.
    Wide,
}

/// An element of F_q. Meaningless without the [`PrimeField`] it came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(u128);

impl FieldElement {
    pub const ZERO: Self = Self(0);

    /// Canonical residue in `[0, q)`.
    #[inline]
    pub fn value(self) -> u128 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The field F_q (the `FieldConfig` of the scheme descriptions).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u128,
    red: Reduction,
}

impl Default for PrimeField {
    fn default() -> Self {
        Self::mersenne61()
    }
}

impl PrimeField {
    pub const fn mersenne61() -> Self {
        Self { q: MERSENNE_61, red: Reduction::Mersenne61 }
    }

    pub const fn mersenne127() -> Self {
        Self { q: MERSENNE_127, red: Reduction::Mersenne127 }
    }

    /// Field of prime order `q`. Rejects composites and moduli of 2^127 or more.
    pub fn new(q: u128) -> Result<Self, Error> {
        if q > MERSENNE_127 {
            return Err(Error::ModulusTooLarge);
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(Self::new_unchecked(q))
    }

    fn new_unchecked(q: u128) -> Self {
        let red = match q {
            MERSENNE_61 => Reduction::Mersenne61,
            MERSENNE_127 => Reduction::Mersenne127,
            _ if q <= LO64 => Reduction::Narrow,
            _ => Reduction::Wide,
        };
        Self { q, red }
    }

    #[inline]
    pub fn modulus(&self) -> u128 {
        self.q
    }

    /// Bits needed to write any residue.
    pub fn bits(&self) -> u32 {
        128 - (self.q - 1).leading_zeros()
    }

    /// Width of a residue in the fixed-width wire encoding.
    pub fn byte_len(&self) -> usize {
        (self.bits() as usize).div_ceil(8).max(1)
    }

    #[inline]
    pub fn zero(&self) -> FieldElement {
        FieldElement(0)
    }

    #[inline]
    pub fn one(&self) -> FieldElement {
        FieldElement(1 % self.q)
    }

    /// Builds an element from a residue already known to be below q.
    pub fn element(&self, v: u128) -> Option<FieldElement> {
        (v < self.q).then_some(FieldElement(v))
    }

    #[inline]
    pub fn from_u64(&self, v: u64) -> FieldElement {
        self.from_u128(v as u128)
    }

    #[inline]
    pub fn from_u128(&self, v: u128) -> FieldElement {
        if v < self.q {
            FieldElement(v)
        } else {
            FieldElement(v % self.q)
        }
    }

    /// Negative integers map to q - |x|.
    pub fn from_i128(&self, v: i128) -> FieldElement {
        let mag = self.from_u128(v.unsigned_abs());
        if v < 0 {
            self.neg(mag)
        } else {
            mag
        }
    }

    #[inline]
    pub fn from_i64(&self, v: i64) -> FieldElement {
        self.from_i128(v as i128)
    }

    /// Reads a residue as a signed integer, assuming its magnitude is below q/2.
    pub fn to_signed(&self, a: FieldElement) -> i128 {
        if a.0 > self.q / 2 {
            -((self.q - a.0) as i128)
        } else {
            a.0 as i128
        }
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a.0 + b.0;
        FieldElement(if s >= self.q { s - self.q } else { s })
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.q - b.0 })
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(if a.0 == 0 { 0 } else { self.q - a.0 })
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(match self.red {
            Reduction::Mersenne61 => mul61(a.0 as u64, b.0 as u64) as u128,
            Reduction::Mersenne127 => {
                let (hi, lo) = mul_wide(a.0, b.0);
                reduce127(hi, lo)
            }
            Reduction::Narrow => (a.0 * b.0) % self.q,
            Reduction::Wide => {
                let (hi, lo) = mul_wide(a.0, b.0);
                reduce_generic(hi, lo, self.q)
            }
        })
    }

    /// Multiplication by a small machine integer, cheaper than [`Self::mul`].
    #[inline]
    pub fn mul_small(&self, a: FieldElement, k: u64) -> FieldElement {
        let k = k as u128;
        FieldElement(match self.red {
            Reduction::Mersenne61 => {
                // a < 2^61, k < 2^64: the product is below 2^125.
                let p = a.0 * k;
                reduce61((p & MERSENNE_61) + (p >> 61))
            }
            Reduction::Mersenne127 => {
                let lo = (a.0 & LO64) * k;
                let hi = (a.0 >> 64) * k;
                // hi * 2^64 = (hi >> 63) * 2^127 + (hi mod 2^63) * 2^64.
                let s = (lo & MERSENNE_127) + (lo >> 127) + ((hi & ((1 << 63) - 1)) << 64) + (hi >> 63);
                fold127(s)
            }
            Reduction::Narrow => (a.0 * (k % self.q)) % self.q,
            Reduction::Wide => return self.mul(a, self.from_u128(k)),
        })
    }

    #[inline]
    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn pow(&self, mut base: FieldElement, mut e: u128) -> FieldElement {
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.square(base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a.0 == 0 {
            None
        } else {
            Some(self.pow(a, self.q - 2))
        }
    }

    /// Uniform element drawn by rejection sampling.
    pub fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        let mask = if self.bits() >= 128 { u128::MAX } else { (1u128 << self.bits()) - 1 };
        loop {
            let v = (((rng.next_u64() as u128) << 64) | rng.next_u64() as u128) & mask;
            if v < self.q {
                return FieldElement(v);
            }
        }
    }

    /// Uniform nonzero element.
    pub fn random_nonzero<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        loop {
            let v = self.random(rng);
            if !v.is_zero() {
                return v;
            }
        }
    }

    /// L_x(r) over the domain {0, .., c-1}.
    pub fn lagrange_basis_at(&self, c: u64, x: u64, r: FieldElement) -> Result<FieldElement, Error> {
        if (c as u128) >= self.q {
            return Err(Error::DomainTooLarge { domain: c, modulus: self.q });
        }
        if x >= c {
            return Err(Error::IndexOutOfDomain { index: x, domain: c });
        }
        let mut num = self.one();
        let mut den = self.one();
        for xp in 0..c {
            if xp == x {
                continue;
            }
            num = self.mul(num, self.sub(r, self.from_u64(xp)));
            den = self.mul(den, self.sub(self.from_u64(x), self.from_u64(xp)));
        }
        // den is a product of nonzero residues because c < q.
        Ok(self.mul(num, self.inv(den).expect("nonzero")))
    }
}

/// Smallest prime q with q >= min_size (and q >= 2).
pub fn make_field(min_size: u128) -> Result<PrimeField, Error> {
    let mut q = min_size.max(2);
    while !is_prime(q) {
        q = q.checked_add(1).ok_or(Error::ModulusTooLarge)?;
        if q > MERSENNE_127 {
            return Err(Error::ModulusTooLarge);
        }
    }
    if q > MERSENNE_127 {
        return Err(Error::ModulusTooLarge);
    }
    Ok(PrimeField::new_unchecked(q))
}

#[inline]
fn mul61(a: u64, b: u64) -> u64 {
    let p = a as u128 * b as u128;
    let s = (p as u64 & MERSENNE_61 as u64) + (p >> 61) as u64;
    let s = (s & MERSENNE_61 as u64) + (s >> 61);
    if s >= MERSENNE_61 as u64 {
        s - MERSENNE_61 as u64
    } else {
        s
    }
}

#[inline]
fn reduce61(p: u128) -> u128 {
    // p < 2^122 for reduced operands, so two folds suffice.
    let s = (p & MERSENNE_61) + (p >> 61);
    let s = (s & MERSENNE_61) + (s >> 61);
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[inline]
fn fold127(s: u128) -> u128 {
    let s = (s & MERSENNE_127) + (s >> 127);
    if s >= MERSENNE_127 {
        s - MERSENNE_127
    } else {
        s
    }
}

#[inline]
fn reduce127(hi: u128, lo: u128) -> u128 {
    // 2^128 = 2 (mod 2^127 - 1); hi < 2^126 for reduced operands.
    let s = (hi << 1) + (lo & MERSENNE_127) + (lo >> 127);
    fold127(s)
}

/// Full 256-bit product as (high, low) halves.
#[inline]
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a1, a0) = (a >> 64, a & LO64);
    let (b1, b0) = (b >> 64, b & LO64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & LO64) + (p10 & LO64);
    let lo = (p00 & LO64) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

fn reduce_generic(hi: u128, lo: u128, q: u128) -> u128 {
    let mut r: u128 = 0;
    for i in (0..256).rev() {
        let bit = if i >= 128 { (hi >> (i - 128)) & 1 } else { (lo >> i) & 1 };
        // r < q < 2^127 so the shift cannot overflow.
        r = (r << 1) | bit;
        if r >= q {
            r -= q;
        }
    }
    r
}

fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    if m <= LO64 {
        (a % m) * (b % m) % m
    } else {
        let (hi, lo) = mul_wide(a % m, b % m);
        reduce_generic(hi, lo, m)
    }
}

fn pow_mod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

const SMALL_PRIMES: [u128; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Miller-Rabin. The first twelve prime bases are deterministic below 3.3e24;
/// above that all 25 bases are used, leaving an error below 4^-25.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let bases: &[u128] = if n < 3_317_044_064_679_887_385_961_981 { &SMALL_PRIMES[..12] } else { &SMALL_PRIMES };
    'witness: for &a in bases {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn trial_division(n: u128) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn make_field_examples() {
        assert_eq!(make_field(10).unwrap().modulus(), 11);
        assert_eq!(make_field(4625).unwrap().modulus(), 4637);
        assert_eq!(make_field(2).unwrap().modulus(), 2);
        assert_eq!(make_field(MERSENNE_61).unwrap(), PrimeField::mersenne61());
        // oracle: nothing in [4625, 4637) is prime
        assert!((4625..4637).all(|n| !trial_division(n)));
        assert!(trial_division(4637));
    }

    #[test]
    fn mersenne_exponents_are_prime() {
        assert!(is_prime(MERSENNE_61));
        assert!(is_prime(MERSENNE_127));
        assert!(!is_prime((1 << 67) - 1));
        // Carmichael numbers
        for c in [561u128, 1105, 1729, 2465, 2821, 6601] {
            assert!(!is_prime(c));
        }
    }

    #[test]
    fn miller_rabin_agrees_with_trial_division() {
        for n in 0..20_000u128 {
            assert_eq!(is_prime(n), trial_division(n), "n = {n}");
        }
    }

    #[test]
    fn small_field_axioms_exhaustive() {
        let f = PrimeField::new(11).unwrap();
        for a in 0..11 {
            let a = f.from_u64(a);
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
            }
            for b in 0..11 {
                let b = f.from_u64(b);
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.sub(f.add(a, b), b), a);
                for c in 0..11 {
                    let c = f.from_u64(c);
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                }
            }
        }
        assert!(f.inv(f.zero()).is_none());
    }

    #[test]
    fn reductions_agree_with_generic_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in [PrimeField::mersenne61(), PrimeField::mersenne127()] {
            for _ in 0..2000 {
                let a = f.random(&mut rng);
                let b = f.random(&mut rng);
                let (hi, lo) = mul_wide(a.value(), b.value());
                assert_eq!(f.mul(a, b).value(), reduce_generic(hi, lo, f.modulus()));
                let k = rng.next_u64();
                assert_eq!(f.mul_small(a, k), f.mul(a, f.from_u64(k)));
            }
            let top = f.from_u128(f.modulus() - 1);
            assert_eq!(f.mul(top, top), f.one());
            assert_eq!(f.mul_small(top, u64::MAX), f.mul(top, f.from_u64(u64::MAX)));
        }
    }

    #[test]
    fn wide_non_mersenne_field() {
        let f = make_field(1 << 100).unwrap();
        assert!(f.modulus() > 1 << 100);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = f.random_nonzero(&mut rng);
            assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
        }
    }

    #[test]
    fn signed_round_trip() {
        for f in [PrimeField::new(101).unwrap(), PrimeField::mersenne61(), PrimeField::mersenne127()] {
            for v in [-50i128, -1, 0, 1, 50] {
                assert_eq!(f.to_signed(f.from_i128(v)), v);
            }
        }
        let f = PrimeField::new(11).unwrap();
        assert_eq!(f.from_i128(-3).value(), 8);
    }

    #[test]
    fn lagrange_examples() {
        let f = PrimeField::new(11).unwrap();
        assert_eq!(f.lagrange_basis_at(2, 0, f.from_u64(5)).unwrap().value(), 7);
        assert_eq!(f.lagrange_basis_at(5, 3, f.from_u64(3)).unwrap(), f.one());
        assert_eq!(f.lagrange_basis_at(5, 3, f.from_u64(1)).unwrap(), f.zero());
        assert!(f.lagrange_basis_at(11, 0, f.zero()).is_err());
    }

    #[test]
    fn lagrange_partition_of_unity() {
        let f = PrimeField::mersenne61();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for c in 1..12 {
            let r = f.random(&mut rng);
            let total = (0..c).fold(f.zero(), |acc, x| f.add(acc, f.lagrange_basis_at(c, x, r).unwrap()));
            assert_eq!(total, f.one());
        }
    }

    #[test]
    fn random_is_deterministic_and_covers_f2() {
        let f = PrimeField::mersenne61();
        let draw = |seed| f.random(&mut ChaCha8Rng::seed_from_u64(seed));
        for seed in [1, 2, 3] {
            assert_eq!(draw(seed), draw(seed));
        }
        let f2 = PrimeField::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seen = [false; 2];
        for _ in 0..100 {
            seen[f2.random(&mut rng).value() as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn random_is_uniform_on_f11() {
        let f = PrimeField::new(11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0u32; 11];
        let draws = 100_000;
        for _ in 0..draws {
            counts[f.random(&mut rng).value() as usize] += 1;
        }
        let expected = draws as f64 / 11.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 10 degrees of freedom, p = 0.001 critical value
        assert!(chi2 < 29.59, "chi2 = {chi2}");
    }
}
