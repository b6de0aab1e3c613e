//! Bucket purity: is every bucket of a bucketed stream occupied by at most
//! one distinct item?
//!
//! With u_b, v_b, w_b the zeroth, first and second item moments of bucket b,
//! v_b² ≤ u_b·w_b for nonnegative counts with equality exactly when b is pure,
//! so Σ_b z_b(v_b² - u_b w_b) = 0 certifies purity of every bucket with
//! z_b > 0. Signed counts break that inequality; the public-coin variant
//! fingerprints, per bucket and per bit position, the items with that bit
//! clear and those with it set, and a pure bucket makes every such pair of
//! fingerprints have a zero product.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Reject};
use crate::field::{FieldElement as Fe, PrimeField};
use crate::protocol::{Space, StreamProver, StreamVerifier};
use crate::streams::{BucketedUpdate, StreamMeta, StreamUpdate};
use crate::sumcheck::{
    prove, shift_answer, tamper_proof, Composition, DenseLayout, DenseParams, DenseVerifier, FieldBound, FrequencyVectors,
    MaskedProduct, MaskedPurityDefect, MaskedSquares, Product, ProofTamper, PurityDefect,
};
use crate::wire::{Reader, Writer};

/// Smallest q that keeps Σ_b z_b(v_b² - u_b w_b) from wrapping: 2·r·(N·n)² + 1,
/// with N = Σ|δ| (the update count for unit streams). 1 for an empty stream.
pub fn purity_field_bound(meta: &StreamMeta, r: u64) -> u128 {
    let nn = (meta.mass.max(meta.len) as u128).saturating_mul(meta.n as u128);
    if nn == 0 {
        return 1;
    }
    nn.saturating_mul(nn).saturating_mul(2 * r as u128).saturating_add(1)
}

/// (vector, delta) contributions of `weight` copies of `item` to (u, v, w).
#[inline]
pub fn moment_deltas(field: &PrimeField, item: u64, weight: Fe) -> [(usize, Fe); 3] {
    let x = field.from_u64(item);
    let v = field.mul(weight, x);
    [(0, weight), (1, v), (2, field.mul(v, x))]
}

/// Dense parameters for a zero test: the value is only compared with 0, so
/// decoding needs no room, but the no-wraparound bound is preferred.
pub fn zero_test_params<G: Composition + ?Sized>(
    field: PrimeField,
    layout: DenseLayout,
    g: &G,
) -> Result<DenseParams, Error> {
    DenseParams::new(field, layout, g, 0)
}

/// Field requirement of a purity instance over `meta` with `r` buckets.
pub fn purity_requirement(meta: &StreamMeta, layout: DenseLayout, degree: usize) -> FieldBound {
    let b = DenseParams::field_bound(layout, degree, 0);
    FieldBound { need: b.need, prefer: b.prefer.max(purity_field_bound(meta, layout.n)) }
}

/// Number of bit positions used for items of [n].
pub fn item_bits(n: u64) -> u64 {
    (64 - n.saturating_sub(1).leading_zeros() as u64).max(1)
}

/// Public coins of the AMA purity test. `omega` weights the extra
/// insertions the collision-list machinery makes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmaCoins {
    pub alpha: Fe,
    pub beta: Fe,
    pub omega: Fe,
}

impl AmaCoins {
    pub const WORDS: u64 = 3;

    pub fn draw<R: RngCore + ?Sized>(field: &PrimeField, rng: &mut R) -> Self {
        Self { alpha: field.random_nonzero(rng), beta: field.random_nonzero(rng), omega: field.random_nonzero(rng) }
    }

    pub fn bits(field: &PrimeField) -> u64 {
        Self::WORDS * field.bits() as u64
    }
}

/// Coordinate map of the AMA vectors: (bucket b, bit j) ↦ b·L + j.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmaLayout {
    pub n: u64,
    pub buckets: u64,
    pub bits: u64,
    alpha_n: Fe,
    beta_n: Fe,
}

impl AmaLayout {
    pub fn new(field: &PrimeField, coins: &AmaCoins, n: u64, buckets: u64) -> Self {
        Self {
            n,
            buckets,
            bits: item_bits(n),
            alpha_n: field.pow(coins.alpha, n as u128),
            beta_n: field.pow(coins.beta, n as u128),
        }
    }

    pub fn coordinates(&self) -> u64 {
        self.buckets * self.bits
    }

    /// Calls `emit(coordinate, vector, delta)` for the L coordinates an update
    /// touches: vector 0 takes α^(n(bL+j)+x) where bit j of x is clear,
    /// vector 1 takes β^(n(bL+j)+x) where it is set.
    pub fn contributions(&self, field: &PrimeField, coins: &AmaCoins, bucket: u64, item: u64, weight: Fe, mut emit: impl FnMut(u64, usize, Fe)) {
        let base = bucket * self.bits;
        let mut za = field.mul(weight, field.mul(field.pow(coins.alpha, item as u128), field.pow(self.alpha_n, base as u128)));
        let mut ob = field.mul(weight, field.mul(field.pow(coins.beta, item as u128), field.pow(self.beta_n, base as u128)));
        for j in 0..self.bits {
            if (item >> j) & 1 == 0 {
                emit(base + j, 0, za);
            } else {
                emit(base + j, 1, ob);
            }
            za = field.mul(za, self.alpha_n);
            ob = field.mul(ob, self.beta_n);
        }
    }
}

/// Verifier of a purity instance. `G` is [`PurityDefect`] (every bucket) or
/// [`MaskedPurityDefect`] (buckets with a positive mask).
#[derive(Clone, Debug)]
pub struct PurityVerifier<G> {
    pub dense: DenseVerifier<G>,
}

impl<G: Composition> PurityVerifier<G> {
    pub fn add(&mut self, bucket: u64, item: u64, weight: Fe) {
        let d = moment_deltas(&self.dense.params().field, item, weight);
        self.dense.update_shared(bucket, &d);
    }

    /// [`Self::add`] with a precomputed column and Lagrange weight.
    pub fn add_weighted(&mut self, column: u64, item: u64, weight: Fe, w: Fe) {
        for (j, d) in moment_deltas(&self.dense.params().field, item, weight) {
            self.dense.add_weighted(j, column, d, w);
        }
    }

    pub fn verify(&self, reader: &mut Reader<'_>) -> Result<bool, Reject> {
        let proof = reader.poly(&self.dense.params().field, self.dense.params().proof_degree_bound())?;
        Ok(self.dense.verify(&proof)?.is_zero())
    }
}

impl PurityVerifier<MaskedPurityDefect> {
    pub fn mask(&mut self, bucket: u64, count: Fe) {
        self.dense.update(3, bucket, count);
    }
}

/// Prover mirror of [`PurityVerifier`].
#[derive(Clone, Debug)]
pub struct PurityVectors {
    field: PrimeField,
    pub vectors: FrequencyVectors,
}

impl PurityVectors {
    pub fn new(field: PrimeField, masked: bool) -> Self {
        Self { field, vectors: FrequencyVectors::new(field, if masked { 4 } else { 3 }) }
    }

    pub fn add(&mut self, bucket: u64, item: u64, weight: Fe) {
        for (j, d) in moment_deltas(&self.field, item, weight) {
            self.vectors.add(j, bucket, d);
        }
    }

    pub fn mask(&mut self, bucket: u64, count: Fe) {
        self.vectors.add(3, bucket, count);
    }
}

/// Verifier of the public-coin purity test, optionally restricted by a bucket mask.
#[derive(Clone, Debug)]
pub struct AmaVerifier<G> {
    pub dense: DenseVerifier<G>,
    pub coins: AmaCoins,
    pub layout: AmaLayout,
}

impl<G: Composition> AmaVerifier<G> {
    /// Vector offset: 1 when slot 0 holds the mask.
    fn offset(&self) -> usize {
        self.dense.params().arity - 2
    }

    pub fn add(&mut self, bucket: u64, item: u64, weight: Fe) {
        let field = self.dense.params().field;
        let off = self.offset();
        let (layout, coins) = (self.layout, self.coins);
        // a bucket's L coordinates are consecutive, so rows repeat
        let mut cached: Option<(u64, Fe)> = None;
        let dense = &mut self.dense;
        layout.contributions(&field, &coins, bucket, item, weight, |coord, v, d| {
            let row = coord / dense.params().layout.c_v;
            let w = match cached {
                Some((x, w)) if x == row => w,
                _ => {
                    let w = dense.item_weight(coord).1;
                    cached = Some((row, w));
                    w
                }
            };
            dense.add_weighted(off + v, coord % dense.params().layout.c_v, d, w);
        });
    }

    pub fn verify(&self, reader: &mut Reader<'_>) -> Result<bool, Reject> {
        let proof = reader.poly(&self.dense.params().field, self.dense.params().proof_degree_bound())?;
        Ok(self.dense.verify(&proof)?.is_zero())
    }
}

impl AmaVerifier<MaskedProduct> {
    /// Constrains bucket b: the mask is spread over its L coordinates.
    pub fn mask(&mut self, bucket: u64, count: Fe) {
        for j in 0..self.layout.bits {
            self.dense.update(0, bucket * self.layout.bits + j, count);
        }
    }
}

/// Prover mirror of [`AmaVerifier`].
#[derive(Clone, Debug)]
pub struct AmaVectors {
    field: PrimeField,
    coins: AmaCoins,
    layout: AmaLayout,
    masked: bool,
    pub vectors: FrequencyVectors,
}

impl AmaVectors {
    pub fn new(field: PrimeField, coins: AmaCoins, layout: AmaLayout, masked: bool) -> Self {
        Self { field, coins, layout, masked, vectors: FrequencyVectors::new(field, if masked { 3 } else { 2 }) }
    }

    pub fn add(&mut self, bucket: u64, item: u64, weight: Fe) {
        let off = self.masked as usize;
        let vectors = &mut self.vectors;
        self.layout.contributions(&self.field, &self.coins, bucket, item, weight, |coord, v, d| vectors.add(off + v, coord, d));
    }

    pub fn mask(&mut self, bucket: u64, count: Fe) {
        for j in 0..self.layout.bits {
            self.vectors.add(0, bucket * self.layout.bits + j, count);
        }
    }
}

/// Input of the masked schemes: the stream, then the mask entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Masked<U> {
    Update(U),
    Mask { index: u64, count: u64 },
}

/// Shared parameters of the standalone purity schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PurityParams {
    pub field: PrimeField,
    /// Item universe.
    pub n: u64,
    /// Buckets (or coordinates for SubF₂).
    pub r: u64,
    pub c_v: u64,
}

impl PurityParams {
    /// Picks the field from the stream's size parameters unless one is given.
    pub fn new(meta: &StreamMeta, r: u64, c_v: u64, field: Option<PrimeField>) -> Result<Self, Error> {
        if r == 0 || c_v == 0 {
            return Err(Error::InvalidParams("need r >= 1 and c_v >= 1"));
        }
        let req = purity_requirement(meta, DenseLayout::with_columns(r, c_v), 3);
        let field = match field {
            Some(f) => {
                req.check(&f)?;
                f
            }
            None => req.select()?,
        };
        Ok(Self { field, n: meta.n, r, c_v })
    }

    fn layout(&self) -> DenseLayout {
        DenseLayout::with_columns(self.r, self.c_v)
    }
}

fn check_bucketed(p: &PurityParams, u: &BucketedUpdate) -> Result<(), Reject> {
    if u.item >= p.n || u.bucket >= p.r {
        return Err(Reject::StreamModel("item or bucket out of range"));
    }
    Ok(())
}

fn read_decision<F: FnOnce(&mut Reader<'_>) -> Result<bool, Reject>>(annotation: &[u8], f: F) -> Result<bool, Reject> {
    let mut r = Reader::new(annotation);
    let out = f(&mut r)?;
    r.finish()?;
    Ok(out)
}

/// Injection: outputs whether every bucket is pure. Strict streams only.
pub struct InjectionVerifier {
    params: PurityParams,
    state: PurityVerifier<PurityDefect>,
}

impl InjectionVerifier {
    pub fn new<R: RngCore + ?Sized>(params: PurityParams, rng: &mut R) -> Result<Self, Error> {
        let dp = zero_test_params(params.field, params.layout(), &PurityDefect)?;
        Ok(Self { params, state: PurityVerifier { dense: DenseVerifier::init(dp, PurityDefect, rng) } })
    }
}

impl StreamVerifier for InjectionVerifier {
    type Update = BucketedUpdate;
    type Output = bool;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        Reader::new(a).finish()
    }

    fn update(&mut self, u: &BucketedUpdate) -> Result<(), Reject> {
        // Strictness is a promise on the input, checked by the caller.
        check_bucketed(&self.params, u)?;
        self.state.add(u.bucket, u.item, self.params.field.from_i64(u.delta));
        Ok(())
    }

    fn finish(self, a: &[u8]) -> Result<bool, Reject> {
        read_decision(a, |r| self.state.verify(r))
    }

    fn space(&self) -> Space {
        self.state.dense.space()
    }
}

/// SubInjection: purity of the buckets with a positive mask entry.
pub struct SubInjectionVerifier {
    params: PurityParams,
    state: PurityVerifier<MaskedPurityDefect>,
    masking: bool,
}

impl SubInjectionVerifier {
    pub fn new<R: RngCore + ?Sized>(params: PurityParams, rng: &mut R) -> Result<Self, Error> {
        let dp = zero_test_params(params.field, params.layout(), &MaskedPurityDefect)?;
        Ok(Self { params, state: PurityVerifier { dense: DenseVerifier::init(dp, MaskedPurityDefect, rng) }, masking: false })
    }
}

impl StreamVerifier for SubInjectionVerifier {
    type Update = Masked<BucketedUpdate>;
    type Output = bool;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        Reader::new(a).finish()
    }

    fn update(&mut self, u: &Masked<BucketedUpdate>) -> Result<(), Reject> {
        match *u {
            Masked::Update(b) => {
                if self.masking {
                    return Err(Reject::StreamModel("stream update after the mask"));
                }
                check_bucketed(&self.params, &b)?;
                self.state.add(b.bucket, b.item, self.params.field.from_i64(b.delta));
            }
            Masked::Mask { index, count } => {
                if index >= self.params.r {
                    return Err(Reject::StreamModel("mask index out of range"));
                }
                self.masking = true;
                self.state.mask(index, self.params.field.from_u64(count));
            }
        }
        Ok(())
    }

    fn finish(self, a: &[u8]) -> Result<bool, Reject> {
        read_decision(a, |r| self.state.verify(r))
    }

    fn space(&self) -> Space {
        self.state.dense.space() + Space::aux(1)
    }
}

/// SubF₂: Σ_i z_i f_i² for any turnstile stream.
pub struct SubF2Verifier {
    n: u64,
    dense: DenseVerifier<MaskedSquares>,
    masking: bool,
    mass: u128,
    mask_total: u128,
    mass_limit: u128,
    mask_limit: u128,
}

/// Dense parameters of a standalone SubF₂ instance under declared bounds.
pub fn subf2_params(meta: &StreamMeta, mask_total: u64, c_v: u64, field: Option<PrimeField>) -> Result<DenseParams, Error> {
    let g = MaskedSquares(1);
    let bound = g.magnitude_bound(&[meta.mass as u128, mask_total as u128]);
    let layout = DenseLayout::with_columns(meta.n, c_v);
    let field = match field {
        Some(f) => f,
        None => DenseParams::field_bound(layout, 3, bound).select()?,
    };
    DenseParams::new(field, layout, &g, bound)
}

impl SubF2Verifier {
    /// `mass` and `mask_total` are the declared Σ|δ| and Σ z the bound o was computed from.
    pub fn new<R: RngCore + ?Sized>(params: DenseParams, mass: u64, mask_total: u64, rng: &mut R) -> Self {
        Self {
            n: params.layout.n,
            dense: DenseVerifier::init(params, MaskedSquares(1), rng),
            masking: false,
            mass: 0,
            mask_total: 0,
            mass_limit: mass as u128,
            mask_limit: mask_total as u128,
        }
    }
}

impl StreamVerifier for SubF2Verifier {
    type Update = Masked<StreamUpdate>;
    type Output = i128;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        Reader::new(a).finish()
    }

    fn update(&mut self, u: &Masked<StreamUpdate>) -> Result<(), Reject> {
        match *u {
            Masked::Update(s) => {
                if self.masking || s.item >= self.n {
                    return Err(Reject::StreamModel("update after the mask or outside the universe"));
                }
                self.mass += s.delta.unsigned_abs() as u128;
                if self.mass > self.mass_limit {
                    return Err(Reject::StreamModel("stream exceeds its declared mass"));
                }
                self.dense.update_int(0, s.item, s.delta);
            }
            Masked::Mask { index, count } => {
                if index >= self.n {
                    return Err(Reject::StreamModel("mask index out of range"));
                }
                self.masking = true;
                self.mask_total += count as u128;
                if self.mask_total > self.mask_limit {
                    return Err(Reject::StreamModel("mask exceeds its declared total"));
                }
                let c = self.dense.params().field.from_u64(count);
                self.dense.update(1, index, c);
            }
        }
        Ok(())
    }

    fn finish(self, a: &[u8]) -> Result<i128, Reject> {
        let mut r = Reader::new(a);
        let out = self.dense.verify_bytes(&mut r)?;
        r.finish()?;
        Ok(out)
    }

    fn space(&self) -> Space {
        self.dense.space() + Space::aux(3)
    }
}

/// Public-coin purity test for signed streams.
pub struct AmaInjectionVerifier {
    params: PurityParams,
    state: AmaVerifier<Product>,
}

/// Field requirement of the public-coin test: besides the interpolation nodes,
/// q should dwarf the n²·r·L degree of the identity in α and β.
pub fn ama_requirement(n: u64, r: u64, c_v: u64) -> FieldBound {
    let coords = r * item_bits(n);
    let b = DenseParams::field_bound(DenseLayout::with_columns(coords, c_v), 3, 0);
    let degree = (n as u128).saturating_mul(n as u128).saturating_mul(coords as u128);
    FieldBound { need: b.need, prefer: b.prefer.max(degree.saturating_mul(1 << 20)) }
}

impl AmaInjectionVerifier {
    pub fn new<R: RngCore + ?Sized>(params: PurityParams, coins: AmaCoins, rng: &mut R) -> Result<Self, Error> {
        let layout = AmaLayout::new(&params.field, &coins, params.n, params.r);
        let dp = zero_test_params(params.field, DenseLayout::with_columns(layout.coordinates(), params.c_v), &Product)?;
        Ok(Self { params, state: AmaVerifier { dense: DenseVerifier::init(dp, Product, rng), coins, layout } })
    }
}

impl StreamVerifier for AmaInjectionVerifier {
    type Update = BucketedUpdate;
    type Output = bool;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        Reader::new(a).finish()
    }

    fn update(&mut self, u: &BucketedUpdate) -> Result<(), Reject> {
        check_bucketed(&self.params, u)?;
        self.state.add(u.bucket, u.item, self.params.field.from_i64(u.delta));
        Ok(())
    }

    fn finish(self, a: &[u8]) -> Result<bool, Reject> {
        read_decision(a, |r| self.state.verify(r))
    }

    fn space(&self) -> Space {
        // α^n and β^n are derived from the coins; the coins themselves are
        // charged by the caller.
        self.state.dense.space() + Space::field(2, self.params.field.bits())
    }
}

/// Which purity scheme a [`PurityProver`] serves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PurityKind {
    Injection,
    SubInjection,
    Ama(AmaCoins),
}

/// Online prover for the three purity decision schemes.
pub struct PurityProver<R> {
    params: PurityParams,
    kind: PurityKind,
    moments: PurityVectors,
    ama: Option<AmaVectors>,
    tamper: ProofTamper,
    rng: R,
}

impl<R: RngCore> PurityProver<R> {
    pub fn new(params: PurityParams, kind: PurityKind, tamper: ProofTamper, rng: R) -> Self {
        let ama = match kind {
            PurityKind::Ama(coins) => {
                Some(AmaVectors::new(params.field, coins, AmaLayout::new(&params.field, &coins, params.n, params.r), false))
            }
            _ => None,
        };
        Self { moments: PurityVectors::new(params.field, kind == PurityKind::SubInjection), params, kind, ama, tamper, rng }
    }

    fn add(&mut self, u: &BucketedUpdate) {
        let w = self.params.field.from_i64(u.delta);
        match &mut self.ama {
            Some(a) => a.add(u.bucket, u.item, w),
            None => self.moments.add(u.bucket, u.item, w),
        }
    }

    fn proof(&mut self) -> Vec<u8> {
        let field = self.params.field;
        let (dp, b) = match (&self.ama, self.kind) {
            (Some(a), _) => {
                let layout = DenseLayout::with_columns(a.layout.coordinates(), self.params.c_v);
                let dp = zero_test_params(field, layout, &Product).expect("checked by the verifier");
                (dp, prove(&dp, &Product, a.vectors.vectors()))
            }
            (None, PurityKind::SubInjection) => {
                let dp = zero_test_params(field, self.params.layout(), &MaskedPurityDefect).expect("checked by the verifier");
                (dp, prove(&dp, &MaskedPurityDefect, self.moments.vectors.vectors()))
            }
            _ => {
                let dp = zero_test_params(field, self.params.layout(), &PurityDefect).expect("checked by the verifier");
                (dp, prove(&dp, &PurityDefect, self.moments.vectors.vectors()))
            }
        };
        let b = match self.tamper {
            ProofTamper::None => b,
            ProofTamper::Perturb => tamper_proof(&dp, &b, &mut self.rng),
            ProofTamper::OffByOne => {
                // Claim the opposite decision.
                let value = b.sum_over_range(&field, dp.layout.c_a);
                let target = if value.is_zero() { field.one() } else { field.zero() };
                shift_answer(&dp, &b, field.sub(target, value), &mut self.rng)
            }
        };
        let mut w = Writer::new();
        w.poly(&field, &b);
        w.into_bytes()
    }
}

impl<R: RngCore> StreamProver for PurityProver<R> {
    type Update = Masked<BucketedUpdate>;

    fn start(&mut self) -> Vec<u8> {
        Vec::new()
    }

    fn observe(&mut self, u: &Masked<BucketedUpdate>) -> Option<Vec<u8>> {
        match *u {
            Masked::Update(b) => self.add(&b),
            Masked::Mask { index, count } => self.moments.mask(index, self.params.field.from_u64(count)),
        }
        None
    }

    fn finish(&mut self) -> Vec<u8> {
        self.proof()
    }
}

/// Adapts a prover over masked input to the unmasked schemes.
pub struct Unmasked<P>(pub P);

impl<P: StreamProver<Update = Masked<BucketedUpdate>>> StreamProver for Unmasked<P> {
    type Update = BucketedUpdate;

    fn start(&mut self) -> Vec<u8> {
        self.0.start()
    }

    fn observe(&mut self, u: &BucketedUpdate) -> Option<Vec<u8>> {
        self.0.observe(&Masked::Update(*u))
    }

    fn finish(&mut self) -> Vec<u8> {
        self.0.finish()
    }
}

/// Online prover for SubF₂.
pub struct SubF2Prover<R> {
    params: DenseParams,
    vectors: FrequencyVectors,
    tamper: ProofTamper,
    rng: R,
}

impl<R: RngCore> SubF2Prover<R> {
    pub fn new(params: DenseParams, tamper: ProofTamper, rng: R) -> Self {
        Self { vectors: FrequencyVectors::new(params.field, 2), params, tamper, rng }
    }
}

impl<R: RngCore> StreamProver for SubF2Prover<R> {
    type Update = Masked<StreamUpdate>;

    fn start(&mut self) -> Vec<u8> {
        Vec::new()
    }

    fn observe(&mut self, u: &Masked<StreamUpdate>) -> Option<Vec<u8>> {
        match *u {
            Masked::Update(s) => self.vectors.add_int(0, s.item, s.delta),
            Masked::Mask { index, count } => self.vectors.add(1, index, self.params.field.from_u64(count)),
        }
        None
    }

    fn finish(&mut self) -> Vec<u8> {
        let g = MaskedSquares(1);
        let b = prove(&self.params, &g, self.vectors.vectors());
        let b = match self.tamper {
            ProofTamper::None => b,
            ProofTamper::Perturb => tamper_proof(&self.params, &b, &mut self.rng),
            ProofTamper::OffByOne => shift_answer(&self.params, &b, self.params.field.one(), &mut self.rng),
        };
        let mut w = Writer::new();
        w.poly(&self.params.field, &b);
        w.into_bytes()
    }
}
