//! The dense sum-check scheme: a verifier holding one row of each vector's
//! low-degree extension checks a prover's claim for Σ_i g(f¹_i, .., fˡ_i).
//!
//! Items map to a c_a × c_v grid row-major, i ↦ (i / c_v, i % c_v). The
//! verifier keeps f̃ʲ(r, y) for every column y and vector j; the prover sends
//! b(X) = Σ_y g(f̃¹(X, y), ..) and the verifier spot-checks b at r.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Reject};
use crate::field::{FieldElement as Fe, PrimeField, MERSENNE_127, MERSENNE_61};
use crate::poly::{interpolate_consecutive, DensePolynomial};
use crate::protocol::{Space, StreamProver, StreamVerifier};
use crate::wire::{Reader, Writer};

/// A polynomial g applied coordinatewise to the input vectors.
pub trait Composition {
    fn arity(&self) -> usize;
    /// Total degree.
    fn degree(&self) -> usize;
    fn eval(&self, field: &PrimeField, x: &[Fe]) -> Fe;
    /// Upper bound on Σ_i |g(f_i)| given Σ_i |fʲ_i| ≤ l1[j]. Saturates.
    fn magnitude_bound(&self, l1: &[u128]) -> u128;
}

fn sat_pow(b: u128, k: u32) -> u128 {
    b.checked_pow(k).unwrap_or(u128::MAX)
}

/// g(z) = z^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Power(pub u32);

impl Composition for Power {
    fn arity(&self) -> usize {
        1
    }
    fn degree(&self) -> usize {
        self.0 as usize
    }
    fn eval(&self, f: &PrimeField, x: &[Fe]) -> Fe {
        f.pow(x[0], self.0 as u128)
    }
    fn magnitude_bound(&self, l1: &[u128]) -> u128 {
        sat_pow(l1[0], self.0)
    }
}

/// g(a, b) = a·b.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Product;

impl Composition for Product {
    fn arity(&self) -> usize {
        2
    }
    fn degree(&self) -> usize {
        2
    }
    fn eval(&self, f: &PrimeField, x: &[Fe]) -> Fe {
        f.mul(x[0], x[1])
    }
    fn magnitude_bound(&self, l1: &[u128]) -> u128 {
        l1[0].saturating_mul(l1[1])
    }
}

/// g(u, v, w) = v² - u·w.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PurityDefect;

impl Composition for PurityDefect {
    fn arity(&self) -> usize {
        3
    }
    fn degree(&self) -> usize {
        2
    }
    fn eval(&self, f: &PrimeField, x: &[Fe]) -> Fe {
        f.sub(f.square(x[1]), f.mul(x[0], x[2]))
    }
    fn magnitude_bound(&self, l1: &[u128]) -> u128 {
        l1[1].saturating_mul(l1[1]).saturating_add(l1[0].saturating_mul(l1[2]))
    }
}

/// g(u, v, w, z) = z·(v² - u·w).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskedPurityDefect;

impl Composition for MaskedPurityDefect {
    fn arity(&self) -> usize {
        4
    }
    fn degree(&self) -> usize {
        3
    }
    fn eval(&self, f: &PrimeField, x: &[Fe]) -> Fe {
        f.mul(x[3], PurityDefect.eval(f, &x[..3]))
    }
    fn magnitude_bound(&self, l1: &[u128]) -> u128 {
        l1[3].saturating_mul(PurityDefect.magnitude_bound(&l1[..3]))
    }
}

/// g(f¹, .., fᶜ, z) = z·Σ_j (fʲ)².
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskedSquares(pub usize);

impl Composition for MaskedSquares {
    fn arity(&self) -> usize {
        self.0 + 1
    }
    fn degree(&self) -> usize {
        3
    }
    fn eval(&self, f: &PrimeField, x: &[Fe]) -> Fe {
        let s = x[..self.0].iter().fold(f.zero(), |acc, &v| f.add(acc, f.square(v)));
        f.mul(x[self.0], s)
    }
    fn magnitude_bound(&self, l1: &[u128]) -> u128 {
        let s = l1[..self.0].iter().fold(0u128, |acc, &v| acc.saturating_add(v.saturating_mul(v)));
        l1[self.0].saturating_mul(s)
    }
}

/// g(s, a, b) = s·a·b.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskedProduct;

impl Composition for MaskedProduct {
    fn arity(&self) -> usize {
        3
    }
    fn degree(&self) -> usize {
        3
    }
    fn eval(&self, f: &PrimeField, x: &[Fe]) -> Fe {
        f.mul(x[0], f.mul(x[1], x[2]))
    }
    fn magnitude_bound(&self, l1: &[u128]) -> u128 {
        l1[0].saturating_mul(l1[1]).saturating_mul(l1[2])
    }
}

/// g(x) = x[index]^k over `arity` inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Moment {
    pub arity: usize,
    pub index: usize,
    pub k: u32,
}

impl Composition for Moment {
    fn arity(&self) -> usize {
        self.arity
    }
    fn degree(&self) -> usize {
        self.k as usize
    }
    fn eval(&self, f: &PrimeField, x: &[Fe]) -> Fe {
        f.pow(x[self.index], self.k as u128)
    }
    fn magnitude_bound(&self, l1: &[u128]) -> u128 {
        sat_pow(l1[self.index], self.k)
    }
}

/// g(x) = (Σ_j x_j)^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SumMoment {
    pub arity: usize,
    pub k: u32,
}

impl Composition for SumMoment {
    fn arity(&self) -> usize {
        self.arity
    }
    fn degree(&self) -> usize {
        self.k as usize
    }
    fn eval(&self, f: &PrimeField, x: &[Fe]) -> Fe {
        let s = x.iter().fold(f.zero(), |acc, &v| f.add(acc, v));
        f.pow(s, self.k as u128)
    }
    fn magnitude_bound(&self, l1: &[u128]) -> u128 {
        sat_pow(l1.iter().fold(0u128, |a, &b| a.saturating_add(b)), self.k)
    }
}

/// An arbitrary g given as a closure and its declared degree.
#[derive(Clone, Copy)]
pub struct FnComposition<F> {
    pub arity: usize,
    pub degree: usize,
    pub f: F,
}

impl<F: Fn(&PrimeField, &[Fe]) -> Fe> Composition for FnComposition<F> {
    fn arity(&self) -> usize {
        self.arity
    }
    fn degree(&self) -> usize {
        self.degree
    }
    fn eval(&self, field: &PrimeField, x: &[Fe]) -> Fe {
        (self.f)(field, x)
    }
    fn magnitude_bound(&self, _l1: &[u128]) -> u128 {
        u128::MAX
    }
}

/// Requirements on q: the result must fit (`need`), and the full
/// soundness-analysis bound is `prefer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldBound {
    pub need: u128,
    pub prefer: u128,
}

impl FieldBound {
    pub const NONE: FieldBound = FieldBound { need: 2, prefer: 2 };

    pub fn merge(self, o: FieldBound) -> FieldBound {
        FieldBound { need: self.need.max(o.need), prefer: self.prefer.max(o.prefer) }
    }

    /// The smaller Mersenne field meeting `prefer`, else the smaller meeting `need`.
    pub fn select(self) -> Result<PrimeField, Error> {
        let fields = [PrimeField::mersenne61(), PrimeField::mersenne127()];
        for q in [MERSENNE_61, MERSENNE_127] {
            if q >= self.prefer {
                return Ok(if q == MERSENNE_61 { fields[0] } else { fields[1] });
            }
        }
        for (q, f) in [MERSENNE_61, MERSENNE_127].into_iter().zip(fields) {
            if q >= self.need {
                return Ok(f);
            }
        }
        Err(Error::FieldTooSmall { required: self.need })
    }

    pub fn check(self, field: &PrimeField) -> Result<(), Error> {
        if field.modulus() >= self.need {
            Ok(())
        } else {
            Err(Error::FieldTooSmall { required: self.need })
        }
    }
}

/// Shape of the grid: c_a rows of c_v columns covering [n].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenseLayout {
    pub n: u64,
    pub c_a: u64,
    pub c_v: u64,
}

impl DenseLayout {
    pub fn new(n: u64, c_a: u64, c_v: u64) -> Result<Self, Error> {
        if c_a == 0 || c_v == 0 || (c_a as u128) * (c_v as u128) < n as u128 {
            return Err(Error::InvalidParams("need c_a, c_v >= 1 and c_a * c_v >= n"));
        }
        Ok(Self { n, c_a, c_v })
    }

    /// c_a = c_v = ⌈√n⌉.
    pub fn square(n: u64) -> Self {
        let s = ceil_sqrt(n).max(1);
        Self { n, c_a: s, c_v: s }
    }

    /// c_v columns and as few rows as cover [n].
    pub fn with_columns(n: u64, c_v: u64) -> Self {
        let c_v = c_v.max(1);
        Self { n, c_a: n.div_ceil(c_v).max(1), c_v }
    }

    #[inline]
    pub fn locate(&self, item: u64) -> (u64, u64) {
        (item / self.c_v, item % self.c_v)
    }
}

/// ⌈√n⌉ in integer arithmetic.
pub fn ceil_sqrt(n: u64) -> u64 {
    let s = n.isqrt();
    if s * s < n {
        s + 1
    } else {
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenseParams {
    pub field: PrimeField,
    pub layout: DenseLayout,
    pub arity: usize,
    pub degree: usize,
    /// A priori bound o on |F|.
    pub bound: u128,
}

impl DenseParams {
    pub fn new<G: Composition + ?Sized>(field: PrimeField, layout: DenseLayout, g: &G, bound: u128) -> Result<Self, Error> {
        if g.arity() == 0 || g.degree() == 0 {
            return Err(Error::InvalidParams("g needs at least one input and degree >= 1"));
        }
        Self::field_bound(layout, g.degree(), bound).check(&field)?;
        Ok(Self { field, layout, arity: g.arity(), degree: g.degree(), bound })
    }

    /// q must exceed 2o (exact decoding) and the interpolation nodes; the
    /// soundness analysis asks for q > 2d(n+o)².
    pub fn field_bound(layout: DenseLayout, degree: usize, bound: u128) -> FieldBound {
        let nodes = (degree as u128).saturating_mul(layout.c_a as u128 - 1) + 1;
        let need = bound.saturating_mul(2).saturating_add(1).max(nodes + 1).max(layout.c_a as u128 + 1);
        let span = (layout.n as u128).saturating_add(bound);
        let prefer = span.saturating_mul(span).saturating_mul(2 * degree as u128).saturating_add(1).max(need);
        FieldBound { need, prefer }
    }

    /// Default bound n·(Σ|δ|)^d.
    pub fn default_bound(n: u64, mass: u64, degree: usize) -> u128 {
        (n as u128).saturating_mul(sat_pow(mass as u128, degree as u32))
    }

    pub fn proof_degree_bound(&self) -> usize {
        self.degree * (self.layout.c_a as usize - 1)
    }
}

/// Verifier state: r, Π_{x<c_a}(r - x), and rows[j·c_v + y] = f̃ʲ(r, y).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseVerifier<G> {
    params: DenseParams,
    g: G,
    r: Fe,
    w_r: Fe,
    rows: Vec<Fe>,
}

impl<G: Composition> DenseVerifier<G> {
    pub fn init<R: RngCore + ?Sized>(params: DenseParams, g: G, rng: &mut R) -> Self {
        let r = params.field.random(rng);
        Self::with_point(params, g, r)
    }

    /// Fixes r explicitly; the verifier's soundness rests on r staying secret.
    pub fn with_point(params: DenseParams, g: G, r: Fe) -> Self {
        let f = params.field;
        let w_r = (0..params.layout.c_a).fold(f.one(), |acc, x| f.mul(acc, f.sub(r, f.from_u64(x))));
        let rows = vec![f.zero(); params.arity * params.layout.c_v as usize];
        Self { params, g, r, w_r, rows }
    }

    pub fn params(&self) -> &DenseParams {
        &self.params
    }

    pub fn rows(&self) -> &[Fe] {
        &self.rows
    }

    pub fn point(&self) -> Fe {
        self.r
    }

    /// L_x(r) over the row domain [c_a].
    pub fn weight(&self, x: u64) -> Fe {
        let f = &self.params.field;
        let c_a = self.params.layout.c_a;
        if self.w_r.is_zero() {
            // r is itself a node
            return if f.from_u64(x) == self.r { f.one() } else { f.zero() };
        }
        // L_x(r) = w(r) / ((r - x)·Π_{x'≠x}(x - x')), and the product is
        // (-1)^(c_a-1-x)·x!·(c_a-1-x)!.
        let mut den = f.sub(self.r, f.from_u64(x));
        den = mul_factorial(f, den, x);
        den = mul_factorial(f, den, c_a - 1 - x);
        if (c_a - 1 - x) % 2 == 1 {
            den = f.neg(den);
        }
        f.mul(self.w_r, f.inv(den).expect("r is not a node"))
    }

    pub fn update(&mut self, vector: usize, item: u64, delta: Fe) {
        let (x, y) = self.params.layout.locate(item);
        let w = self.weight(x);
        self.add_at(vector, y, self.params.field.mul(delta, w));
    }

    /// Column and Lagrange weight of `item`; reusable by any instance with the
    /// same layout and point.
    pub fn item_weight(&self, item: u64) -> (u64, Fe) {
        let (x, y) = self.params.layout.locate(item);
        (y, self.weight(x))
    }

    /// Adds delta·w at `column`, w from [`Self::item_weight`].
    pub fn add_weighted(&mut self, vector: usize, column: u64, delta: Fe, w: Fe) {
        self.add_at(vector, column, self.params.field.mul(delta, w));
    }

    pub fn update_int(&mut self, vector: usize, item: u64, delta: i64) {
        self.update(vector, item, self.params.field.from_i64(delta));
    }

    /// Several vectors touched at one item; the Lagrange weight is computed once.
    pub fn update_shared(&mut self, item: u64, deltas: &[(usize, Fe)]) {
        let (x, y) = self.params.layout.locate(item);
        let w = self.weight(x);
        for &(j, d) in deltas {
            self.add_at(j, y, self.params.field.mul(d, w));
        }
    }

    fn add_at(&mut self, vector: usize, column: u64, v: Fe) {
        let slot = &mut self.rows[vector * self.params.layout.c_v as usize + column as usize];
        *slot = self.params.field.add(*slot, v);
    }

    /// Σ_y g(rows[·][y]).
    fn column_sum(&self) -> Fe {
        let f = &self.params.field;
        let c_v = self.params.layout.c_v as usize;
        let mut args = vec![f.zero(); self.params.arity];
        let mut acc = f.zero();
        for y in 0..c_v {
            for (j, a) in args.iter_mut().enumerate() {
                *a = self.rows[j * c_v + y];
            }
            acc = f.add(acc, self.g.eval(f, &args));
        }
        acc
    }

    /// Checks b and returns Σ_{x<c_a} b(x) as a field element.
    pub fn verify(&self, proof: &DensePolynomial) -> Result<Fe, Reject> {
        let bound = self.params.proof_degree_bound();
        if proof.degree() > bound {
            return Err(Reject::DegreeTooHigh { degree: proof.degree(), bound });
        }
        let f = &self.params.field;
        if proof.eval(f, self.r) != self.column_sum() {
            return Err(Reject::SumCheck);
        }
        Ok(proof.sum_over_range(f, self.params.layout.c_a))
    }

    /// [`Self::verify`] decoded to an integer with |F| ≤ o.
    pub fn verify_signed(&self, proof: &DensePolynomial) -> Result<i128, Reject> {
        let v = self.params.field.to_signed(self.verify(proof)?);
        if v.unsigned_abs() > self.params.bound {
            return Err(Reject::OutOfRange);
        }
        Ok(v)
    }

    /// Reads a serialized proof (degree checked before coefficients) and verifies it.
    pub fn verify_bytes(&self, reader: &mut Reader<'_>) -> Result<i128, Reject> {
        let proof = reader.poly(&self.params.field, self.params.proof_degree_bound())?;
        self.verify_signed(&proof)
    }

    pub fn space(&self) -> Space {
        Space::field(self.rows.len() as u64 + 2, self.params.field.bits())
    }
}

/// acc · k!, batching small factors into machine words.
fn mul_factorial(f: &PrimeField, mut acc: Fe, k: u64) -> Fe {
    let mut word: u64 = 1;
    for i in 2..=k {
        match word.checked_mul(i) {
            Some(p) => word = p,
            None => {
                acc = f.mul_small(acc, word);
                word = i;
            }
        }
    }
    f.mul_small(acc, word)
}

/// A vector held sparsely, zero entries absent.
pub type SparseVector = BTreeMap<u64, Fe>;

/// Exact frequency vectors as the prover keeps them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyVectors {
    field: PrimeField,
    vectors: Vec<SparseVector>,
}

impl FrequencyVectors {
    pub fn new(field: PrimeField, count: usize) -> Self {
        Self { field, vectors: vec![SparseVector::new(); count] }
    }

    pub fn add(&mut self, vector: usize, item: u64, delta: Fe) {
        let f = self.field;
        let slot = self.vectors[vector].entry(item).or_insert(f.zero());
        *slot = f.add(*slot, delta);
        if slot.is_zero() {
            self.vectors[vector].remove(&item);
        }
    }

    pub fn add_int(&mut self, vector: usize, item: u64, delta: i64) {
        self.add(vector, item, self.field.from_i64(delta));
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }
}

/// The honest proof b(X) = Σ_y g(f̃(X, y)).
///
/// b is evaluated at 0..=d(c_a-1). For t < c_a, f̃(t, y) is the array entry;
/// beyond, f̃(t, y) = P(t)·Σ_x f(x, y)·λ_x / (t - x) with P(t) = Π_x (t - x)
/// and λ_x the barycentric weights, all read from factorial tables.
pub fn prove<G: Composition + ?Sized>(params: &DenseParams, g: &G, vectors: &[SparseVector]) -> DensePolynomial {
    let f = &params.field;
    let ell = params.arity;
    assert_eq!(vectors.len(), ell, "one vector per input of g");
    let c_a = params.layout.c_a as usize;
    let top = params.proof_degree_bound();
    let npts = top + 1;

    let mut cols: BTreeMap<u64, Vec<(usize, usize, Fe)>> = BTreeMap::new();
    for (j, v) in vectors.iter().enumerate() {
        for (&i, &val) in v {
            let (x, y) = params.layout.locate(i);
            cols.entry(y).or_default().push((x as usize, j, val));
        }
    }

    let mut fact = vec![f.one(); npts.max(c_a)];
    for i in 1..fact.len() {
        fact[i] = f.mul_small(fact[i - 1], i as u64);
    }
    let mut inv_fact = vec![f.one(); fact.len()];
    let last = fact.len() - 1;
    inv_fact[last] = f.inv(fact[last]).expect("nodes fit in the field");
    for i in (1..=last).rev() {
        inv_fact[i - 1] = f.mul_small(inv_fact[i], i as u64);
    }
    // 1/k = (k-1)!/k!
    let inv_int: Vec<Fe> = (0..npts).map(|k| if k == 0 { f.zero() } else { f.mul(inv_fact[k], fact[k - 1]) }).collect();
    let lambda: Vec<Fe> = (0..c_a)
        .map(|x| {
            let v = f.mul(inv_fact[x], inv_fact[c_a - 1 - x]);
            if (c_a - 1 - x) % 2 == 1 {
                f.neg(v)
            } else {
                v
            }
        })
        .collect();
    // P(t) = t! / (t - c_a)!
    let p_at: Vec<Fe> = (c_a..npts).map(|t| f.mul(fact[t], inv_fact[t - c_a])).collect();

    let mut evals = vec![f.zero(); npts];
    let zeros = vec![f.zero(); ell];
    let g0 = g.eval(f, &zeros);
    if !g0.is_zero() {
        let empty = params.layout.c_v - cols.len() as u64;
        let c = f.mul_small(g0, empty);
        for e in evals.iter_mut() {
            *e = c;
        }
    }

    let mut buf = vec![f.zero(); ell * npts];
    let mut args = vec![f.zero(); ell];
    for entries in cols.values() {
        buf.iter_mut().for_each(|b| *b = f.zero());
        for &(x, j, val) in entries {
            let row = &mut buf[j * npts..(j + 1) * npts];
            row[x] = val;
            if npts > c_a {
                let c = f.mul(val, lambda[x]);
                for (slot, &ii) in row[c_a..].iter_mut().zip(&inv_int[c_a - x..]) {
                    *slot = f.add(*slot, f.mul(c, ii));
                }
            }
        }
        for j in 0..ell {
            for (slot, &p) in buf[j * npts + c_a..(j + 1) * npts].iter_mut().zip(&p_at) {
                *slot = f.mul(*slot, p);
            }
        }
        for (t, e) in evals.iter_mut().enumerate() {
            for (j, a) in args.iter_mut().enumerate() {
                *a = buf[j * npts + t];
            }
            *e = f.add(*e, g.eval(f, &args));
        }
    }
    interpolate_consecutive(f, &evals)
}

/// b + Π_{i<D}(X - s_i) for random s_i: a wrong proof with as many roots as
/// the degree bound allows, so it survives exactly when r is one of them.
pub fn tamper_proof<R: RngCore + ?Sized>(params: &DenseParams, b: &DensePolynomial, rng: &mut R) -> DensePolynomial {
    let f = &params.field;
    add_poly(f, b, &random_rooted(f, params.proof_degree_bound(), rng))
}

/// A proof whose claimed answer is the honest one plus `shift`, again with
/// the maximum number of roots in the difference.
pub fn shift_answer<R: RngCore + ?Sized>(params: &DenseParams, b: &DensePolynomial, shift: Fe, rng: &mut R) -> DensePolynomial {
    let f = &params.field;
    loop {
        let rooted = random_rooted(f, params.proof_degree_bound(), rng);
        if let Some(inv) = f.inv(rooted.sum_over_range(f, params.layout.c_a)) {
            let scale = f.mul(shift, inv);
            let scaled = DensePolynomial::from_coefficients(rooted.coefficients().iter().map(|&c| f.mul(c, scale)).collect());
            return add_poly(f, b, &scaled);
        }
    }
}

fn random_rooted<R: RngCore + ?Sized>(f: &PrimeField, degree: usize, rng: &mut R) -> DensePolynomial {
    let mut c = vec![f.one()];
    for _ in 0..degree {
        let s = f.random(rng);
        c.push(f.zero());
        for k in (1..c.len()).rev() {
            c[k] = f.sub(c[k - 1], f.mul(s, c[k]));
        }
        c[0] = f.neg(f.mul(s, c[0]));
    }
    DensePolynomial::from_coefficients(c)
}

fn add_poly(f: &PrimeField, a: &DensePolynomial, b: &DensePolynomial) -> DensePolynomial {
    let (a, b) = (a.coefficients(), b.coefficients());
    let n = a.len().max(b.len());
    let get = |p: &[Fe], i: usize| p.get(i).copied().unwrap_or_default();
    DensePolynomial::from_coefficients((0..n).map(|i| f.add(get(a, i), get(b, i))).collect())
}

/// One update to vector `vector` of a dense instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VectorUpdate {
    pub vector: usize,
    pub item: u64,
    pub delta: i64,
}

/// The standalone dense scheme as a streaming verifier: empty start
/// annotation, proof at the end.
#[derive(Clone, Debug)]
pub struct DenseStreamVerifier<G>(pub DenseVerifier<G>);

impl<G: Composition> StreamVerifier for DenseStreamVerifier<G> {
    type Update = VectorUpdate;
    type Output = i128;

    fn start(&mut self, annotation: &[u8]) -> Result<(), Reject> {
        Reader::new(annotation).finish()
    }

    fn update(&mut self, u: &VectorUpdate) -> Result<(), Reject> {
        let p = self.0.params();
        if u.vector >= p.arity || u.item >= p.layout.n {
            return Err(Reject::StreamModel("update outside the declared vectors or universe"));
        }
        self.0.update_int(u.vector, u.item, u.delta);
        Ok(())
    }

    fn finish(self, annotation: &[u8]) -> Result<i128, Reject> {
        let mut r = Reader::new(annotation);
        let out = self.0.verify_bytes(&mut r)?;
        r.finish()?;
        Ok(out)
    }

    fn space(&self) -> Space {
        self.0.space()
    }
}

/// How a dense prover departs from the honest proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProofTamper {
    None,
    /// Adds a random polynomial with the maximum number of roots.
    Perturb,
    /// Claims the true answer plus one.
    OffByOne,
}

/// Online prover for the standalone dense scheme.
pub struct DenseStreamProver<G, R> {
    params: DenseParams,
    g: G,
    vectors: FrequencyVectors,
    tamper: ProofTamper,
    rng: R,
}

impl<G: Composition, R: RngCore> DenseStreamProver<G, R> {
    pub fn new(params: DenseParams, g: G, tamper: ProofTamper, rng: R) -> Self {
        let vectors = FrequencyVectors::new(params.field, params.arity);
        Self { params, g, vectors, tamper, rng }
    }
}

impl<G: Composition, R: RngCore> StreamProver for DenseStreamProver<G, R> {
    type Update = VectorUpdate;

    fn start(&mut self) -> Vec<u8> {
        Vec::new()
    }

    fn observe(&mut self, u: &VectorUpdate) -> Option<Vec<u8>> {
        self.vectors.add_int(u.vector, u.item, u.delta);
        None
    }

    fn finish(&mut self) -> Vec<u8> {
        let b = prove(&self.params, &self.g, self.vectors.vectors());
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::interpolate;
    use crate::protocol::execute;
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn m61() -> PrimeField {
        PrimeField::mersenne61()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn params<G: Composition>(layout: DenseLayout, g: &G) -> DenseParams {
        DenseParams::new(m61(), layout, g, 1 << 50).unwrap()
    }

    fn vectors(field: PrimeField, data: &[&[i64]]) -> Vec<SparseVector> {
        let mut fv = FrequencyVectors::new(field, data.len());
        for (j, v) in data.iter().enumerate() {
            for (i, &d) in v.iter().enumerate() {
                if d != 0 {
                    fv.add_int(j, i as u64, d);
                }
            }
        }
        fv.vectors().to_vec()
    }

    fn feed<G: Composition>(v: &mut DenseVerifier<G>, data: &[&[i64]]) {
        for (j, vec) in data.iter().enumerate() {
            for (i, &d) in vec.iter().enumerate() {
                if d != 0 {
                    v.update_int(j, i as u64, d);
                }
            }
        }
    }

    #[test]
    fn sum_of_squares_example() {
        let layout = DenseLayout::new(4, 2, 2).unwrap();
        let p = params(layout, &Power(2));
        let data: &[&[i64]] = &[&[1, 2, 3, 4]];
        let b = prove(&p, &Power(2), &vectors(p.field, data));
        assert_eq!(b.sum_over_range(&p.field, 2), p.field.from_u64(30));
        let mut v = DenseVerifier::init(p, Power(2), &mut rng(3));
        feed(&mut v, data);
        assert_eq!(v.verify_signed(&b), Ok(30));
    }

    #[test]
    fn zero_vectors_give_zero_polynomial() {
        let p = params(DenseLayout::new(9, 3, 3).unwrap(), &Power(3));
        assert!(prove(&p, &Power(3), &[SparseVector::new()]).is_zero());
    }

    #[test]
    fn single_row_gives_constant() {
        let p = params(DenseLayout::new(5, 1, 5).unwrap(), &Power(2));
        let b = prove(&p, &Power(2), &vectors(p.field, &[&[1, -2, 0, 3]]));
        assert_eq!(b.degree(), 0);
        assert_eq!(b.eval(&p.field, p.field.zero()), p.field.from_u64(14));
    }

    #[test]
    fn disjoint_indicators_have_zero_inner_product() {
        let p = params(DenseLayout::square(16), &Product);
        let data: &[&[i64]] = &[&[1, 0, 1, 0, 1], &[0, 1, 0, 1, 0, 0, 1]];
        let b = prove(&p, &Product, &vectors(p.field, data));
        let mut v = DenseVerifier::init(p, Product, &mut rng(1));
        feed(&mut v, data);
        assert_eq!(v.verify_signed(&b), Ok(0));
    }

    #[test]
    fn nonzero_constant_term_counts_empty_cells() {
        // g(z) = z + 1 sums to F1 + c_a·c_v over the whole grid.
        let g = FnComposition { arity: 1, degree: 1, f: |f: &PrimeField, x: &[Fe]| f.add(x[0], f.one()) };
        let p = params(DenseLayout::new(6, 2, 4).unwrap(), &g);
        let data: &[&[i64]] = &[&[0, 0, 5, 0, 0, 2]];
        let b = prove(&p, &g, &vectors(p.field, data));
        let mut v = DenseVerifier::init(p, g, &mut rng(2));
        feed(&mut v, data);
        assert_eq!(v.verify_signed(&b), Ok(7 + 8));
    }

    #[test]
    fn init_is_deterministic_and_rows_start_at_zero() {
        let p = params(DenseLayout::square(10), &Power(2));
        let a = DenseVerifier::init(p, Power(2), &mut rng(9));
        let b = DenseVerifier::init(p, Power(2), &mut rng(9));
        assert_eq!(a.point(), b.point());
        assert!(a.rows().iter().all(|x| x.is_zero()));
        assert_eq!(a.space().field_words, 4 + 2);
    }

    #[test]
    fn point_uniform_over_small_field() {
        let f = PrimeField::new(101).unwrap();
        let p = DenseParams::new(f, DenseLayout::new(4, 2, 2).unwrap(), &Power(1), 10).unwrap();
        let mut counts = [0u32; 101];
        for seed in 0..10_000 {
            counts[DenseVerifier::init(p, Power(1), &mut rng(seed)).point().value() as usize] += 1;
        }
        let e = 10_000.0 / 101.0;
        let chi: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 100 degrees of freedom, 0.999 quantile ≈ 149.4
        assert!(chi < 149.4, "chi-square {chi}");
    }

    #[test]
    fn opposite_updates_cancel() {
        let p = params(DenseLayout::square(16), &Power(2));
        let mut v = DenseVerifier::init(p, Power(2), &mut rng(4));
        v.update_int(0, 7, 5);
        v.update_int(0, 7, -5);
        assert!(v.rows().iter().all(|x| x.is_zero()));
    }

    #[test]
    fn point_on_a_node_uses_the_indicator() {
        let f = m61();
        let p = params(DenseLayout::new(12, 3, 4).unwrap(), &Power(2));
        let mut v = DenseVerifier::with_point(p, Power(2), f.from_u64(1));
        v.update_int(0, 5, 3); // (x, y) = (1, 1)
        v.update_int(0, 9, 4); // (2, 1): weight 0
        assert_eq!(v.rows()[1], f.from_u64(3));
        assert!(v.rows().iter().enumerate().all(|(i, x)| i == 1 || x.is_zero()));
    }

    #[test]
    fn rows_match_direct_interpolation() {
        // n = 16, 4 × 4 grid, 20 updates
        let f = m61();
        let layout = DenseLayout::new(16, 4, 4).unwrap();
        let p = params(layout, &Power(2));
        let mut r = rng(11);
        let mut v = DenseVerifier::init(p, Power(2), &mut r);
        let mut freq = [0i64; 16];
        for _ in 0..20 {
            let i = r.next_u64() % 16;
            let d = (r.next_u64() % 7) as i64 - 3;
            freq[i as usize] += d;
            v.update_int(0, i, d);
        }
        for y in 0..4u64 {
            let pts: Vec<(Fe, Fe)> = (0..4u64).map(|x| (f.from_u64(x), f.from_i64(freq[(x * 4 + y) as usize]))).collect();
            let column = interpolate(&f, &pts).unwrap();
            assert_eq!(v.rows()[y as usize], column.eval(&f, v.point()));
        }
    }

    #[test]
    fn weight_matches_field_lagrange() {
        let f = m61();
        let p = params(DenseLayout::new(49, 7, 7).unwrap(), &Power(2));
        let v = DenseVerifier::init(p, Power(2), &mut rng(12));
        for x in 0..7 {
            assert_eq!(v.weight(x), f.lagrange_basis_at(7, x, v.point()).unwrap());
        }
    }

    #[test]
    fn perturbed_coefficient_rejected() {
        let p = params(DenseLayout::square(25), &Power(2));
        let data: &[&[i64]] = &[&[3, 1, 4, 1, 5, 9, 2, 6]];
        let b = prove(&p, &Power(2), &vectors(p.field, data));
        let mut c = b.coefficients().to_vec();
        c[1] = p.field.add(c[1], p.field.one());
        let bad = DensePolynomial::from_coefficients(c);
        let mut v = DenseVerifier::init(p, Power(2), &mut rng(5));
        feed(&mut v, data);
        assert_eq!(v.verify(&bad), Err(Reject::SumCheck));
    }

    #[test]
    fn degree_bound_enforced() {
        let p = params(DenseLayout::new(4, 2, 2).unwrap(), &Power(2));
        let v = DenseVerifier::init(p, Power(2), &mut rng(6));
        let f = p.field;
        let big = DensePolynomial::from_coefficients(vec![f.one(); 4]);
        assert_eq!(v.verify(&big), Err(Reject::DegreeTooHigh { degree: 3, bound: 2 }));
    }

    #[test]
    fn decoded_value_must_respect_bound() {
        let p = DenseParams::new(m61(), DenseLayout::new(4, 2, 2).unwrap(), &Power(2), 20).unwrap();
        let data: &[&[i64]] = &[&[1, 2, 3, 4]];
        let b = prove(&p, &Power(2), &vectors(p.field, data));
        let mut v = DenseVerifier::init(p, Power(2), &mut rng(3));
        feed(&mut v, data);
        assert_eq!(v.verify_signed(&b), Err(Reject::OutOfRange));
    }

    #[test]
    fn field_too_small_is_a_config_error() {
        let f = PrimeField::new(11).unwrap();
        assert!(DenseParams::new(f, DenseLayout::square(4), &Power(2), 100).is_err());
        assert!(DenseLayout::new(10, 3, 3).is_err());
    }

    #[test]
    fn field_selection() {
        assert_eq!(FieldBound { need: 100, prefer: 1 << 70 }.select().unwrap(), PrimeField::mersenne127());
        assert_eq!(FieldBound { need: 100, prefer: 1 << 40 }.select().unwrap(), PrimeField::mersenne61());
        assert_eq!(FieldBound { need: 100, prefer: u128::MAX }.select().unwrap(), PrimeField::mersenne61());
        assert_eq!(FieldBound { need: 1 << 100, prefer: u128::MAX }.select().unwrap(), PrimeField::mersenne127());
        assert!(FieldBound { need: u128::MAX, prefer: u128::MAX }.select().is_err());
    }

    #[test]
    fn adversarial_proofs_shift_claims_as_intended() {
        let p = params(DenseLayout::square(36), &Power(3));
        let data: &[&[i64]] = &[&[2, 0, 1, 1, 0, 7]];
        let b = prove(&p, &Power(3), &vectors(p.field, data));
        let honest = b.sum_over_range(&p.field, p.layout.c_a);
        let shifted = shift_answer(&p, &b, p.field.one(), &mut rng(8));
        assert!(shifted.degree() <= p.proof_degree_bound());
        assert_eq!(shifted.sum_over_range(&p.field, p.layout.c_a), p.field.add(honest, p.field.one()));
        let mut v = DenseVerifier::init(p, Power(3), &mut rng(7));
        feed(&mut v, data);
        assert_eq!(v.verify(&shifted), Err(Reject::SumCheck));
        assert_eq!(v.verify(&tamper_proof(&p, &b, &mut rng(9))), Err(Reject::SumCheck));
    }

    #[test]
    fn stream_scheme_round_trip() {
        let p = params(DenseLayout::square(8), &Product);
        let stream = [
            VectorUpdate { vector: 0, item: 3, delta: 2 },
            VectorUpdate { vector: 1, item: 3, delta: 5 },
            VectorUpdate { vector: 1, item: 7, delta: 1 },
        ];
        let run = execute(
            DenseStreamVerifier(DenseVerifier::init(p, Product, &mut rng(1))),
            DenseStreamProver::new(p, Product, ProofTamper::None, rng(2)),
            &stream,
        );
        assert_eq!(run.outcome, Ok(10));
        assert_eq!(run.cost.vcost_words, 2 * 3 + 2);
        let bad = execute(
            DenseStreamVerifier(DenseVerifier::init(p, Product, &mut rng(1))),
            DenseStreamProver::new(p, Product, ProofTamper::OffByOne, rng(2)),
            &stream,
        );
        assert_eq!(bad.outcome, Err(Reject::SumCheck));
    }

    proptest! {
        #[test]
        fn honest_proofs_always_verify(
            freq in prop::collection::vec(-5i64..6, 1..40),
            other in prop::collection::vec(-5i64..6, 1..40),
            c_v in 1u64..9,
            which in 0usize..3,
            seed in any::<u64>(),
        ) {
            let n = freq.len().max(other.len()) as u64;
            let layout = DenseLayout::with_columns(n, c_v);
            let mut r = rng(seed);
            let pad = |v: &[i64]| { let mut v = v.to_vec(); v.resize(n as usize, 0); v };
            let (a, b) = (pad(&freq), pad(&other));
            let (got, want) = match which {
                0 => {
                    let p = params(layout, &Power(2));
                    let mut v = DenseVerifier::init(p, Power(2), &mut r);
                    feed(&mut v, &[&a]);
                    (v.verify_signed(&prove(&p, &Power(2), &vectors(p.field, &[&a]))), a.iter().map(|&x| (x * x) as i128).sum())
                }
                1 => {
                    let p = params(layout, &Power(3));
                    let mut v = DenseVerifier::init(p, Power(3), &mut r);
                    feed(&mut v, &[&a]);
                    (v.verify_signed(&prove(&p, &Power(3), &vectors(p.field, &[&a]))), a.iter().map(|&x| (x * x * x) as i128).sum())
                }
                _ => {
                    let p = params(layout, &Product);
                    let mut v = DenseVerifier::init(p, Product, &mut r);
                    feed(&mut v, &[&a, &b]);
                    (v.verify_signed(&prove(&p, &Product, &vectors(p.field, &[&a, &b]))), a.iter().zip(&b).map(|(&x, &y)| (x * y) as i128).sum())
                }
            };
            prop_assert_eq!(got, Ok(want));
        }
    }
}
