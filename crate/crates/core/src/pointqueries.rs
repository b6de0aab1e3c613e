//! PointQuery over sparse streams, and Selection and HeavyHitters on top of
//! it through the dyadic derived stream.
//!
//! The prover fixes h: [n] → [c_v] before the stream; the verifier keeps a
//! secret-basis fingerprint of each sub-stream x^j = {i : h(i) = j}. At the end
//! the prover lists the nonzero entries of whichever buckets are needed, and
//! each listing is checked against its bucket's fingerprint.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Reject};
use crate::field::{FieldElement as Fe, PrimeField};
use crate::protocol::{Space, Strategy, StreamProver, StreamVerifier};
use crate::streams::{Dyadic, Fingerprint, PairwiseHash, StreamUpdate};
use crate::sumcheck::{ceil_sqrt, FieldBound};
use crate::wire::{Reader, Writer};

/// Markov constant bounding the size of an honest opening.
pub const DEFAULT_OVERFLOW: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PQParams {
    pub c_a: u64,
    pub c_v: u64,
    pub overflow: u64,
    pub field: PrimeField,
}

/// Field for fingerprints over [n]: q > n, and q ≥ 2^32·n when available.
pub fn fingerprint_field(n: u64) -> Result<PrimeField, Error> {
    FieldBound { need: n as u128 + 1, prefer: (n as u128) << 32 }.select()
}

impl PQParams {
    /// Checks c_a·c_v ≥ m for the declared sparsity bound m.
    pub fn new(m: u64, c_a: u64, c_v: u64, overflow: u64, field: PrimeField) -> Result<Self, Error> {
        if c_a == 0 || c_v == 0 || overflow == 0 {
            return Err(Error::InvalidParams("need c_a, c_v, T >= 1"));
        }
        if (c_a as u128) * (c_v as u128) < m as u128 {
            return Err(Error::InvalidParams("need c_a * c_v >= m"));
        }
        Ok(Self { c_a, c_v, overflow, field })
    }

    /// c_v = ⌈√m⌉, c_a = ⌈m/c_v⌉.
    pub fn square(m: u64, field: PrimeField) -> Self {
        let c_v = ceil_sqrt(m).max(1);
        Self { c_a: m.div_ceil(c_v).max(1), c_v, overflow: DEFAULT_OVERFLOW, field }
    }

    pub fn opening_limit(&self) -> usize {
        self.c_a.saturating_mul(self.overflow).min(usize::MAX as u64) as usize
    }
}

/// Verifier state: the hash and one fingerprint per bucket.
#[derive(Clone, Debug)]
pub struct BucketFingerprintState {
    n: u64,
    h: PairwiseHash,
    field: PrimeField,
    basis: Fe,
    fps: Vec<Fe>,
}

impl BucketFingerprintState {
    pub fn new(field: PrimeField, n: u64, h: PairwiseHash, basis: Fe) -> Self {
        Self { n, h, field, basis, fps: alloc::vec![field.zero(); h.range as usize] }
    }

    pub fn hash(&self) -> &PairwiseHash {
        &self.h
    }

    pub fn update(&mut self, item: u64, delta: i64) {
        let b = self.h.eval(item) as usize;
        let term = self.field.mul(self.field.from_i64(delta), self.field.pow(self.basis, item as u128));
        self.fps[b] = self.field.add(self.fps[b], term);
    }

    /// Reads an opening of `bucket` and checks it against the fingerprint,
    /// returning the claimed frequency of `item` (0 if unlisted).
    pub fn check_opening(&self, bucket: u64, item: u64, limit: usize, r: &mut Reader<'_>) -> Result<i64, Reject> {
        let len = r.u64()?;
        if len > limit as u64 {
            return Err(Reject::OversizeOpening { len: len.min(usize::MAX as u64) as usize, limit });
        }
        let mut fp = Fingerprint::new(self.field, self.basis);
        let mut prev = None;
        let mut found = 0;
        for _ in 0..len {
            let (i, f) = (r.u64()?, r.i64()?);
            if i >= self.n || f == 0 || prev.is_some_and(|p| p >= i) {
                return Err(Reject::Malformed("opening entries must be distinct, nonzero and sorted"));
            }
            if self.h.eval(i) != bucket {
                return Err(Reject::WrongBucket);
            }
            prev = Some(i);
            fp.update(i, f);
            if i == item {
                found = f;
            }
        }
        if fp.value() != self.fps[bucket as usize] {
            return Err(Reject::FingerprintMismatch);
        }
        Ok(found)
    }

    pub fn space(&self) -> Space {
        Space::field(self.fps.len() as u64 + 1, self.field.bits()) + Space::aux(5)
    }
}

/// Reads the hash from a start annotation and builds the state.
fn start_state(params: &PQParams, n: u64, basis: Fe, annotation: &[u8]) -> Result<BucketFingerprintState, Reject> {
    let mut r = Reader::new(annotation);
    let h = r.hash()?;
    r.finish()?;
    if h.range != params.c_v || !h.covers(n) {
        return Err(Reject::Malformed("hash range or prime does not fit the parameters"));
    }
    Ok(BucketFingerprintState::new(params.field, n, h, basis))
}

/// Prover-side frequencies grouped by bucket.
#[derive(Clone, Debug)]
pub struct BucketedFrequencies {
    h: PairwiseHash,
    freq: BTreeMap<(u64, u64), i64>,
}

impl BucketedFrequencies {
    pub fn new(h: PairwiseHash) -> Self {
        Self { h, freq: BTreeMap::new() }
    }

    pub fn add(&mut self, item: u64, delta: i64) {
        let key = (self.h.eval(item), item);
        let f = self.freq.entry(key).or_insert(0);
        *f += delta;
        if *f == 0 {
            self.freq.remove(&key);
        }
    }

    pub fn get(&self, item: u64) -> i64 {
        self.freq.get(&(self.h.eval(item), item)).copied().unwrap_or(0)
    }

    pub fn opening(&self, bucket: u64) -> Vec<(u64, i64)> {
        self.freq.range((bucket, 0)..=(bucket, u64::MAX)).map(|(&(_, i), &f)| (i, f)).collect()
    }

    pub fn opening_of(&self, item: u64) -> Vec<(u64, i64)> {
        self.opening(self.h.eval(item))
    }

    /// Nonzero entries in item order.
    pub fn support(&self) -> BTreeMap<u64, i64> {
        self.freq.iter().map(|(&(_, i), &f)| (i, f)).collect()
    }
}

pub fn write_opening(w: &mut Writer, entries: &[(u64, i64)]) {
    w.u64(entries.len() as u64);
    for &(i, f) in entries {
        w.u64(i).i64(f);
    }
}

/// Adds `delta` to the claimed frequency of `item`, keeping the list canonical.
pub fn shift_entry(entries: &mut Vec<(u64, i64)>, item: u64, delta: i64) {
    match entries.binary_search_by_key(&item, |e| e.0) {
        Ok(k) => {
            entries[k].1 += delta;
            if entries[k].1 == 0 {
                entries.remove(k);
            }
        }
        Err(k) => entries.insert(k, (item, delta)),
    }
}

fn unsupported(strategy: Strategy, allowed: &[Strategy]) -> Result<(), Error> {
    if strategy.is_honest() || allowed.contains(&strategy) {
        Ok(())
    } else {
        Err(Error::InvalidParams("strategy does not apply to this scheme"))
    }
}

pub struct PointQueryVerifier {
    params: PQParams,
    n: u64,
    query: u64,
    basis: Fe,
    state: Option<BucketFingerprintState>,
}

impl PointQueryVerifier {
    pub fn new<R: RngCore + ?Sized>(params: PQParams, n: u64, query: u64, rng: &mut R) -> Result<Self, Error> {
        if query >= n {
            return Err(Error::ItemOutOfRange { item: query, universe: n });
        }
        if params.field.modulus() <= n as u128 {
            return Err(Error::FieldTooSmall { required: n as u128 + 1 });
        }
        let basis = params.field.random(rng);
        Ok(Self { params, n, query, basis, state: None })
    }
}

impl StreamVerifier for PointQueryVerifier {
    type Update = StreamUpdate;
    type Output = i64;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        self.state = Some(start_state(&self.params, self.n, self.basis, a)?);
        Ok(())
    }

    fn update(&mut self, u: &StreamUpdate) -> Result<(), Reject> {
        if u.item >= self.n {
            return Err(Reject::StreamModel("item outside the universe"));
        }
        self.state.as_mut().ok_or(Reject::Malformed("missing start"))?.update(u.item, u.delta);
        Ok(())
    }

    fn finish(self, a: &[u8]) -> Result<i64, Reject> {
        let state = self.state.ok_or(Reject::Malformed("missing start"))?;
        let mut r = Reader::new(a);
        let f = state.check_opening(state.hash().eval(self.query), self.query, self.params.opening_limit(), &mut r)?;
        r.finish()?;
        Ok(f)
    }

    fn space(&self) -> Space {
        match &self.state {
            Some(s) => s.space() + Space::aux(1),
            None => Space::field(1, self.params.field.bits()) + Space::aux(1),
        }
    }
}

pub struct PointQueryProver<R> {
    params: PQParams,
    query: u64,
    strategy: Strategy,
    rng: R,
    freq: Option<BucketedFrequencies>,
}

impl<R: RngCore> PointQueryProver<R> {
    pub const STRATEGIES: [Strategy; 2] = [Strategy::WrongAnswer, Strategy::TamperProof];

    pub fn new(params: PQParams, query: u64, strategy: Strategy, rng: R) -> Result<Self, Error> {
        unsupported(strategy, &Self::STRATEGIES)?;
        Ok(Self { params, query, strategy, rng, freq: None })
    }
}

impl<R: RngCore> StreamProver for PointQueryProver<R> {
    type Update = StreamUpdate;

    fn start(&mut self) -> Vec<u8> {
        let h = PairwiseHash::random(self.params.c_v, &mut self.rng);
        self.freq = Some(BucketedFrequencies::new(h));
        let mut w = Writer::new();
        w.hash(&h);
        w.into_bytes()
    }

    fn observe(&mut self, u: &StreamUpdate) -> Option<Vec<u8>> {
        self.freq.as_mut().expect("start precedes the stream").add(u.item, u.delta);
        None
    }

    fn finish(&mut self) -> Vec<u8> {
        let freq = self.freq.as_ref().expect("start precedes the stream");
        let mut entries = freq.opening_of(self.query);
        match self.strategy {
            Strategy::WrongAnswer => shift_entry(&mut entries, self.query, 1),
            Strategy::TamperProof => {
                let k = (self.rng.next_u64() % (entries.len() as u64 + 1)) as usize;
                let item = entries.get(k).map_or(self.query, |e| e.0);
                shift_entry(&mut entries, item, -1);
            }
            _ => {}
        }
        let mut w = Writer::new();
        write_opening(&mut w, &entries);
        w.into_bytes()
    }
}

/// Feeds the dyadic ranges containing `item`.
#[inline]
pub fn for_each_range(dyadic: &Dyadic, item: u64, mut f: impl FnMut(u64)) {
    for k in 0..=dyadic.levels() {
        f(dyadic.id(k, item >> k));
    }
}

/// The disjoint dyadic ranges covering [0, j), largest first.
pub fn prefix_ranges(dyadic: &Dyadic, j: u64) -> impl Iterator<Item = u64> + '_ {
    (0..=dyadic.levels()).rev().filter(move |&k| (j >> k) & 1 == 1).map(move |k| dyadic.id(k, (j >> (k + 1)) << 1))
}

/// Sparsity bound of the derived stream: m·(log₂ n + 1).
pub fn derived_sparsity(n: u64, m: u64) -> u64 {
    m.saturating_mul(Dyadic::new(n).levels() as u64 + 1)
}

/// Selection: names an item j with T_{j-1} < ρ ≤ T_j, T_j = Σ_{i≤j} f_i.
pub struct SelectionVerifier {
    params: PQParams,
    dyadic: Dyadic,
    n: u64,
    rank: u64,
    basis: Fe,
    total: i128,
    state: Option<BucketFingerprintState>,
}

impl SelectionVerifier {
    pub fn new<R: RngCore + ?Sized>(params: PQParams, n: u64, rank: u64, rng: &mut R) -> Result<Self, Error> {
        let dyadic = Dyadic::new(n);
        if params.field.modulus() <= dyadic.id_count() as u128 {
            return Err(Error::FieldTooSmall { required: dyadic.id_count() as u128 + 1 });
        }
        let basis = params.field.random(rng);
        Ok(Self { params, dyadic, n, rank, basis, total: 0, state: None })
    }
}

impl StreamVerifier for SelectionVerifier {
    type Update = StreamUpdate;
    type Output = u64;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        self.state = Some(start_state(&self.params, self.dyadic.id_count(), self.basis, a)?);
        Ok(())
    }

    fn update(&mut self, u: &StreamUpdate) -> Result<(), Reject> {
        if u.item >= self.n {
            return Err(Reject::StreamModel("item outside the universe"));
        }
        let state = self.state.as_mut().ok_or(Reject::Malformed("missing start"))?;
        for_each_range(&self.dyadic, u.item, |id| state.update(id, u.delta));
        self.total += u.delta as i128;
        Ok(())
    }

    fn finish(self, a: &[u8]) -> Result<u64, Reject> {
        let state = self.state.ok_or(Reject::Malformed("missing start"))?;
        if self.rank == 0 || self.rank as i128 > self.total {
            return Err(Reject::Inconsistent("rank outside [1, N]"));
        }
        let mut r = Reader::new(a);
        let j = r.u64()?;
        if j >= self.n {
            return Err(Reject::Malformed("named item outside the universe"));
        }
        let limit = self.params.opening_limit();
        let mut below: i128 = 0;
        for id in prefix_ranges(&self.dyadic, j) {
            below += state.check_opening(state.hash().eval(id), id, limit, &mut r)? as i128;
        }
        let leaf = self.dyadic.id(0, j);
        let at = below + state.check_opening(state.hash().eval(leaf), leaf, limit, &mut r)? as i128;
        r.finish()?;
        let rank = self.rank as i128;
        if below < rank && rank <= at {
            Ok(j)
        } else {
            Err(Reject::Inconsistent("rank predicate"))
        }
    }

    fn space(&self) -> Space {
        let base = Space::field(1, self.params.field.bits()) + Space::aux(2);
        self.state.as_ref().map_or(base, |s| s.space() + Space::aux(2))
    }
}

/// Smallest j with T_j ≥ ρ, if any.
pub fn select_rank(freq: &BTreeMap<u64, i64>, rank: u64) -> Option<u64> {
    let mut t: i128 = 0;
    for (&i, &f) in freq {
        t += f as i128;
        if t >= rank as i128 {
            return Some(i);
        }
    }
    None
}

pub struct SelectionProver<R> {
    params: PQParams,
    dyadic: Dyadic,
    n: u64,
    rank: u64,
    strategy: Strategy,
    rng: R,
    freq: Option<BucketedFrequencies>,
    leaves: BTreeMap<u64, i64>,
}

impl<R: RngCore> SelectionProver<R> {
    pub const STRATEGIES: [Strategy; 2] = [Strategy::WrongAnswer, Strategy::TamperProof];

    pub fn new(params: PQParams, n: u64, rank: u64, strategy: Strategy, rng: R) -> Result<Self, Error> {
        unsupported(strategy, &Self::STRATEGIES)?;
        Ok(Self { params, dyadic: Dyadic::new(n), n, rank, strategy, rng, freq: None, leaves: BTreeMap::new() })
    }
}

impl<R: RngCore> StreamProver for SelectionProver<R> {
    type Update = StreamUpdate;

    fn start(&mut self) -> Vec<u8> {
        let h = PairwiseHash::random(self.params.c_v, &mut self.rng);
        self.freq = Some(BucketedFrequencies::new(h));
        let mut w = Writer::new();
        w.hash(&h);
        w.into_bytes()
    }

    fn observe(&mut self, u: &StreamUpdate) -> Option<Vec<u8>> {
        let freq = self.freq.as_mut().expect("start precedes the stream");
        for_each_range(&self.dyadic, u.item, |id| freq.add(id, u.delta));
        let f = self.leaves.entry(u.item).or_insert(0);
        *f += u.delta;
        if *f == 0 {
            self.leaves.remove(&u.item);
        }
        None
    }

    fn finish(&mut self) -> Vec<u8> {
        let freq = self.freq.as_ref().expect("start precedes the stream");
        let mut j = select_rank(&self.leaves, self.rank).unwrap_or(0);
        if self.strategy == Strategy::WrongAnswer {
            j = if j + 1 < self.n { j + 1 } else { j.saturating_sub(1) };
        }
        let mut ids: Vec<u64> = prefix_ranges(&self.dyadic, j).collect();
        ids.push(self.dyadic.id(0, j));
        let victim = (self.rng.next_u64() % ids.len() as u64) as usize;
        let mut w = Writer::new();
        w.u64(j);
        for (k, &id) in ids.iter().enumerate() {
            let mut entries = freq.opening_of(id);
            if self.strategy == Strategy::TamperProof && k == victim {
                shift_entry(&mut entries, id, -1);
            }
            write_opening(&mut w, &entries);
        }
        w.into_bytes()
    }
}

/// count ≥ φN with count > 0. Shared by prover and verifier so both round identically.
pub fn is_heavy(count: i64, total: i64, phi: f64) -> bool {
    count > 0 && count as f64 >= phi * total as f64
}

/// Most nodes an honest examined set can hold: the root plus two children
/// of each heavy node, at most ⌈1/φ⌉ per level.
pub fn examined_limit(dyadic: &Dyadic, phi: f64) -> usize {
    let per_level = ceil_f64(1.0 / phi) as u64;
    (2 * (dyadic.levels() as u64 + 1) * per_level + 1).min(usize::MAX as u64) as usize
}

fn ceil_f64(x: f64) -> f64 {
    let t = x as u64 as f64;
    if t < x {
        t + 1.0
    } else {
        t
    }
}

pub fn check_phi(phi: f64) -> Result<(), Error> {
    if phi > 0.0 && phi < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams("need 0 < phi < 1"))
    }
}

/// Verifies a claimed dyadic tree: the examined nodes, in id order, must be
/// the root plus exactly the children of the heavy ones. A fingerprint of the
/// multiset difference replaces storing the set.
#[derive(Clone, Debug)]
pub struct HeavyTreeCheck {
    dyadic: Dyadic,
    phi: f64,
    total: i64,
    limit: usize,
    diff: Fingerprint,
    last: Option<u64>,
    seen: usize,
    heavy: Vec<u64>,
}

impl HeavyTreeCheck {
    pub fn new(dyadic: Dyadic, phi: f64, total: i64, field: PrimeField, basis: Fe) -> Self {
        Self {
            dyadic,
            phi,
            total,
            limit: examined_limit(&dyadic, phi),
            diff: Fingerprint::new(field, basis),
            last: None,
            seen: 0,
            heavy: Vec::new(),
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn visit(&mut self, id: u64, count: i64) -> Result<(), Reject> {
        match self.last {
            None if id != self.dyadic.root() => return Err(Reject::Inconsistent("examined nodes must start at the root")),
            Some(p) if p >= id => return Err(Reject::Malformed("examined nodes must be sorted and distinct")),
            _ => {}
        }
        if id >= self.dyadic.id_count() {
            return Err(Reject::Malformed("node outside the dyadic tree"));
        }
        self.seen += 1;
        if self.seen > self.limit {
            return Err(Reject::OversizeOpening { len: self.seen, limit: self.limit });
        }
        self.last = Some(id);
        if id != self.dyadic.root() {
            self.diff.update(id, -1);
        }
        if is_heavy(count, self.total, self.phi) {
            match self.dyadic.children(id) {
                Some((a, b)) => {
                    self.diff.update(a, 1);
                    self.diff.update(b, 1);
                }
                None => self.heavy.push(self.dyadic.locate(id).1),
            }
        }
        Ok(())
    }

    /// The heavy items, ascending.
    pub fn finish(self) -> Result<Vec<u64>, Reject> {
        if self.last.is_none() {
            return Err(Reject::Inconsistent("examined nodes must start at the root"));
        }
        if !self.diff.value().is_zero() {
            return Err(Reject::Inconsistent("examined nodes differ from the children of heavy nodes"));
        }
        let mut heavy = self.heavy;
        heavy.sort_unstable();
        Ok(heavy)
    }

    pub fn space(&self) -> Space {
        Space::field(2, self.diff.field().bits()) + Space::aux(3)
    }
}

/// Honest examined set with true counts, in id order.
pub fn examined_nodes(dyadic: &Dyadic, count: impl Fn(u64) -> i64, total: i64, phi: f64) -> Vec<(u64, i64)> {
    let mut out = Vec::new();
    let mut frontier = alloc::vec![dyadic.root()];
    while let Some(id) = frontier.pop() {
        let c = count(id);
        out.push((id, c));
        if is_heavy(c, total, phi) {
            if let Some((a, b)) = dyadic.children(id) {
                frontier.push(a);
                frontier.push(b);
            }
        }
    }
    out.sort_unstable();
    out
}

/// HeavyHitters with one point opening per examined node.
pub struct HeavyHittersVerifier {
    params: PQParams,
    dyadic: Dyadic,
    n: u64,
    phi: f64,
    basis: Fe,
    tree_basis: Fe,
    total: i64,
    state: Option<BucketFingerprintState>,
}

impl HeavyHittersVerifier {
    pub fn new<R: RngCore + ?Sized>(params: PQParams, n: u64, phi: f64, rng: &mut R) -> Result<Self, Error> {
        check_phi(phi)?;
        let dyadic = Dyadic::new(n);
        if params.field.modulus() <= dyadic.id_count() as u128 {
            return Err(Error::FieldTooSmall { required: dyadic.id_count() as u128 + 1 });
        }
        let basis = params.field.random(rng);
        let tree_basis = params.field.random(rng);
        Ok(Self { params, dyadic, n, phi, basis, tree_basis, total: 0, state: None })
    }
}

impl StreamVerifier for HeavyHittersVerifier {
    type Update = StreamUpdate;
    type Output = Vec<u64>;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        self.state = Some(start_state(&self.params, self.dyadic.id_count(), self.basis, a)?);
        Ok(())
    }

    fn update(&mut self, u: &StreamUpdate) -> Result<(), Reject> {
        if u.item >= self.n {
            return Err(Reject::StreamModel("item outside the universe"));
        }
        let state = self.state.as_mut().ok_or(Reject::Malformed("missing start"))?;
        for_each_range(&self.dyadic, u.item, |id| state.update(id, u.delta));
        self.total = self.total.checked_add(u.delta).ok_or(Reject::StreamModel("total overflows"))?;
        Ok(())
    }

    fn finish(self, a: &[u8]) -> Result<Vec<u64>, Reject> {
        let state = self.state.ok_or(Reject::Malformed("missing start"))?;
        let mut tree = HeavyTreeCheck::new(self.dyadic, self.phi, self.total, self.params.field, self.tree_basis);
        let mut r = Reader::new(a);
        let len = r.count(tree.limit())?;
        for _ in 0..len {
            let id = r.u64()?;
            if id >= self.dyadic.id_count() {
                return Err(Reject::Malformed("node outside the dyadic tree"));
            }
            let c = state.check_opening(state.hash().eval(id), id, self.params.opening_limit(), &mut r)?;
            tree.visit(id, c)?;
        }
        r.finish()?;
        tree.finish()
    }

    fn space(&self) -> Space {
        let tree = Space::field(2, self.params.field.bits()) + Space::aux(3);
        let base = Space::field(2, self.params.field.bits()) + Space::aux(2);
        self.state.as_ref().map_or(base, |s| s.space() + tree + Space::aux(1))
    }
}

pub struct HeavyHittersProver<R> {
    params: PQParams,
    dyadic: Dyadic,
    phi: f64,
    strategy: Strategy,
    rng: R,
    total: i64,
    freq: Option<BucketedFrequencies>,
}

impl<R: RngCore> HeavyHittersProver<R> {
    pub const STRATEGIES: [Strategy; 3] = [Strategy::WrongAnswer, Strategy::TamperProof, Strategy::OmittedHeavyHitter];

    pub fn new(params: PQParams, n: u64, phi: f64, strategy: Strategy, rng: R) -> Result<Self, Error> {
        check_phi(phi)?;
        unsupported(strategy, &Self::STRATEGIES)?;
        Ok(Self { params, dyadic: Dyadic::new(n), phi, strategy, rng, total: 0, freq: None })
    }
}

/// Changes one claimed count so the claimed heavy set is wrong: drops a heavy
/// leaf, or (for `promote`) makes a light examined leaf heavy.
pub fn falsify_heavy_set(dyadic: &Dyadic, nodes: &[(u64, i64)], total: i64, phi: f64, promote: bool) -> Option<(u64, i64)> {
    let leaves = nodes.iter().filter(|(id, _)| dyadic.is_leaf(*id));
    let heavy = |c: i64| is_heavy(c, total, phi);
    let light_leaf = leaves.clone().find(|(_, c)| !heavy(*c));
    let heavy_leaf = leaves.clone().find(|(_, c)| heavy(*c));
    match (promote, light_leaf, heavy_leaf) {
        (true, Some(&(id, c)), _) => Some((id, total.max(1) - c)),
        (_, _, Some(&(id, c))) => Some((id, -c)),
        (false, Some(&(id, c)), None) => Some((id, total.max(1) - c)),
        _ => None,
    }
}

impl<R: RngCore> StreamProver for HeavyHittersProver<R> {
    type Update = StreamUpdate;

    fn start(&mut self) -> Vec<u8> {
        let h = PairwiseHash::random(self.params.c_v, &mut self.rng);
        self.freq = Some(BucketedFrequencies::new(h));
        let mut w = Writer::new();
        w.hash(&h);
        w.into_bytes()
    }

    fn observe(&mut self, u: &StreamUpdate) -> Option<Vec<u8>> {
        let freq = self.freq.as_mut().expect("start precedes the stream");
        for_each_range(&self.dyadic, u.item, |id| freq.add(id, u.delta));
        self.total += u.delta;
        None
    }

    fn finish(&mut self) -> Vec<u8> {
        let freq = self.freq.as_ref().expect("start precedes the stream");
        let nodes = examined_nodes(&self.dyadic, |id| freq.get(id), self.total, self.phi);
        let lie = match self.strategy {
            Strategy::OmittedHeavyHitter => falsify_heavy_set(&self.dyadic, &nodes, self.total, self.phi, false),
            Strategy::WrongAnswer => falsify_heavy_set(&self.dyadic, &nodes, self.total, self.phi, true),
            Strategy::TamperProof => {
                let (id, _) = nodes[(self.rng.next_u64() % nodes.len() as u64) as usize];
                Some((id, 1))
            }
            _ => None,
        };
        let mut w = Writer::new();
        w.u64(nodes.len() as u64);
        for &(id, _) in &nodes {
            let mut entries = freq.opening_of(id);
            if let Some((victim, shift)) = lie.filter(|l| l.0 == id) {
                shift_entry(&mut entries, victim, shift);
            }
            w.u64(id);
            write_opening(&mut w, &entries);
        }
        w.into_bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{execute, Strategy};
    use alloc::vec;
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn freq_oracle(s: &[StreamUpdate]) -> BTreeMap<u64, i64> {
        let mut f = BTreeMap::new();
        for u in s {
            *f.entry(u.item).or_insert(0) += u.delta;
        }
        f.retain(|_, v| *v != 0);
        f
    }

    fn pq(s: &[StreamUpdate], n: u64, query: u64, strategy: Strategy, seed: u64) -> Result<i64, Reject> {
        let m = freq_oracle(s).len().max(1) as u64;
        let params = PQParams::square(m, fingerprint_field(n).unwrap());
        let v = PointQueryVerifier::new(params, n, query, &mut rng(seed)).unwrap();
        let p = PointQueryProver::new(params, query, strategy, rng(seed ^ 0xF00D)).unwrap();
        execute(v, p, s).outcome
    }

    fn select(s: &[StreamUpdate], n: u64, rank: u64, strategy: Strategy, seed: u64) -> Result<u64, Reject> {
        let m = derived_sparsity(n, freq_oracle(s).len().max(1) as u64);
        let params = PQParams::square(m, fingerprint_field(Dyadic::new(n).id_count()).unwrap());
        let v = SelectionVerifier::new(params, n, rank, &mut rng(seed)).unwrap();
        let p = SelectionProver::new(params, n, rank, strategy, rng(seed ^ 0xBEEF)).unwrap();
        execute(v, p, s).outcome
    }

    fn heavy(s: &[StreamUpdate], n: u64, phi: f64, strategy: Strategy, seed: u64) -> Result<Vec<u64>, Reject> {
        let m = derived_sparsity(n, freq_oracle(s).len().max(1) as u64);
        let params = PQParams::square(m, fingerprint_field(Dyadic::new(n).id_count()).unwrap());
        let v = HeavyHittersVerifier::new(params, n, phi, &mut rng(seed)).unwrap();
        let p = HeavyHittersProver::new(params, n, phi, strategy, rng(seed ^ 0xCAFE)).unwrap();
        execute(v, p, s).outcome
    }

    fn random_stream(r: &mut ChaCha8Rng, n: u64, items: usize, max: i64) -> Vec<StreamUpdate> {
        let mut s = Vec::new();
        for _ in 0..items {
            let i = r.next_u64() % n;
            s.push(StreamUpdate::new(i, 1 + (r.next_u64() % max as u64) as i64));
        }
        s
    }

    #[test]
    fn point_query_examples() {
        let s = [StreamUpdate::new(5, 7)];
        assert_eq!(pq(&s, 16, 5, Strategy::Honest, 1), Ok(7));
        assert_eq!(pq(&s, 16, 9, Strategy::Honest, 2), Ok(0));
        assert_eq!(pq(&[], 16, 3, Strategy::Honest, 3), Ok(0));
    }

    #[test]
    fn point_query_matches_oracle_on_sparse_stream() {
        let mut r = rng(5);
        let n = 1 << 20;
        let s = random_stream(&mut r, n, 1000, 5);
        let f = freq_oracle(&s);
        let items: Vec<u64> = f.keys().copied().collect();
        let mut accepted = 0;
        for q in 0..50u64 {
            let query = if q % 5 == 0 { r.next_u64() % n } else { items[(r.next_u64() % items.len() as u64) as usize] };
            match pq(&s, n, query, Strategy::Honest, 100 + q) {
                Ok(v) => {
                    accepted += 1;
                    assert_eq!(v, f.get(&query).copied().unwrap_or(0));
                }
                Err(e) => assert!(matches!(e, Reject::OversizeOpening { .. }), "{e:?}"),
            }
        }
        assert!(accepted >= 45);
    }

    #[test]
    fn lying_openings_rejected() {
        let mut r = rng(6);
        let s = random_stream(&mut r, 1 << 16, 300, 3);
        for seed in 0..100 {
            for strategy in PointQueryProver::<ChaCha8Rng>::STRATEGIES {
                let query = s[seed as usize].item;
                assert!(pq(&s, 1 << 16, query, strategy, seed).is_err());
            }
        }
    }

    #[test]
    fn unsupported_strategy_is_a_usage_error() {
        let params = PQParams::square(4, PrimeField::mersenne61());
        assert!(PointQueryProver::new(params, 0, Strategy::FakeWitness, rng(0)).is_err());
    }

    #[test]
    fn params_enforce_capacity() {
        let f = PrimeField::mersenne61();
        assert!(PQParams::new(100, 9, 11, 10, f).is_err());
        assert!(PQParams::new(100, 10, 10, 10, f).is_ok());
        let sq = PQParams::square(1000, f);
        assert!(sq.c_a * sq.c_v >= 1000);
    }

    #[test]
    fn prefix_ranges_cover_exactly_the_prefix() {
        for n in [1u64, 2, 5, 8, 13, 64] {
            let d = Dyadic::new(n);
            for j in 0..=d.padded() {
                let mut covered: Vec<u64> = prefix_ranges(&d, j).flat_map(|id| {
                    let (a, b) = d.range(id);
                    a..=b
                }).collect();
                covered.sort_unstable();
                assert_eq!(covered, (0..j).collect::<Vec<_>>());
                assert_eq!(prefix_ranges(&d, j).collect::<Vec<_>>(), d.prefix(j));
            }
        }
    }

    #[test]
    fn selection_examples() {
        let s = [StreamUpdate::new(0, 5)];
        for rank in 1..=5 {
            assert_eq!(select(&s, 8, rank, Strategy::Honest, rank), Ok(0));
        }
        let ones = [StreamUpdate::new(0, 1), StreamUpdate::new(1, 1), StreamUpdate::new(2, 1)];
        assert_eq!(select(&ones, 3, 2, Strategy::Honest, 9), Ok(1));
        assert_eq!(select(&ones, 3, 4, Strategy::Honest, 9), Err(Reject::Inconsistent("rank outside [1, N]")));
        assert_eq!(select(&ones, 3, 0, Strategy::Honest, 9), Err(Reject::Inconsistent("rank outside [1, N]")));
    }

    /// Rank oracle: sort the multiset and index it.
    fn sorted_oracle(s: &[StreamUpdate], rank: u64) -> u64 {
        let mut all = Vec::new();
        for (i, f) in freq_oracle(s) {
            all.extend(core::iter::repeat_n(i, f as usize));
        }
        all.sort_unstable();
        all[rank as usize - 1]
    }

    #[test]
    fn selection_matches_sort_oracle() {
        let mut r = rng(8);
        let n = 200;
        let s = random_stream(&mut r, n, 40, 3);
        let total: i64 = s.iter().map(|u| u.delta).sum();
        for rank in 1..=total as u64 {
            assert_eq!(select(&s, n, rank, Strategy::Honest, rank), Ok(sorted_oracle(&s, rank)));
        }
    }

    #[test]
    fn selection_lies_rejected() {
        let mut r = rng(9);
        let s = random_stream(&mut r, 100, 30, 3);
        for seed in 0..50 {
            for strategy in SelectionProver::<ChaCha8Rng>::STRATEGIES {
                assert!(select(&s, 100, 1 + seed % 20, strategy, seed).is_err());
            }
        }
    }

    fn heavy_oracle(s: &[StreamUpdate], phi: f64) -> Vec<u64> {
        let f = freq_oracle(s);
        let total: i64 = f.values().sum();
        f.into_iter().filter(|&(_, c)| is_heavy(c, total, phi)).map(|(i, _)| i).collect()
    }

    #[test]
    fn heavy_hitter_examples() {
        assert_eq!(heavy(&[StreamUpdate::new(0, 10)], 1, 0.5, Strategy::Honest, 1), Ok(vec![0]));
        let uniform: Vec<StreamUpdate> = (0..100).map(|i| StreamUpdate::new(i, 1)).collect();
        assert_eq!(heavy(&uniform, 100, 0.5, Strategy::Honest, 2), Ok(vec![]));
        assert_eq!(heavy(&[], 16, 0.5, Strategy::Honest, 3), Ok(vec![]));
    }

    /// Items 0..k with frequency ∝ 1/(rank+1).
    fn zipf(n: u64, k: u64, scale: f64) -> Vec<StreamUpdate> {
        (0..k).map(|i| StreamUpdate::new((i * 7919) % n, (scale / (i + 1) as f64).ceil() as i64)).collect()
    }

    #[test]
    fn heavy_hitters_match_exact_counts_on_zipf() {
        let s = zipf(1 << 12, 300, 2000.0);
        let expected = heavy_oracle(&s, 0.05);
        assert!(expected.len() >= 3);
        assert_eq!(heavy(&s, 1 << 12, 0.05, Strategy::Honest, 4), Ok(expected));
    }

    #[test]
    fn heavy_hitter_lies_rejected() {
        let s = zipf(1 << 10, 100, 500.0);
        for seed in 0..40 {
            for strategy in HeavyHittersProver::<ChaCha8Rng>::STRATEGIES {
                let out = heavy(&s, 1 << 10, 0.05, strategy, seed);
                assert!(out.is_err(), "{strategy:?}: {out:?}");
            }
        }
    }

    #[test]
    fn tree_check_rejects_missing_child() {
        let d = Dyadic::new(4);
        let f = PrimeField::mersenne61();
        let mut t = HeavyTreeCheck::new(d, 0.5, 10, f, f.from_u64(12345));
        t.visit(0, 10).unwrap();
        t.visit(1, 10).unwrap();
        // node 2 (the other child of the root) is missing
        assert!(t.finish().is_err());
    }

    #[test]
    fn examined_set_respects_limit() {
        let d = Dyadic::new(1 << 10);
        let s = zipf(1 << 10, 500, 1000.0);
        let f = freq_oracle(&s);
        let total: i64 = f.values().sum();
        let count = |id: u64| {
            let (a, b) = d.range(id);
            f.range(a..=b).map(|(_, c)| c).sum()
        };
        for phi in [0.01, 0.05, 0.2, 0.5] {
            assert!(examined_nodes(&d, count, total, phi).len() <= examined_limit(&d, phi));
        }
    }

    proptest! {
        #[test]
        fn derived_sparsity_bound_holds(raw in prop::collection::vec((0u64..64, 1i64..4), 0..40)) {
            let s: Vec<StreamUpdate> = raw.iter().map(|&(i, d)| StreamUpdate::new(i, d)).collect();
            let d = Dyadic::new(64);
            let mut derived = BTreeMap::new();
            for u in &s {
                for_each_range(&d, u.item, |id| *derived.entry(id).or_insert(0i64) += u.delta);
            }
            derived.retain(|_, v| *v != 0);
            prop_assert!(derived.len() as u64 <= derived_sparsity(64, freq_oracle(&s).len() as u64));
        }

        #[test]
        fn vcost_independent_of_opening_count(rank in 1u64..30, seed in 0u64..1000) {
            let s: Vec<StreamUpdate> = (0..30).map(|i| StreamUpdate::new(i * 3, 1)).collect();
            let params = PQParams::square(derived_sparsity(128, 30), PrimeField::mersenne61());
            let v = SelectionVerifier::new(params, 128, rank, &mut rng(seed)).unwrap();
            let p = SelectionProver::new(params, 128, rank, Strategy::Honest, rng(seed + 1)).unwrap();
            let run = execute(v, p, &s);
            prop_assert!(run.outcome.is_ok());
            // the fingerprint state plus a constant number of counters
            prop_assert!(run.cost.vcost_words <= params.c_v + 1 + 5 + 4);
        }
    }
}
