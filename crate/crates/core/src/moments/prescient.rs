//! Prescient schemes: the prover has seen the stream and sends a hash that
//! is injective on its support, which the verifier confirms with a purity check.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::engine::Main;
use crate::error::{Error, Reject};
use crate::field::PrimeField;
use crate::protocol::{Space, Strategy, StreamProver, StreamVerifier};
use crate::purity::{purity_requirement, zero_test_params, PurityVectors, PurityVerifier};
use crate::streams::{find_perfect_hash, PairwiseHash, StreamMeta, StreamUpdate, TaggedUpdate};
use crate::sumcheck::{prove, shift_answer, tamper_proof, Composition, DenseLayout, DenseParams, DenseVerifier, FrequencyVectors, PurityDefect};
use crate::wire::{Reader, Writer};

/// Draws allowed when searching for a perfect hash.
pub const PERFECT_HASH_TRIALS: u32 = 10_000;

/// max(⌈m^{4/3}⌉, ⌈m²/(2 ln 64)⌉): the second term keeps the chance of a
/// random pairwise hash being injective near 1/64.
pub fn prescient_range(m: u64) -> u64 {
    let m = m.max(1) as u128;
    let m4 = m.pow(4);
    let mut lo = 1u128;
    let mut hi = m * m;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if mid.saturating_mul(mid).saturating_mul(mid) >= m4 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let birthday = (m * m * 1000).div_ceil(8318);
    lo.max(birthday).min(u64::MAX as u128) as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrescientConfig {
    pub n: u64,
    pub components: usize,
    pub main: Main,
    pub r: u64,
    pub c_v: u64,
    pub mass: u64,
    pub field: PrimeField,
}

impl PrescientConfig {
    pub fn new(
        n: u64,
        components: usize,
        main: Main,
        support: u64,
        c_v: u64,
        mass: u64,
        field: Option<PrimeField>,
    ) -> Result<Self, Error> {
        if c_v < 1 || main.arity() != components {
            return Err(Error::InvalidParams("bad prescient parameters"));
        }
        let mut cfg = Self { n, components, main, r: prescient_range(support), c_v, mass, field: PrimeField::mersenne61() };
        let layout = cfg.layout();
        let meta = StreamMeta { n, mass, ..Default::default() };
        let req = DenseParams::field_bound(layout, main.degree(), cfg.bound()).merge(purity_requirement(&meta, layout, 3));
        cfg.field = match field {
            Some(f) => {
                req.check(&f)?;
                f
            }
            None => req.select()?,
        };
        Ok(cfg)
    }

    pub fn fk(meta: &StreamMeta, k: u32, c_v: u64, field: Option<PrimeField>) -> Result<Self, Error> {
        if k == 0 {
            return Err(Error::InvalidParams("need k >= 1"));
        }
        Self::new(meta.n, 1, Main::moment(1, 0, k), meta.sparsity.max(1), c_v, meta.mass, field)
    }

    /// `meta` describes the joint stream keyed by item.
    pub fn disj(meta: &StreamMeta, c_v: u64, field: Option<PrimeField>) -> Result<Self, Error> {
        Self::new(meta.n, 2, Main::Product, meta.sparsity.max(1), c_v, meta.mass, field)
    }

    pub fn layout(&self) -> DenseLayout {
        DenseLayout::with_columns(self.r, self.c_v)
    }

    fn bound(&self) -> u128 {
        self.main.magnitude_bound(&vec![self.mass as u128; self.components])
    }

    fn main_params(&self) -> DenseParams {
        DenseParams::new(self.field, self.layout(), &self.main, self.bound()).expect("field checked")
    }

    fn purity_params(&self) -> DenseParams {
        zero_test_params(self.field, self.layout(), &PurityDefect).expect("field checked")
    }
}

/// Mapped dense instance plus the injection check, sharing one point.
struct PrescientCore {
    cfg: PrescientConfig,
    h: Option<PairwiseHash>,
    dense: DenseVerifier<Main>,
    purity: PurityVerifier<PurityDefect>,
    mass: u128,
}

impl PrescientCore {
    fn new<R: RngCore + ?Sized>(cfg: PrescientConfig, rng: &mut R) -> Self {
        let point = cfg.field.random(rng);
        Self {
            cfg,
            h: None,
            dense: DenseVerifier::with_point(cfg.main_params(), cfg.main, point),
            purity: PurityVerifier { dense: DenseVerifier::with_point(cfg.purity_params(), PurityDefect, point) },
            mass: 0,
        }
    }

    fn start(&mut self, r: &mut Reader<'_>) -> Result<(), Reject> {
        let h = r.hash()?;
        if h.range != self.cfg.r || !h.covers(self.cfg.n) {
            return Err(Reject::Malformed("hash range or prime does not fit the parameters"));
        }
        self.h = Some(h);
        Ok(())
    }

    fn update(&mut self, comp: usize, item: u64, delta: i64) -> Result<(), Reject> {
        let h = self.h.ok_or(Reject::Malformed("missing start"))?;
        if item >= self.cfg.n {
            return Err(Reject::StreamModel("item outside the universe"));
        }
        self.mass += delta.unsigned_abs() as u128;
        if self.mass > self.cfg.mass as u128 {
            return Err(Reject::StreamModel("stream exceeds its declared mass"));
        }
        let f = self.cfg.field;
        let d = f.from_i64(delta);
        let (y, w) = self.dense.item_weight(h.eval(item));
        self.dense.add_weighted(comp, y, d, w);
        self.purity.add_weighted(y, item, d, w);
        Ok(())
    }

    fn finish(&self, r: &mut Reader<'_>) -> Result<i128, Reject> {
        self.h.ok_or(Reject::Malformed("missing start"))?;
        let value = self.dense.verify_bytes(r)?;
        if !self.purity.verify(r)? {
            return Err(Reject::Impure);
        }
        Ok(value)
    }

    fn space(&self) -> Space {
        self.dense.space() + self.purity.dense.space() + Space::aux(5)
    }
}

/// Prover side: exact frequencies, a perfect hash and the two proofs.
struct PrescientWitness {
    cfg: PrescientConfig,
    freq: BTreeMap<u64, Vec<i64>>,
}

impl PrescientWitness {
    fn new(cfg: PrescientConfig, updates: impl IntoIterator<Item = (usize, u64, i64)>) -> Self {
        let mut freq: BTreeMap<u64, Vec<i64>> = BTreeMap::new();
        for (c, i, d) in updates {
            freq.entry(i).or_insert_with(|| vec![0; cfg.components])[c] += d;
        }
        freq.retain(|_, f| f.iter().any(|&x| x != 0));
        Self { cfg, freq }
    }

    fn truth(&self) -> i128 {
        let f = self.cfg.field;
        let mut x = vec![f.zero(); self.cfg.components];
        let v = self.freq.values().fold(f.zero(), |acc, fi| {
            for (e, &v) in x.iter_mut().zip(fi) {
                *e = f.from_i64(v);
            }
            f.add(acc, self.cfg.main.eval(&f, &x))
        });
        f.to_signed(v)
    }

    fn perfect_hash<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<PairwiseHash, Error> {
        let items: Vec<u64> = self.freq.keys().copied().collect();
        Ok(find_perfect_hash(&items, self.cfg.r, PERFECT_HASH_TRIALS, rng)?.0)
    }

    /// End annotation. `claim` replaces the true answer; `tamper` perturbs the proof.
    fn proofs<R: RngCore + ?Sized>(&self, h: &PairwiseHash, claim: Option<i128>, tamper: bool, rng: &mut R) -> Vec<u8> {
        let f = self.cfg.field;
        let mut vectors = FrequencyVectors::new(f, self.cfg.components);
        let mut purity = PurityVectors::new(f, false);
        for (&i, fi) in &self.freq {
            let b = h.eval(i);
            for (j, &x) in fi.iter().enumerate() {
                vectors.add_int(j, b, x);
            }
            purity.add(b, i, f.from_i64(fi.iter().sum()));
        }
        let params = self.cfg.main_params();
        let mut proof = prove(&params, &self.cfg.main, vectors.vectors());
        if let Some(c) = claim {
            let shift = f.from_i128(c - self.truth());
            if !shift.is_zero() {
                proof = shift_answer(&params, &proof, shift, rng);
            }
        }
        if tamper {
            proof = tamper_proof(&params, &proof, rng);
        }
        let mut w = Writer::new();
        w.poly(&f, &proof);
        w.poly(&f, &prove(&self.cfg.purity_params(), &PurityDefect, purity.vectors.vectors()));
        w.into_bytes()
    }
}

fn check_strategy(strategy: Strategy, allowed: &[Strategy]) -> Result<(), Error> {
    if strategy.is_honest() || allowed.contains(&strategy) {
        Ok(())
    } else {
        Err(Error::InvalidParams("strategy does not apply to this scheme"))
    }
}

pub struct FkPrescientVerifier(PrescientCore);

impl FkPrescientVerifier {
    pub fn new<R: RngCore + ?Sized>(cfg: PrescientConfig, rng: &mut R) -> Self {
        Self(PrescientCore::new(cfg, rng))
    }
}

impl StreamVerifier for FkPrescientVerifier {
    type Update = StreamUpdate;
    type Output = i128;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        let mut r = Reader::new(a);
        self.0.start(&mut r)?;
        r.finish()
    }

    fn update(&mut self, u: &StreamUpdate) -> Result<(), Reject> {
        self.0.update(0, u.item, u.delta)
    }

    fn finish(self, a: &[u8]) -> Result<i128, Reject> {
        let mut r = Reader::new(a);
        let v = self.0.finish(&mut r)?;
        r.finish()?;
        Ok(v)
    }

    fn space(&self) -> Space {
        self.0.space()
    }
}

pub struct FkPrescientProver<R> {
    witness: PrescientWitness,
    h: PairwiseHash,
    strategy: Strategy,
    rng: R,
}

impl<R: RngCore> FkPrescientProver<R> {
    pub const STRATEGIES: [Strategy; 2] = [Strategy::WrongAnswer, Strategy::TamperProof];

    pub fn new(cfg: PrescientConfig, stream: &[StreamUpdate], strategy: Strategy, mut rng: R) -> Result<Self, Error> {
        check_strategy(strategy, &Self::STRATEGIES)?;
        let witness = PrescientWitness::new(cfg, stream.iter().map(|u| (0, u.item, u.delta)));
        let h = witness.perfect_hash(&mut rng)?;
        Ok(Self { witness, h, strategy, rng })
    }
}

impl<R: RngCore> StreamProver for FkPrescientProver<R> {
    type Update = StreamUpdate;

    fn start(&mut self) -> Vec<u8> {
        let mut w = Writer::new();
        w.hash(&self.h);
        w.into_bytes()
    }

    fn finish(&mut self) -> Vec<u8> {
        let claim = (self.strategy == Strategy::WrongAnswer).then(|| self.witness.truth() + 1);
        self.witness.proofs(&self.h, claim, self.strategy == Strategy::TamperProof, &mut self.rng)
    }
}

const WITNESS: u8 = 0;
const DISJOINT: u8 = 1;

enum DisjBranch {
    Unstarted,
    Witness { item: u64, counts: [i128; 2] },
    Disjoint,
}

/// Outputs true when S and T are disjoint.
pub struct DisjPrescientVerifier {
    core: PrescientCore,
    branch: DisjBranch,
}

impl DisjPrescientVerifier {
    pub fn new<R: RngCore + ?Sized>(cfg: PrescientConfig, rng: &mut R) -> Self {
        Self { core: PrescientCore::new(cfg, rng), branch: DisjBranch::Unstarted }
    }
}

impl StreamVerifier for DisjPrescientVerifier {
    type Update = TaggedUpdate;
    type Output = bool;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        let mut r = Reader::new(a);
        self.branch = match r.u8()? {
            WITNESS => DisjBranch::Witness { item: r.u64()?, counts: [0; 2] },
            DISJOINT => {
                self.core.start(&mut r)?;
                DisjBranch::Disjoint
            }
            _ => return Err(Reject::Malformed("unknown branch")),
        };
        r.finish()
    }

    fn update(&mut self, u: &TaggedUpdate) -> Result<(), Reject> {
        match &mut self.branch {
            DisjBranch::Unstarted => Err(Reject::Malformed("missing start")),
            DisjBranch::Witness { item, counts } => {
                if u.item >= self.core.cfg.n {
                    return Err(Reject::StreamModel("item outside the universe"));
                }
                if u.item == *item {
                    counts[u.tag.index()] += u.delta as i128;
                }
                Ok(())
            }
            DisjBranch::Disjoint => self.core.update(u.tag.index(), u.item, u.delta),
        }
    }

    fn finish(self, a: &[u8]) -> Result<bool, Reject> {
        let mut r = Reader::new(a);
        let out = match self.branch {
            DisjBranch::Unstarted => return Err(Reject::Malformed("missing start")),
            DisjBranch::Witness { counts, .. } => {
                if counts[0] <= 0 || counts[1] <= 0 {
                    return Err(Reject::Inconsistent("witness is not in both sets"));
                }
                false
            }
            DisjBranch::Disjoint => self.core.finish(&mut r)? == 0,
        };
        r.finish()?;
        Ok(out)
    }

    fn space(&self) -> Space {
        match self.branch {
            DisjBranch::Witness { .. } => Space::aux(4),
            _ => self.core.space() + Space::aux(1),
        }
    }
}

pub struct DisjPrescientProver<R> {
    witness: PrescientWitness,
    /// The item named in the witness branch, or None for the disjoint branch.
    named: Option<u64>,
    h: Option<PairwiseHash>,
    strategy: Strategy,
    rng: R,
}

impl<R: RngCore> DisjPrescientProver<R> {
    pub const STRATEGIES: [Strategy; 3] = [Strategy::WrongAnswer, Strategy::TamperProof, Strategy::FakeWitness];

    pub fn new(cfg: PrescientConfig, stream: &[TaggedUpdate], strategy: Strategy, mut rng: R) -> Result<Self, Error> {
        check_strategy(strategy, &Self::STRATEGIES)?;
        let witness = PrescientWitness::new(cfg, stream.iter().map(|u| (u.tag.index(), u.item, u.delta)));
        let common = witness.freq.iter().find(|(_, f)| f[0] > 0 && f[1] > 0).map(|(&i, _)| i);
        // an item not in both sets, for fake witnesses
        let lone = (0..).find(|i| witness.freq.get(i).is_none_or(|f| f[0] <= 0 || f[1] <= 0)).expect("some item is missing");
        let named = match (strategy, common) {
            (Strategy::Honest, c) => c,
            (Strategy::TamperProof, _) => None,
            (Strategy::FakeWitness, _) => Some(lone),
            // claim the opposite of the truth
            (_, Some(_)) => None,
            (_, None) => Some(lone),
        };
        let h = match named {
            Some(_) => None,
            None => Some(witness.perfect_hash(&mut rng)?),
        };
        Ok(Self { witness, named, h, strategy, rng })
    }
}

impl<R: RngCore> StreamProver for DisjPrescientProver<R> {
    type Update = TaggedUpdate;

    fn start(&mut self) -> Vec<u8> {
        let mut w = Writer::new();
        match (self.named, &self.h) {
            (Some(i), _) => {
                w.u8(WITNESS).u64(i);
            }
            (None, Some(h)) => {
                w.u8(DISJOINT).hash(h);
            }
            (None, None) => unreachable!("a hash is drawn for the disjoint branch"),
        }
        w.into_bytes()
    }

    fn finish(&mut self) -> Vec<u8> {
        match &self.h {
            None => Vec::new(),
            Some(h) => {
                let claim = (self.strategy == Strategy::WrongAnswer).then_some(0);
                self.witness.proofs(h, claim, self.strategy == Strategy::TamperProof, &mut self.rng)
            }
        }
    }
}

/// Intersection size check used by tests and the harness.
pub fn product_value(stream: &[TaggedUpdate]) -> i128 {
    let mut f: BTreeMap<u64, [i128; 2]> = BTreeMap::new();
    for u in stream {
        f.entry(u.item).or_default()[u.tag.index()] += u.delta as i128;
    }
    f.values().map(|x| x[0] * x[1]).sum()
}
