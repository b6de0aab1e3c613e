//! Online schemes: a stream reduced to component updates for the engine,
//! and an answer read off the certified main values.

use alloc::vec;

use rand_core::RngCore;

use super::engine::{EngineConfig, EngineOutcome, EngineProver, EngineVerifier, Main, PurityMode};
use crate::error::{Error, Reject};
use crate::field::PrimeField;
use crate::protocol::{Space, Strategy, StreamProver, StreamVerifier};
use crate::streams::{StreamMeta, StreamUpdate, TaggedUpdate};
use crate::sumcheck::SumMoment;
use crate::wire::Reader;

/// How a scheme feeds the engine and reads its answer.
pub trait Reduction {
    type Update;
    type Output;

    /// Emits the (component, item, delta) updates `u` stands for.
    fn route(&self, u: &Self::Update, emit: &mut dyn FnMut(usize, u64, i64));

    /// Verifier-side bookkeeping beyond the engine.
    fn observe(&mut self, _u: &Self::Update) {}

    fn output(&self, out: &EngineOutcome) -> Result<Self::Output, Reject>;

    /// Words of state kept by [`Self::observe`].
    fn words(&self) -> u64 {
        0
    }
}

pub struct OnlineVerifier<T> {
    engine: EngineVerifier,
    reduction: T,
}

impl<T: Reduction> OnlineVerifier<T> {
    pub fn new<R: RngCore + ?Sized>(cfg: EngineConfig, reduction: T, rng: &mut R) -> Result<Self, Error> {
        Ok(Self { engine: EngineVerifier::new(cfg, rng)?, reduction })
    }
}

impl<T: Reduction> StreamVerifier for OnlineVerifier<T> {
    type Update = T::Update;
    type Output = T::Output;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        let mut r = Reader::new(a);
        self.engine.start(&mut r)?;
        r.finish()
    }

    fn update(&mut self, u: &T::Update) -> Result<(), Reject> {
        self.reduction.observe(u);
        let engine = &mut self.engine;
        let mut res = Ok(());
        self.reduction.route(u, &mut |c, i, d| {
            if res.is_ok() {
                res = engine.update(c, i, d);
            }
        });
        res
    }

    fn finish(self, a: &[u8]) -> Result<T::Output, Reject> {
        let mut r = Reader::new(a);
        let out = self.engine.finish(&mut r, |_, _| Ok(()))?;
        r.finish()?;
        certified(&out)?;
        self.reduction.output(&out)
    }

    fn space(&self) -> Space {
        self.engine.space() + Space::aux(self.reduction.words())
    }
}

pub(crate) fn certified(out: &EngineOutcome) -> Result<(), Reject> {
    if out.certified {
        Ok(())
    } else {
        Err(Reject::Inconsistent("collision list frequencies not certified"))
    }
}

pub struct OnlineProver<T, R> {
    engine: EngineProver<R>,
    reduction: T,
}

impl<T: Reduction, R: RngCore> OnlineProver<T, R> {
    pub fn new(cfg: EngineConfig, reduction: T, strategy: Strategy, rng: R) -> Result<Self, Error> {
        Ok(Self { engine: EngineProver::new(cfg, strategy, rng)?, reduction })
    }

    pub fn engine_mut(&mut self) -> &mut EngineProver<R> {
        &mut self.engine
    }
}

impl<T: Reduction, R: RngCore> StreamProver for OnlineProver<T, R> {
    type Update = T::Update;

    fn start(&mut self) -> alloc::vec::Vec<u8> {
        self.engine.start()
    }

    fn observe(&mut self, u: &T::Update) -> Option<alloc::vec::Vec<u8>> {
        let engine = &mut self.engine;
        self.reduction.route(u, &mut |c, i, d| engine.update(c, i, d));
        None
    }

    fn finish(&mut self) -> alloc::vec::Vec<u8> {
        self.engine.finish()
    }
}

/// Items the collision machinery must cover under `mode`.
pub fn support(meta: &StreamMeta, mode: PurityMode) -> u64 {
    match mode {
        PurityMode::Footprint => meta.footprint,
        _ => meta.sparsity,
    }
    .max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fk {
    pub k: u32,
}

impl Fk {
    pub fn config(meta: &StreamMeta, k: u32, c_v: u64, mode: PurityMode, field: Option<PrimeField>) -> Result<EngineConfig, Error> {
        if k == 0 {
            return Err(Error::InvalidParams("need k >= 1"));
        }
        EngineConfig::online(meta.n, 1, vec![Main::moment(1, 0, k)], mode, support(meta, mode), c_v, meta.mass, field)
    }
}

impl Reduction for Fk {
    type Update = StreamUpdate;
    type Output = i128;

    fn route(&self, u: &StreamUpdate, emit: &mut dyn FnMut(usize, u64, i64)) {
        emit(0, u.item, u.delta)
    }

    fn output(&self, out: &EngineOutcome) -> Result<i128, Reject> {
        Ok(out.values[0])
    }
}

/// Outputs true when S and T are disjoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Disjointness;

impl Disjointness {
    /// `meta` describes the joint stream keyed by item.
    pub fn config(meta: &StreamMeta, c_v: u64, mode: PurityMode, field: Option<PrimeField>) -> Result<EngineConfig, Error> {
        EngineConfig::online(meta.n, 2, vec![Main::Product], mode, support(meta, mode), c_v, meta.mass, field)
    }
}

impl Reduction for Disjointness {
    type Update = TaggedUpdate;
    type Output = bool;

    fn route(&self, u: &TaggedUpdate, emit: &mut dyn FnMut(usize, u64, i64)) {
        emit(u.tag.index(), u.item, u.delta)
    }

    fn output(&self, out: &EngineOutcome) -> Result<bool, Reject> {
        Ok(out.values[0] == 0)
    }
}

/// f·g from F₂(f+g), F₂(f) and F₂(g).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InnerProduct;

impl InnerProduct {
    pub fn mains() -> alloc::vec::Vec<Main> {
        vec![Main::SumMoment(SumMoment { arity: 2, k: 2 }), Main::moment(2, 0, 2), Main::moment(2, 1, 2)]
    }

    pub fn config(meta: &StreamMeta, c_v: u64, mode: PurityMode, field: Option<PrimeField>) -> Result<EngineConfig, Error> {
        EngineConfig::online(meta.n, 2, Self::mains(), mode, support(meta, mode), c_v, meta.mass, field)
    }

    fn value(out: &EngineOutcome) -> Result<i128, Reject> {
        let twice = out.values[0] - out.values[1] - out.values[2];
        if twice % 2 != 0 {
            return Err(Reject::Inconsistent("moments do not polarize to an integer"));
        }
        Ok(twice / 2)
    }
}

impl Reduction for InnerProduct {
    type Update = TaggedUpdate;
    type Output = i128;

    fn route(&self, u: &TaggedUpdate, emit: &mut dyn FnMut(usize, u64, i64)) {
        emit(u.tag.index(), u.item, u.delta)
    }

    fn output(&self, out: &EngineOutcome) -> Result<i128, Reject> {
        Self::value(out)
    }
}

/// Hamming distance of two binary vectors: F₁(f) + F₁(g) - 2 f·g, the F₁
/// terms counted directly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Hamming {
    f1: [i128; 2],
}

impl Reduction for Hamming {
    type Update = TaggedUpdate;
    type Output = i128;

    fn route(&self, u: &TaggedUpdate, emit: &mut dyn FnMut(usize, u64, i64)) {
        emit(u.tag.index(), u.item, u.delta)
    }

    fn observe(&mut self, u: &TaggedUpdate) {
        self.f1[u.tag.index()] += u.delta as i128;
    }

    fn output(&self, out: &EngineOutcome) -> Result<i128, Reject> {
        Ok(self.f1[0] + self.f1[1] - 2 * InnerProduct::value(out)?)
    }

    fn words(&self) -> u64 {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::execute;
    use crate::streams::{StreamMeta, Tag};
    use alloc::collections::BTreeMap;
    use alloc::vec::Vec;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn tagged_meta(n: u64, s: &[TaggedUpdate]) -> StreamMeta {
        StreamMeta::of_keyed(n, s.iter().map(|u| (u.item, u.delta)))
    }

    fn run<T: Reduction + Clone>(
        cfg: &EngineConfig,
        red: T,
        s: &[T::Update],
        strategy: Strategy,
        seed: u64,
    ) -> Result<T::Output, Reject>
    where
        T::Update: Clone,
    {
        let v = OnlineVerifier::new(cfg.clone(), red.clone(), &mut rng(seed)).unwrap();
        let p = OnlineProver::new(cfg.clone(), red, strategy, rng(seed + 1000)).unwrap();
        execute(v, p, s).outcome
    }

    #[test]
    fn fk_small_examples() {
        let s = [StreamUpdate::new(0, 1), StreamUpdate::new(1, 1)];
        let cfg = Fk::config(&StreamMeta::of_updates(16, &s), 2, 4, PurityMode::Strict, None).unwrap();
        assert_eq!(run(&cfg, Fk { k: 2 }, &s, Strategy::Honest, 1), Ok(2));
        let s = [StreamUpdate::new(5, 3)];
        let cfg = Fk::config(&StreamMeta::of_updates(16, &s), 3, 4, PurityMode::Strict, None).unwrap();
        assert_eq!(run(&cfg, Fk { k: 3 }, &s, Strategy::Honest, 1), Ok(27));
    }

    #[test]
    fn footprint_mode_handles_negative_frequencies() {
        let s = [StreamUpdate::new(3, -4), StreamUpdate::new(7, 2), StreamUpdate::new(9, 1), StreamUpdate::new(9, -1)];
        let meta = StreamMeta::of_updates(64, &s);
        assert_eq!((meta.sparsity, meta.footprint), (2, 3));
        let cfg = Fk::config(&meta, 2, 4, PurityMode::Footprint, None).unwrap();
        assert_eq!(run(&cfg, Fk { k: 2 }, &s, Strategy::Honest, 2), Ok(20));
        let mut r = rng(3);
        let cfg = Fk::config(&meta, 2, 4, PurityMode::Ama, None).unwrap().with_coins(&mut r);
        assert_eq!(run(&cfg, Fk { k: 2 }, &s, Strategy::Honest, 2), Ok(20));
    }

    #[test]
    fn pair_examples() {
        let e1 = [TaggedUpdate::new(Tag::S, 1, 1), TaggedUpdate::new(Tag::T, 1, 1)];
        let meta = tagged_meta(8, &e1);
        let cfg = InnerProduct::config(&meta, 4, PurityMode::Strict, None).unwrap();
        assert_eq!(run(&cfg, InnerProduct, &e1, Strategy::Honest, 4), Ok(1));
        assert_eq!(run(&cfg, Hamming::default(), &e1, Strategy::Honest, 4), Ok(0));
        let apart = [TaggedUpdate::new(Tag::S, 1, 1), TaggedUpdate::new(Tag::T, 2, 1)];
        let cfg = InnerProduct::config(&tagged_meta(8, &apart), 4, PurityMode::Strict, None).unwrap();
        assert_eq!(run(&cfg, InnerProduct, &apart, Strategy::Honest, 5), Ok(0));
        assert_eq!(run(&cfg, Hamming::default(), &apart, Strategy::Honest, 5), Ok(2));
        let dcfg = Disjointness::config(&tagged_meta(8, &apart), 4, PurityMode::Strict, None).unwrap();
        assert_eq!(run(&dcfg, Disjointness, &apart, Strategy::Honest, 5), Ok(true));
        let dcfg = Disjointness::config(&tagged_meta(8, &e1), 4, PurityMode::Strict, None).unwrap();
        assert_eq!(run(&dcfg, Disjointness, &e1, Strategy::Honest, 5), Ok(false));
        let dcfg = Disjointness::config(&tagged_meta(8, &[]), 4, PurityMode::Strict, None).unwrap();
        assert_eq!(run(&dcfg, Disjointness, &[], Strategy::Honest, 5), Ok(true));
    }

    #[test]
    fn random_pairs_match_dot_product() {
        let mut r = rng(6);
        for t in 0..20 {
            let mut s = Vec::new();
            for _ in 0..150 {
                let tag = if r.next_u64() % 2 == 0 { Tag::S } else { Tag::T };
                s.push(TaggedUpdate::new(tag, r.next_u64() % 300, 1 + (r.next_u64() % 3) as i64));
            }
            let mut f: BTreeMap<u64, [i128; 2]> = BTreeMap::new();
            for u in &s {
                f.entry(u.item).or_default()[u.tag.index()] += u.delta as i128;
            }
            let dot: i128 = f.values().map(|x| x[0] * x[1]).sum();
            let cfg = InnerProduct::config(&tagged_meta(1 << 10, &s), 16, PurityMode::Strict, None).unwrap();
            if let Ok(v) = run(&cfg, InnerProduct, &s, Strategy::Honest, t) {
                assert_eq!(v, dot);
            }
        }
    }

    #[test]
    fn disjointness_lies_never_output_one() {
        let mut r = rng(7);
        for t in 0..40 {
            let s: Vec<_> = (0..30)
                .map(|k| TaggedUpdate::new(if k % 2 == 0 { Tag::S } else { Tag::T }, r.next_u64() % 40, 1))
                .collect();
            let disjoint = {
                let mut f: BTreeMap<u64, [i64; 2]> = BTreeMap::new();
                for u in &s {
                    f.entry(u.item).or_default()[u.tag.index()] += 1;
                }
                f.values().all(|x| x[0] == 0 || x[1] == 0)
            };
            if disjoint {
                continue;
            }
            let cfg = Disjointness::config(&tagged_meta(64, &s), 4, PurityMode::Strict, None).unwrap();
            for strategy in EngineProver::<ChaCha8Rng>::STRATEGIES {
                let v = OnlineVerifier::new(cfg.clone(), Disjointness, &mut rng(t)).unwrap();
                let mut p = OnlineProver::new(cfg.clone(), Disjointness, strategy, rng(t + 50)).unwrap();
                p.engine_mut().set_target(0);
                assert_ne!(execute(v, p, &s).outcome, Ok(true), "{strategy:?}");
            }
        }
    }
}
