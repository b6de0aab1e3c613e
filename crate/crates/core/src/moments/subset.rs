//! X ⊆ Y for a multiset X and a set Y, updates tagged S (X) and T (Y).
//!
//! Negative branch: the prover names x and opens its bucket in both point
//! query states, showing f^X_x ≥ 1 and f^Y_x = 0. Positive branch: the
//! certified f^X·f^Y equals |X|, which the verifier counts itself.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::engine::{EngineConfig, EngineProver, EngineVerifier, Main, PurityMode};
use super::online::{certified, support};
use crate::error::{Error, Reject};
use crate::field::{FieldElement as Fe, PrimeField};
use crate::pointqueries::{fingerprint_field, shift_entry, write_opening, BucketFingerprintState, BucketedFrequencies, PQParams};
use crate::protocol::{Space, Strategy, StreamProver, StreamVerifier};
use crate::streams::{PairwiseHash, StreamMeta, Tag, TaggedUpdate};
use crate::wire::{Reader, Writer};

const NEGATIVE: u8 = 0;
const POSITIVE: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetConfig {
    pub engine: EngineConfig,
    pub pq: PQParams,
}

impl SubsetConfig {
    /// `meta` describes the joint stream keyed by item.
    pub fn new(meta: &StreamMeta, c_v: u64, field: Option<PrimeField>) -> Result<Self, Error> {
        let mode = PurityMode::Strict;
        let engine = EngineConfig::online(meta.n, 2, vec![Main::Product], mode, support(meta, mode), c_v, meta.mass, field)?;
        let pq = PQParams::square(meta.sparsity.max(1), fingerprint_field(meta.n)?);
        Ok(Self { engine, pq })
    }
}

pub struct SubsetVerifier {
    cfg: SubsetConfig,
    engine: EngineVerifier,
    basis: Fe,
    states: Option<[BucketFingerprintState; 2]>,
    x_total: i128,
}

impl SubsetVerifier {
    pub fn new<R: RngCore + ?Sized>(cfg: SubsetConfig, rng: &mut R) -> Result<Self, Error> {
        let engine = EngineVerifier::new(cfg.engine.clone(), rng)?;
        let basis = cfg.pq.field.random(rng);
        Ok(Self { cfg, engine, basis, states: None, x_total: 0 })
    }
}

impl StreamVerifier for SubsetVerifier {
    type Update = TaggedUpdate;
    /// True when X ⊆ Y.
    type Output = bool;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        let mut r = Reader::new(a);
        self.engine.start(&mut r)?;
        let h = r.hash()?;
        r.finish()?;
        let n = self.cfg.engine.n;
        if h.range != self.cfg.pq.c_v || !h.covers(n) {
            return Err(Reject::Malformed("hash range or prime does not fit the parameters"));
        }
        let state = BucketFingerprintState::new(self.cfg.pq.field, n, h, self.basis);
        self.states = Some([state.clone(), state]);
        Ok(())
    }

    fn update(&mut self, u: &TaggedUpdate) -> Result<(), Reject> {
        let states = self.states.as_mut().ok_or(Reject::Malformed("missing start"))?;
        self.engine.update(u.tag.index(), u.item, u.delta)?;
        states[u.tag.index()].update(u.item, u.delta);
        if u.tag == Tag::S {
            self.x_total += u.delta as i128;
        }
        Ok(())
    }

    fn finish(self, a: &[u8]) -> Result<bool, Reject> {
        let states = self.states.ok_or(Reject::Malformed("missing start"))?;
        let mut r = Reader::new(a);
        let out = match r.u8()? {
            NEGATIVE => {
                let x = r.u64()?;
                if x >= self.cfg.engine.n {
                    return Err(Reject::Malformed("item outside the universe"));
                }
                let b = states[0].hash().eval(x);
                let limit = self.cfg.pq.opening_limit();
                let fx = states[0].check_opening(b, x, limit, &mut r)?;
                let fy = states[1].check_opening(b, x, limit, &mut r)?;
                if fx < 1 || fy != 0 {
                    return Err(Reject::Inconsistent("named item does not show X outside Y"));
                }
                false
            }
            POSITIVE => {
                let out = self.engine.finish(&mut r, |_, _| Ok(()))?;
                certified(&out)?;
                out.values[0] == self.x_total
            }
            _ => return Err(Reject::Malformed("unknown branch")),
        };
        r.finish()?;
        Ok(out)
    }

    fn space(&self) -> Space {
        let pq = match &self.states {
            Some([a, b]) => a.space() + b.space(),
            None => Space::field(1, self.cfg.pq.field.bits()),
        };
        self.engine.space() + pq + Space::aux(2)
    }
}

pub struct SubsetProver<R> {
    strategy: Strategy,
    engine: EngineProver<ChaCha8Rng>,
    rng: R,
    pq_range: u64,
    freq: Option<[BucketedFrequencies; 2]>,
    x_total: i128,
}

impl<R: RngCore> SubsetProver<R> {
    pub const STRATEGIES: [Strategy; 4] =
        [Strategy::TamperProof, Strategy::WrongAnswer, Strategy::FalseCollisionList, Strategy::FakeWitness];

    pub fn new(cfg: SubsetConfig, strategy: Strategy, rng: R) -> Result<Self, Error> {
        if !(strategy.is_honest() || Self::STRATEGIES.contains(&strategy)) {
            return Err(Error::InvalidParams("strategy does not apply to this scheme"));
        }
        let engine_strategy = if strategy == Strategy::FakeWitness { Strategy::Honest } else { strategy };
        let mut rng = rng;
        let engine = EngineProver::new(cfg.engine, engine_strategy, ChaCha8Rng::seed_from_u64(rng.next_u64()))?;
        Ok(Self { strategy, engine, rng, pq_range: cfg.pq.c_v, freq: None, x_total: 0 })
    }

    /// Writes the negative branch naming `x`; `lie` drops x from Y's opening.
    fn negative(&self, x: u64, lie: bool) -> Vec<u8> {
        let [fx, fy] = self.freq.as_ref().expect("start precedes the stream");
        let mut w = Writer::new();
        w.u8(NEGATIVE).u64(x);
        write_opening(&mut w, &fx.opening_of(x));
        let mut y = fy.opening_of(x);
        if lie {
            shift_entry(&mut y, x, -fy.get(x));
        }
        write_opening(&mut w, &y);
        w.into_bytes()
    }
}

impl<R: RngCore> StreamProver for SubsetProver<R> {
    type Update = TaggedUpdate;

    fn start(&mut self) -> Vec<u8> {
        let mut a = self.engine.start();
        let h = PairwiseHash::random(self.pq_range, &mut self.rng);
        self.freq = Some([BucketedFrequencies::new(h), BucketedFrequencies::new(h)]);
        let mut w = Writer::new();
        w.hash(&h);
        a.extend(w.into_bytes());
        a
    }

    fn observe(&mut self, u: &TaggedUpdate) -> Option<Vec<u8>> {
        self.engine.update(u.tag.index(), u.item, u.delta);
        self.freq.as_mut().expect("start precedes the stream")[u.tag.index()].add(u.item, u.delta);
        if u.tag == Tag::S {
            self.x_total += u.delta as i128;
        }
        None
    }

    fn finish(&mut self) -> Vec<u8> {
        let [fx, fy] = self.freq.as_ref().expect("start precedes the stream");
        let xs = fx.support();
        let outside = xs.iter().find(|(&i, &c)| c >= 1 && fy.get(i) == 0).map(|(&i, _)| i);
        let inside = xs.keys().copied().find(|&i| fy.get(i) != 0);
        match (self.strategy, outside) {
            (Strategy::Honest, Some(x)) => self.negative(x, false),
            // name an item of Y and hide it from Y's opening
            (Strategy::WrongAnswer | Strategy::FakeWitness, None) => self.negative(inside.unwrap_or(0), true),
            (Strategy::FakeWitness, Some(_)) => self.negative(inside.unwrap_or(0), true),
            (s, _) => {
                if s == Strategy::WrongAnswer {
                    self.engine.set_target(self.x_total);
                }
                let mut w = Writer::new();
                w.u8(POSITIVE);
                let mut a = w.into_bytes();
                a.extend(self.engine.finish());
                a
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::execute;
    use alloc::collections::BTreeSet;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn stream(x: &[u64], y: &[u64]) -> Vec<TaggedUpdate> {
        let mut s: Vec<_> = y.iter().map(|&i| TaggedUpdate::new(Tag::T, i, 1)).collect();
        s.extend(x.iter().map(|&i| TaggedUpdate::new(Tag::S, i, 1)));
        s
    }

    fn run(s: &[TaggedUpdate], n: u64, strategy: Strategy, seed: u64) -> Result<bool, Reject> {
        let meta = StreamMeta::of_keyed(n, s.iter().map(|u| (u.item, u.delta)));
        let cfg = SubsetConfig::new(&meta, 4, None).unwrap();
        let v = SubsetVerifier::new(cfg.clone(), &mut rng(seed)).unwrap();
        let p = SubsetProver::new(cfg, strategy, rng(seed + 3)).unwrap();
        execute(v, p, s).outcome
    }

    #[test]
    fn examples() {
        assert_eq!(run(&stream(&[], &[1, 2]), 8, Strategy::Honest, 1), Ok(true));
        assert_eq!(run(&stream(&[3], &[3, 5]), 8, Strategy::Honest, 1), Ok(true));
        assert_eq!(run(&stream(&[3, 4], &[3, 5]), 8, Strategy::Honest, 1), Ok(false));
    }

    #[test]
    fn random_sets_and_lies() {
        let mut r = rng(2);
        for t in 0..30 {
            let y: BTreeSet<u64> = (0..60).map(|_| r.next_u64() % 1000).collect();
            let ys: Vec<u64> = y.iter().copied().collect();
            let mut x: BTreeSet<u64> = ys.iter().copied().step_by(3).collect();
            if t % 2 == 1 {
                x.insert(1000 + t);
            }
            let xs: Vec<u64> = x.into_iter().collect();
            let s = stream(&xs, &ys);
            let truth = t % 2 == 0;
            if let Ok(v) = run(&s, 1 << 12, Strategy::Honest, t) {
                assert_eq!(v, truth);
            }
            for strategy in SubsetProver::<ChaCha8Rng>::STRATEGIES {
                let out = run(&s, 1 << 12, strategy, t);
                assert!(out.is_err() || out == Ok(truth), "{strategy:?} {out:?}");
            }
        }
    }
}
