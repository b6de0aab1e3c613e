//! MultiIndex on its own, and HeavyHitters with its node counts certified
//! through it instead of one point opening per node.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::engine::{EngineConfig, EngineProver, EngineVerifier, PurityMode};
use super::online::certified;
use crate::error::{Error, Reject};
use crate::field::{FieldElement as Fe, PrimeField};
use crate::pointqueries::{check_phi, derived_sparsity, examined_limit, examined_nodes, falsify_heavy_set, for_each_range, HeavyTreeCheck};
use crate::protocol::{Space, Strategy, StreamProver, StreamVerifier};
use crate::streams::{Dyadic, StreamUpdate};
use crate::wire::Reader;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexOutcome {
    /// Every claim f_i* = f_i confirmed.
    pub certified: bool,
    pub claims: Vec<(u64, i64)>,
    pub stages_used: usize,
}

pub struct MultiIndexVerifier {
    engine: EngineVerifier,
}

impl MultiIndexVerifier {
    pub fn new<R: RngCore + ?Sized>(cfg: EngineConfig, rng: &mut R) -> Result<Self, Error> {
        if cfg.has_main() || cfg.components != 1 {
            return Err(Error::InvalidParams("a MultiIndex run has one component and no main output"));
        }
        Ok(Self { engine: EngineVerifier::new(cfg, rng)? })
    }
}

impl StreamVerifier for MultiIndexVerifier {
    type Update = StreamUpdate;
    type Output = MultiIndexOutcome;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        let mut r = Reader::new(a);
        self.engine.start(&mut r)?;
        r.finish()
    }

    fn update(&mut self, u: &StreamUpdate) -> Result<(), Reject> {
        self.engine.update(0, u.item, u.delta)
    }

    fn finish(self, a: &[u8]) -> Result<MultiIndexOutcome, Reject> {
        let mut r = Reader::new(a);
        let mut claims = Vec::new();
        let out = self.engine.finish(&mut r, |i, f| {
            claims.push((i, f[0]));
            Ok(())
        })?;
        r.finish()?;
        Ok(MultiIndexOutcome { certified: out.certified, claims, stages_used: out.stages_used })
    }

    fn space(&self) -> Space {
        self.engine.space()
    }
}

/// Claims the true frequencies of `targets`, or lies as the strategy asks.
pub struct MultiIndexProver<R>(EngineProver<R>);

impl<R: RngCore> MultiIndexProver<R> {
    pub fn new(cfg: EngineConfig, targets: impl IntoIterator<Item = u64>, strategy: Strategy, rng: R) -> Result<Self, Error> {
        Ok(Self(EngineProver::new(cfg, strategy, rng)?.with_targets(targets)))
    }
}

impl<R: RngCore> StreamProver for MultiIndexProver<R> {
    type Update = StreamUpdate;

    fn start(&mut self) -> Vec<u8> {
        self.0.start()
    }

    fn observe(&mut self, u: &StreamUpdate) -> Option<Vec<u8>> {
        self.0.update(0, u.item, u.delta);
        None
    }

    fn finish(&mut self) -> Vec<u8> {
        self.0.finish()
    }
}

/// Engine sizing for HeavyHitters over the dyadic derived stream of a
/// stream with sparsity m and mass W.
pub fn heavy_config(n: u64, m: u64, mass: u64, phi: f64, c_v: u64, mode: PurityMode, field: Option<PrimeField>) -> Result<EngineConfig, Error> {
    check_phi(phi)?;
    let dyadic = Dyadic::new(n);
    let levels = dyadic.levels() as u64 + 1;
    EngineConfig::multiindex(
        dyadic.id_count(),
        derived_sparsity(n, m.max(1)),
        examined_limit(&dyadic, phi),
        c_v,
        mass.saturating_mul(levels),
        mode,
        field,
    )
}

pub struct HeavyHittersMultiIndexVerifier {
    engine: EngineVerifier,
    dyadic: Dyadic,
    n: u64,
    phi: f64,
    tree_basis: Fe,
    field: PrimeField,
    total: i64,
}

impl HeavyHittersMultiIndexVerifier {
    pub fn new<R: RngCore + ?Sized>(cfg: EngineConfig, n: u64, phi: f64, rng: &mut R) -> Result<Self, Error> {
        check_phi(phi)?;
        let dyadic = Dyadic::new(n);
        if cfg.n != dyadic.id_count() {
            return Err(Error::InvalidParams("engine must run over the dyadic ids"));
        }
        let field = cfg.field;
        let engine = EngineVerifier::new(cfg, rng)?;
        let tree_basis = field.random(rng);
        Ok(Self { engine, dyadic, n, phi, tree_basis, field, total: 0 })
    }
}

impl StreamVerifier for HeavyHittersMultiIndexVerifier {
    type Update = StreamUpdate;
    type Output = Vec<u64>;

    fn start(&mut self, a: &[u8]) -> Result<(), Reject> {
        let mut r = Reader::new(a);
        self.engine.start(&mut r)?;
        r.finish()
    }

    fn update(&mut self, u: &StreamUpdate) -> Result<(), Reject> {
        if u.item >= self.n {
            return Err(Reject::StreamModel("item outside the universe"));
        }
        let engine = &mut self.engine;
        let mut res = Ok(());
        for_each_range(&self.dyadic, u.item, |id| {
            if res.is_ok() {
                res = engine.update(0, id, u.delta);
            }
        });
        self.total = self.total.checked_add(u.delta).ok_or(Reject::StreamModel("total overflows"))?;
        res
    }

    fn finish(self, a: &[u8]) -> Result<Vec<u64>, Reject> {
        let mut tree = HeavyTreeCheck::new(self.dyadic, self.phi, self.total, self.field, self.tree_basis);
        let mut r = Reader::new(a);
        let out = self.engine.finish(&mut r, |id, c| tree.visit(id, c[0]))?;
        r.finish()?;
        certified(&out)?;
        tree.finish()
    }

    fn space(&self) -> Space {
        self.engine.space() + Space::field(2, self.field.bits()) + Space::aux(5)
    }
}

pub struct HeavyHittersMultiIndexProver<R> {
    engine: EngineProver<R>,
    dyadic: Dyadic,
    phi: f64,
    strategy: Strategy,
    counts: BTreeMap<u64, i64>,
    total: i64,
}

impl<R: RngCore> HeavyHittersMultiIndexProver<R> {
    pub const STRATEGIES: [Strategy; 4] =
        [Strategy::WrongAnswer, Strategy::TamperProof, Strategy::OmittedHeavyHitter, Strategy::FalseCollisionList];

    pub fn new(cfg: EngineConfig, n: u64, phi: f64, strategy: Strategy, rng: R) -> Result<Self, Error> {
        check_phi(phi)?;
        if !(strategy.is_honest() || Self::STRATEGIES.contains(&strategy)) {
            return Err(Error::InvalidParams("strategy does not apply to this scheme"));
        }
        let engine_strategy = match strategy {
            Strategy::TamperProof | Strategy::FalseCollisionList => strategy,
            _ => Strategy::Honest,
        };
        let engine = EngineProver::new(cfg, engine_strategy, rng)?;
        Ok(Self { engine, dyadic: Dyadic::new(n), phi, strategy, counts: BTreeMap::new(), total: 0 })
    }
}

impl<R: RngCore> StreamProver for HeavyHittersMultiIndexProver<R> {
    type Update = StreamUpdate;

    fn start(&mut self) -> Vec<u8> {
        self.engine.start()
    }

    fn observe(&mut self, u: &StreamUpdate) -> Option<Vec<u8>> {
        let (engine, counts) = (&mut self.engine, &mut self.counts);
        for_each_range(&self.dyadic, u.item, |id| {
            engine.update(0, id, u.delta);
            *counts.entry(id).or_insert(0) += u.delta;
        });
        self.total += u.delta;
        None
    }

    fn finish(&mut self) -> Vec<u8> {
        let counts = &self.counts;
        let nodes = examined_nodes(&self.dyadic, |id| counts.get(&id).copied().unwrap_or(0), self.total, self.phi);
        let lie = match self.strategy {
            Strategy::OmittedHeavyHitter => falsify_heavy_set(&self.dyadic, &nodes, self.total, self.phi, false),
            Strategy::WrongAnswer => falsify_heavy_set(&self.dyadic, &nodes, self.total, self.phi, true),
            _ => None,
        };
        if let Some((id, shift)) = lie {
            self.engine.set_lie(id, shift);
        }
        self.engine.set_targets(nodes.iter().map(|x| x.0));
        self.engine.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointqueries::is_heavy;
    use crate::protocol::execute;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn empty_list_certifies() {
        let cfg = EngineConfig::multiindex(64, 1, 0, 4, 10, PurityMode::Strict, None).unwrap();
        let s = [StreamUpdate::new(3, 2)];
        let v = MultiIndexVerifier::new(cfg.clone(), &mut rng(1)).unwrap();
        let p = MultiIndexProver::new(cfg, [], Strategy::Honest, rng(2)).unwrap();
        let out = execute(v, p, &s).outcome.unwrap();
        assert!(out.certified);
        assert!(out.claims.is_empty());
        assert_eq!(out.stages_used, 0);
    }

    #[test]
    fn one_wrong_claim_is_not_certified() {
        let s: Vec<_> = (0..50).map(|i| StreamUpdate::new(i * 7, 1 + (i % 3) as i64)).collect();
        let mass = s.iter().map(|u| u.delta as u64).sum::<u64>() + 1;
        let cfg = EngineConfig::multiindex(1 << 10, 50, 10, 4, mass, PurityMode::Strict, None).unwrap();
        let targets: Vec<u64> = (0..10).map(|i| i * 7).collect();
        let mut zeros = 0;
        for seed in 0..20 {
            let v = MultiIndexVerifier::new(cfg.clone(), &mut rng(seed)).unwrap();
            let p = MultiIndexProver::new(cfg.clone(), targets.clone(), Strategy::FalseCollisionList, rng(seed + 1)).unwrap();
            if let Ok(out) = execute(v, p, &s).outcome {
                assert!(!out.certified);
                zeros += 1;
            }
        }
        assert!(zeros > 10);
    }

    fn heavy_oracle(s: &[StreamUpdate], phi: f64) -> Vec<u64> {
        let mut f: BTreeMap<u64, i64> = BTreeMap::new();
        for u in s {
            *f.entry(u.item).or_insert(0) += u.delta;
        }
        let total: i64 = f.values().sum();
        f.into_iter().filter(|&(_, c)| is_heavy(c, total, phi)).map(|(i, _)| i).collect()
    }

    #[test]
    fn heavy_hitters_through_multiindex() {
        let mut r = rng(3);
        let n = 1 << 12;
        let mut accepted = 0;
        for t in 0..10 {
            let mut s: Vec<_> = (0..200).map(|_| StreamUpdate::new(r.next_u64() % n, 1)).collect();
            s.extend((0..3).map(|k| StreamUpdate::new(k * 100 + t, 40)));
            let mass = s.iter().map(|u| u.delta as u64).sum();
            let m = s.iter().map(|u| u.item).collect::<alloc::collections::BTreeSet<_>>().len() as u64;
            let phi = 0.1;
            let cfg = heavy_config(n, m, mass, phi, 16, PurityMode::Strict, None).unwrap();
            let want = heavy_oracle(&s, phi);
            let v = HeavyHittersMultiIndexVerifier::new(cfg.clone(), n, phi, &mut rng(t)).unwrap();
            let p = HeavyHittersMultiIndexProver::new(cfg.clone(), n, phi, Strategy::Honest, rng(t + 9)).unwrap();
            if let Ok(got) = execute(v, p, &s).outcome {
                assert_eq!(got, want);
                accepted += 1;
            }
            for strategy in HeavyHittersMultiIndexProver::<ChaCha8Rng>::STRATEGIES {
                let v = HeavyHittersMultiIndexVerifier::new(cfg.clone(), n, phi, &mut rng(t)).unwrap();
                let p = HeavyHittersMultiIndexProver::new(cfg.clone(), n, phi, strategy, rng(t + 9)).unwrap();
                let out = execute(v, p, &s).outcome;
                assert!(out.is_err() || out == Ok(want.clone()), "{strategy:?} {out:?}");
            }
        }
        assert!(accepted >= 7, "{accepted}");
    }
}
