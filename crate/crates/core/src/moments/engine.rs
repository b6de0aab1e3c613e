//! The online machinery behind every moment scheme.
//!
//! A hash h: [n] → [r] is fixed before the stream and the main dense
//! instances run on the mapped vectors. At the end the prover lists the items
//! h failed to isolate (L_0) with their frequencies f*; the verifier deletes
//! them, checks h is injective on what is left, and certifies f* in stages:
//! stage j hashes by a fresh h_j, the items it isolates are marked, and a
//! masked purity check plus a masked Σ (f - f*)² check confirm them.
//!
//! All instances over [r] share one secret point, so a stream update costs
//! one Lagrange weight per hash rather than one per instance.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Reject};
use crate::field::{FieldElement as Fe, PrimeField};
use crate::protocol::{Space, Strategy};
use crate::purity::{
    ama_requirement, purity_requirement, zero_test_params, AmaCoins, AmaLayout, AmaVectors, AmaVerifier, PurityVectors,
    PurityVerifier,
};
use crate::streams::{PairwiseHash, StreamMeta};
use crate::sumcheck::{
    prove, shift_answer, tamper_proof, Composition, DenseLayout, DenseParams, DenseVerifier, FieldBound, FrequencyVectors,
    MaskedProduct, MaskedPurityDefect, MaskedSquares, Moment, Product, PurityDefect, SumMoment,
};
use crate::wire::{Reader, Writer};

/// How an item's weight in the purity streams is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PurityMode {
    /// Σ_j fʲ_i; needs nonnegative frequencies.
    Strict,
    /// Σ |δ| over the item's updates, so every touched item counts.
    Footprint,
    /// Public-coin fingerprints of f_i; single component only.
    Ama,
}

/// Compositions the main instances may compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Main {
    Moment(Moment),
    SumMoment(SumMoment),
    Product,
}

impl Main {
    /// z^k on component `index` of `arity`.
    pub fn moment(arity: usize, index: usize, k: u32) -> Self {
        Main::Moment(Moment { arity, index, k })
    }
}

impl Composition for Main {
    fn arity(&self) -> usize {
        match self {
            Main::Moment(m) => m.arity,
            Main::SumMoment(m) => m.arity,
            Main::Product => 2,
        }
    }
    fn degree(&self) -> usize {
        match self {
            Main::Moment(m) => m.degree(),
            Main::SumMoment(m) => m.degree(),
            Main::Product => 2,
        }
    }
    fn eval(&self, f: &PrimeField, x: &[Fe]) -> Fe {
        match self {
            Main::Moment(m) => m.eval(f, x),
            Main::SumMoment(m) => m.eval(f, x),
            Main::Product => Product.eval(f, x),
        }
    }
    fn magnitude_bound(&self, l1: &[u128]) -> u128 {
        match self {
            Main::Moment(m) => m.magnitude_bound(l1),
            Main::SumMoment(m) => m.magnitude_bound(l1),
            Main::Product => Product.magnitude_bound(l1),
        }
    }
}

/// r = ⌈m·√c_v⌉.
pub fn reduced_range(support: u64, c_v: u64) -> u64 {
    let sq = (support as u128).saturating_mul(support as u128).saturating_mul(c_v as u128);
    let s = sq.isqrt();
    let s = if s * s < sq { s + 1 } else { s };
    (s.min(u64::MAX as u128) as u64).max(1)
}

/// ⌈10·m²/r⌉, the Markov bound on an honest collision list.
pub fn list_limit(support: u64, r: u64) -> usize {
    let m2 = (support as u128) * (support as u128) * 10;
    m2.div_ceil(r.max(1) as u128).min(usize::MAX as u128) as usize
}

/// ⌈log_{c_v} ℓ⌉ + 3.
pub fn stage_budget(list: usize, c_v: u64) -> usize {
    let mut t = 0;
    let mut cover: u128 = 1;
    while cover < list as u128 {
        cover = cover.saturating_mul(c_v as u128);
        t += 1;
    }
    t + 3
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub n: u64,
    pub components: usize,
    /// Empty for a bare MultiIndex run, which then sends no main hash.
    pub mains: Vec<Main>,
    pub mode: PurityMode,
    pub r: u64,
    pub c_v: u64,
    pub list_limit: usize,
    pub stages: usize,
    /// Declared Σ|δ| over all components.
    pub mass: u64,
    pub field: PrimeField,
    pub coins: Option<AmaCoins>,
}

impl EngineConfig {
    /// Online scheme over a stream with `support` items of nonzero purity
    /// weight (sparsity, or footprint in footprint mode).
    #[allow(clippy::too_many_arguments)]
    pub fn online(
        n: u64,
        components: usize,
        mains: Vec<Main>,
        mode: PurityMode,
        support: u64,
        c_v: u64,
        mass: u64,
        field: Option<PrimeField>,
    ) -> Result<Self, Error> {
        check_c_v(c_v)?;
        let r = reduced_range(support, c_v);
        let limit = list_limit(support, r);
        Self::build(n, components, mains, mode, r, c_v, limit, stage_budget(limit, c_v), mass, field)
    }

    /// A bare MultiIndex run certifying at most `list` claims.
    pub fn multiindex(
        n: u64,
        support: u64,
        list: usize,
        c_v: u64,
        mass: u64,
        mode: PurityMode,
        field: Option<PrimeField>,
    ) -> Result<Self, Error> {
        check_c_v(c_v)?;
        let r = reduced_range(support, c_v);
        Self::build(n, 1, Vec::new(), mode, r, c_v, list, stage_budget(list, c_v), mass, field)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn build(
        n: u64,
        components: usize,
        mains: Vec<Main>,
        mode: PurityMode,
        r: u64,
        c_v: u64,
        list_limit: usize,
        stages: usize,
        mass: u64,
        field: Option<PrimeField>,
    ) -> Result<Self, Error> {
        if components == 0 || mains.iter().any(|m| m.arity() != components) {
            return Err(Error::InvalidParams("main compositions must take one input per component"));
        }
        if mode == PurityMode::Ama && components != 1 {
            return Err(Error::InvalidParams("public-coin purity supports one component"));
        }
        if stages > u8::MAX as usize {
            return Err(Error::InvalidParams("too many stages"));
        }
        let mut cfg = Self {
            n,
            components,
            mains,
            mode,
            r,
            c_v,
            list_limit,
            stages,
            mass,
            field: PrimeField::mersenne61(),
            coins: None,
        };
        let req = cfg.requirement();
        cfg.field = match field {
            Some(f) => {
                req.check(&f)?;
                f
            }
            None => req.select()?,
        };
        Ok(cfg)
    }

    /// Draws the public coins; required before building an AMA verifier or prover.
    pub fn with_coins<R: RngCore + ?Sized>(mut self, rng: &mut R) -> Self {
        if self.mode == PurityMode::Ama {
            self.coins = Some(AmaCoins::draw(&self.field, rng));
        }
        self
    }

    pub fn has_main(&self) -> bool {
        !self.mains.is_empty()
    }

    pub fn layout(&self) -> DenseLayout {
        DenseLayout::with_columns(self.r, self.c_v)
    }

    fn ama_layout(&self) -> DenseLayout {
        DenseLayout::with_columns(self.r * crate::purity::item_bits(self.n), self.c_v)
    }

    /// Components of the SubF₂ check: the frequencies, plus the absolute
    /// mass in footprint mode.
    fn claim_width(&self) -> usize {
        self.components + (self.mode == PurityMode::Footprint) as usize
    }

    fn l1(&self) -> Vec<u128> {
        vec![self.mass as u128; self.components]
    }

    pub fn main_bound(&self, p: usize) -> u128 {
        self.mains[p].magnitude_bound(&self.l1())
    }

    fn subf2_bound(&self) -> u128 {
        let mut l1 = vec![2 * self.mass as u128; self.claim_width()];
        l1.push(self.list_limit as u128);
        MaskedSquares(self.claim_width()).magnitude_bound(&l1)
    }

    fn requirement(&self) -> FieldBound {
        let layout = self.layout();
        let mut req = FieldBound::NONE;
        for (p, m) in self.mains.iter().enumerate() {
            req = req.merge(DenseParams::field_bound(layout, m.degree(), self.main_bound(p)));
        }
        req = req.merge(DenseParams::field_bound(layout, 3, self.subf2_bound()));
        // every purity weight is bounded by the mass plus the list insertions
        let meta = StreamMeta { n: self.n, len: 0, mass: self.mass.saturating_add(self.list_limit as u64), ..Default::default() };
        match self.mode {
            PurityMode::Ama => req.merge(ama_requirement(self.n, self.r, self.c_v)),
            _ => req.merge(purity_requirement(&meta, layout, 3)),
        }
    }

    fn main_params(&self, p: usize) -> DenseParams {
        DenseParams::new(self.field, self.layout(), &self.mains[p], self.main_bound(p)).expect("field checked at build")
    }

    fn stage0_params(&self) -> DenseParams {
        match self.mode {
            PurityMode::Ama => zero_test_params(self.field, self.ama_layout(), &Product),
            _ => zero_test_params(self.field, self.layout(), &PurityDefect),
        }
        .expect("field checked at build")
    }

    fn stage_purity_params(&self) -> DenseParams {
        match self.mode {
            PurityMode::Ama => zero_test_params(self.field, self.ama_layout(), &MaskedProduct),
            _ => zero_test_params(self.field, self.layout(), &MaskedPurityDefect),
        }
        .expect("field checked at build")
    }

    fn subf2_params(&self) -> DenseParams {
        DenseParams::new(self.field, self.layout(), &MaskedSquares(self.claim_width()), self.subf2_bound())
            .expect("field checked at build")
    }

    fn ama(&self) -> (AmaCoins, AmaLayout) {
        let coins = self.coins.expect("public coins drawn before the run");
        (coins, AmaLayout::new(&self.field, &coins, self.n, self.r))
    }

    /// Public coins to charge to both costs, if any.
    pub fn coin_cost(&self) -> (u64, u64) {
        match self.coins {
            Some(_) => (AmaCoins::WORDS, AmaCoins::bits(&self.field)),
            None => (0, 0),
        }
    }
}

fn check_c_v(c_v: u64) -> Result<(), Error> {
    if c_v < 2 {
        return Err(Error::InvalidParams("c_v must exceed 1"));
    }
    Ok(())
}

fn read_hash(r: &mut Reader<'_>, cfg: &EngineConfig) -> Result<PairwiseHash, Reject> {
    let h = r.hash()?;
    if h.range != cfg.r || !h.covers(cfg.n) {
        return Err(Reject::Malformed("hash range or prime does not fit the parameters"));
    }
    Ok(h)
}

enum Stage0 {
    None,
    Moments(PurityVerifier<PurityDefect>),
    Ama(AmaVerifier<Product>),
}

enum StagePurity {
    Moments(PurityVerifier<MaskedPurityDefect>),
    Ama(AmaVerifier<MaskedProduct>),
}

struct StageState {
    purity: StagePurity,
    subf2: DenseVerifier<MaskedSquares>,
}

/// Result of a completed run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineOutcome {
    /// One value per main composition.
    pub values: Vec<i128>,
    /// Whether every claimed frequency was confirmed.
    pub certified: bool,
    pub list_len: usize,
    pub stages_used: usize,
}

pub struct EngineVerifier {
    cfg: EngineConfig,
    h: Option<PairwiseHash>,
    stage_h: Vec<PairwiseHash>,
    mains: Vec<DenseVerifier<Main>>,
    stage0: Stage0,
    stages: Vec<StageState>,
    mass: u128,
}

impl EngineVerifier {
    pub fn new<R: RngCore + ?Sized>(cfg: EngineConfig, rng: &mut R) -> Result<Self, Error> {
        if cfg.mode == PurityMode::Ama && cfg.coins.is_none() {
            return Err(Error::InvalidParams("public coins must be drawn first"));
        }
        let point = cfg.field.random(rng);
        let ama_point = cfg.field.random(rng);
        let mains = (0..cfg.mains.len()).map(|p| DenseVerifier::with_point(cfg.main_params(p), cfg.mains[p], point)).collect();
        let stage0 = match (cfg.has_main(), cfg.mode) {
            (false, _) => Stage0::None,
            (true, PurityMode::Ama) => {
                let (coins, layout) = cfg.ama();
                Stage0::Ama(AmaVerifier { dense: DenseVerifier::with_point(cfg.stage0_params(), Product, ama_point), coins, layout })
            }
            (true, _) => Stage0::Moments(PurityVerifier { dense: DenseVerifier::with_point(cfg.stage0_params(), PurityDefect, point) }),
        };
        let stages = (0..cfg.stages)
            .map(|_| {
                let purity = match cfg.mode {
                    PurityMode::Ama => {
                        let (coins, layout) = cfg.ama();
                        let dense = DenseVerifier::with_point(cfg.stage_purity_params(), MaskedProduct, ama_point);
                        StagePurity::Ama(AmaVerifier { dense, coins, layout })
                    }
                    _ => StagePurity::Moments(PurityVerifier {
                        dense: DenseVerifier::with_point(cfg.stage_purity_params(), MaskedPurityDefect, point),
                    }),
                };
                let subf2 = DenseVerifier::with_point(cfg.subf2_params(), MaskedSquares(cfg.claim_width()), point);
                StageState { purity, subf2 }
            })
            .collect();
        Ok(Self { cfg, h: None, stage_h: Vec::new(), mains, stage0, stages, mass: 0 })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Reads the main hash (if any) and the stage hashes.
    pub fn start(&mut self, r: &mut Reader<'_>) -> Result<(), Reject> {
        if self.cfg.has_main() {
            self.h = Some(read_hash(r, &self.cfg)?);
        }
        self.stage_h = (0..self.cfg.stages).map(|_| read_hash(r, &self.cfg)).collect::<Result<_, _>>()?;
        Ok(())
    }

    fn started(&self) -> Result<(), Reject> {
        if self.stage_h.len() != self.cfg.stages || (self.cfg.has_main() && self.h.is_none()) {
            return Err(Reject::Malformed("missing start"));
        }
        Ok(())
    }

    fn main_weight(&self, bucket: u64) -> (u64, Fe) {
        match (self.mains.first(), &self.stage0) {
            (Some(m), _) => m.item_weight(bucket),
            (None, Stage0::Moments(p)) => p.dense.item_weight(bucket),
            _ => (0, self.cfg.field.zero()),
        }
    }

    /// Adds one signed update to component `comp`.
    pub fn update(&mut self, comp: usize, item: u64, delta: i64) -> Result<(), Reject> {
        self.started()?;
        if comp >= self.cfg.components || item >= self.cfg.n {
            return Err(Reject::StreamModel("item or component out of range"));
        }
        self.mass += delta.unsigned_abs() as u128;
        if self.mass > self.cfg.mass as u128 {
            return Err(Reject::StreamModel("stream exceeds its declared mass"));
        }
        let f = self.cfg.field;
        let d = f.from_i64(delta);
        let a = f.from_u64(delta.unsigned_abs());
        let weight = if self.cfg.mode == PurityMode::Footprint { a } else { d };
        if let Some(h) = self.h {
            let b = h.eval(item);
            let (y, w) = self.main_weight(b);
            for m in &mut self.mains {
                m.add_weighted(comp, y, d, w);
            }
            match &mut self.stage0 {
                Stage0::Moments(p) => p.add_weighted(y, item, weight, w),
                Stage0::Ama(p) => p.add(b, item, d),
                Stage0::None => {}
            }
        }
        let footprint = self.cfg.mode == PurityMode::Footprint;
        let c = self.cfg.components;
        for (h, st) in self.stage_h.iter().zip(&mut self.stages) {
            let b = h.eval(item);
            let (y, w) = st.subf2.item_weight(b);
            match &mut st.purity {
                StagePurity::Moments(p) => p.add_weighted(y, item, weight, w),
                StagePurity::Ama(p) => p.add(b, item, d),
            }
            st.subf2.add_weighted(comp, y, d, w);
            if footprint {
                st.subf2.add_weighted(c, y, a, w);
            }
        }
        Ok(())
    }

    /// Processes the collision list and every proof. `visit` sees each
    /// claimed (item, frequencies) in item order.
    pub fn finish(
        mut self,
        r: &mut Reader<'_>,
        mut visit: impl FnMut(u64, &[i64]) -> Result<(), Reject>,
    ) -> Result<EngineOutcome, Reject> {
        self.started()?;
        let cfg = self.cfg.clone();
        let f = cfg.field;
        let len = r.u64()?;
        if len > cfg.list_limit as u64 {
            return Err(Reject::OversizeCollisionList { len: len.min(usize::MAX as u64) as usize, limit: cfg.list_limit });
        }
        let width = cfg.claim_width();
        let c = cfg.components;
        let omega = cfg.coins.map(|k| k.omega);
        let mut claims = vec![0i64; width];
        let mut claim_fe = vec![f.zero(); c];
        let mut c0 = vec![f.zero(); cfg.mains.len()];
        let mut claimed_mass: u128 = 0;
        let mut prev: Option<u64> = None;
        let mut used = 0usize;
        for _ in 0..len {
            let item = r.u64()?;
            if item >= cfg.n || prev.is_some_and(|p| p >= item) {
                return Err(Reject::Malformed("collision list must be sorted, distinct and inside the universe"));
            }
            prev = Some(item);
            let stage = r.u8()? as usize;
            if stage == 0 {
                return Err(Reject::Malformed("stage numbers start at 1"));
            }
            if stage > cfg.stages {
                return Err(Reject::StageBudgetExceeded);
            }
            used = used.max(stage);
            for x in claims.iter_mut() {
                *x = r.i64()?;
            }
            if cfg.mode == PurityMode::Footprint && claims[c] < 0 {
                return Err(Reject::Malformed("absolute mass must be nonnegative"));
            }
            claimed_mass += claims[..c].iter().map(|x| x.unsigned_abs() as u128).sum::<u128>();
            if claimed_mass > cfg.mass as u128 || claims[c..].iter().any(|&a| a as u128 > cfg.mass as u128) {
                return Err(Reject::Inconsistent("claimed frequencies exceed the stream mass"));
            }
            visit(item, &claims[..c])?;
            for (fe, &x) in claim_fe.iter_mut().zip(&claims) {
                *fe = f.from_i64(x);
            }
            for (acc, m) in c0.iter_mut().zip(&cfg.mains) {
                *acc = f.add(*acc, m.eval(&f, &claim_fe));
            }
            let total = claim_fe.iter().fold(f.zero(), |a, &x| f.add(a, x));
            let purity_claim = match cfg.mode {
                PurityMode::Footprint => f.from_i64(claims[c]),
                _ => total,
            };
            if let Some(h) = self.h {
                let b = h.eval(item);
                let (y, w) = self.main_weight(b);
                for m in &mut self.mains {
                    for (j, &x) in claim_fe.iter().enumerate() {
                        m.add_weighted(j, y, f.neg(x), w);
                    }
                }
                match &mut self.stage0 {
                    Stage0::Moments(p) => p.add_weighted(y, item, f.neg(purity_claim), w),
                    Stage0::Ama(p) => p.add(b, item, f.neg(total)),
                    Stage0::None => {}
                }
            }
            for (s, (h, st)) in self.stage_h.iter().zip(&mut self.stages).enumerate() {
                let b = h.eval(item);
                let (y, w) = st.subf2.item_weight(b);
                let marked = s + 1 == stage;
                match &mut st.purity {
                    StagePurity::Moments(p) => {
                        p.add_weighted(y, item, f.one(), w);
                        if marked {
                            p.dense.add_weighted(3, y, f.one(), w);
                        }
                    }
                    StagePurity::Ama(p) => {
                        p.add(b, item, omega.expect("coins present in public-coin mode"));
                        if marked {
                            p.mask(b, f.one());
                        }
                    }
                }
                for (j, &x) in claims.iter().enumerate() {
                    st.subf2.add_weighted(j, y, f.neg(f.from_i64(x)), w);
                }
                if marked {
                    st.subf2.add_weighted(width, y, f.one(), w);
                }
            }
        }
        let mut values = Vec::with_capacity(cfg.mains.len());
        for (p, m) in self.mains.iter().enumerate() {
            let proof = r.poly(&f, m.params().proof_degree_bound())?;
            let v = f.to_signed(f.add(c0[p], m.verify(&proof)?));
            if v.unsigned_abs() > cfg.main_bound(p) {
                return Err(Reject::OutOfRange);
            }
            values.push(v);
        }
        let pure = match &self.stage0 {
            Stage0::Moments(p) => p.verify(r)?,
            Stage0::Ama(p) => p.verify(r)?,
            Stage0::None => true,
        };
        if !pure {
            return Err(Reject::Impure);
        }
        let mut certified = true;
        for st in &self.stages[..used] {
            let pure = match &st.purity {
                StagePurity::Moments(p) => p.verify(r)?,
                StagePurity::Ama(p) => p.verify(r)?,
            };
            if !pure {
                return Err(Reject::Impure);
            }
            let proof = r.poly(&f, st.subf2.params().proof_degree_bound())?;
            certified &= st.subf2.verify(&proof)?.is_zero();
        }
        Ok(EngineOutcome { values, certified, list_len: len as usize, stages_used: used })
    }

    pub fn space(&self) -> Space {
        let bits = self.cfg.field.bits();
        let mains: Space = self.mains.iter().map(|m| m.space()).sum();
        let stage0 = match &self.stage0 {
            Stage0::Moments(p) => p.dense.space(),
            Stage0::Ama(p) => p.dense.space() + Space::field(2, bits),
            Stage0::None => Space::default(),
        };
        let stages: Space = self
            .stages
            .iter()
            .map(|st| {
                let purity = match &st.purity {
                    StagePurity::Moments(p) => p.dense.space(),
                    StagePurity::Ama(p) => p.dense.space(),
                };
                purity + st.subf2.space()
            })
            .sum();
        let hashes = Space::aux(4 * (self.cfg.stages as u64 + self.cfg.has_main() as u64));
        // the shared points are counted once per instance above; the mass
        // counter and list cursor are the only other state
        mains + stage0 + stages + hashes + Space::aux(2) + Space::field(0, bits)
    }
}

/// The prover's view of one item.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct ItemState {
    freq: Vec<i64>,
    abs: i64,
}

/// Online honest (or adversarial) prover for [`EngineVerifier`].
pub struct EngineProver<R> {
    cfg: EngineConfig,
    strategy: Strategy,
    rng: R,
    targets: Option<BTreeSet<u64>>,
    forced: Option<(Option<PairwiseHash>, Vec<PairwiseHash>)>,
    target: Option<i128>,
    lie: Option<(u64, i64)>,
    h: Option<PairwiseHash>,
    stage_h: Vec<PairwiseHash>,
    items: BTreeMap<u64, ItemState>,
}

impl<R: RngCore> EngineProver<R> {
    pub const STRATEGIES: [Strategy; 3] = [Strategy::TamperProof, Strategy::WrongAnswer, Strategy::FalseCollisionList];

    pub fn new(cfg: EngineConfig, strategy: Strategy, rng: R) -> Result<Self, Error> {
        if !(strategy.is_honest() || Self::STRATEGIES.contains(&strategy)) {
            return Err(Error::InvalidParams("strategy does not apply to this scheme"));
        }
        if strategy == Strategy::WrongAnswer && !cfg.has_main() {
            return Err(Error::InvalidParams("wrong-answer needs a main output"));
        }
        if cfg.mode == PurityMode::Ama && cfg.coins.is_none() {
            return Err(Error::InvalidParams("public coins must be drawn first"));
        }
        Ok(Self { cfg, strategy, rng, targets: None, forced: None, target: None, lie: None, h: None, stage_h: Vec::new(), items: BTreeMap::new() })
    }

    /// For a bare MultiIndex run: the items whose frequencies are claimed.
    pub fn with_targets(mut self, targets: impl IntoIterator<Item = u64>) -> Self {
        self.targets = Some(targets.into_iter().collect());
        self
    }

    pub fn set_targets(&mut self, targets: impl IntoIterator<Item = u64>) {
        self.targets = Some(targets.into_iter().collect());
    }

    /// Lists `item` with its first-component claim off by `shift`.
    pub fn set_lie(&mut self, item: u64, shift: i64) {
        self.lie = Some((item, shift));
    }

    pub fn set_target(&mut self, value: i128) {
        self.target = Some(value);
    }

    /// Under wrong-answer, claim `value` for the first main output instead
    /// of the true value plus one.
    pub fn with_target(mut self, value: i128) -> Self {
        self.target = Some(value);
        self
    }

    fn answer_shift(&self) -> Fe {
        let f = self.cfg.field;
        let Some(target) = self.target else { return f.one() };
        let mut x = vec![f.zero(); self.cfg.components];
        let truth = self.items.values().fold(f.zero(), |acc, s| {
            for (fe, &v) in x.iter_mut().zip(&s.freq) {
                *fe = f.from_i64(v);
            }
            f.add(acc, self.cfg.mains[0].eval(&f, &x))
        });
        let shift = f.sub(f.from_i128(target), truth);
        if shift.is_zero() {
            f.one()
        } else {
            shift
        }
    }

    /// Uses the given hashes instead of random ones.
    pub fn with_hashes(mut self, main: Option<PairwiseHash>, stages: Vec<PairwiseHash>) -> Self {
        self.forced = Some((main, stages));
        self
    }

    pub fn start(&mut self) -> Vec<u8> {
        let (r, t) = (self.cfg.r, self.cfg.stages);
        let (main, stages) = match self.forced.take() {
            Some((m, s)) => (m, s),
            None => {
                let m = self.cfg.has_main().then(|| PairwiseHash::random(r, &mut self.rng));
                (m, (0..t).map(|_| PairwiseHash::random(r, &mut self.rng)).collect())
            }
        };
        self.h = main;
        self.stage_h = stages;
        let mut w = Writer::new();
        if let Some(h) = &self.h {
            w.hash(h);
        }
        for h in &self.stage_h {
            w.hash(h);
        }
        w.into_bytes()
    }

    pub fn update(&mut self, comp: usize, item: u64, delta: i64) {
        let c = self.cfg.components;
        let s = self.items.entry(item).or_insert_with(|| ItemState { freq: vec![0; c], abs: 0 });
        s.freq[comp] += delta;
        s.abs += delta.abs();
    }

    /// Weight of an item in the purity streams, as an integer.
    fn weight(&self, s: &ItemState) -> i64 {
        match self.cfg.mode {
            PurityMode::Footprint => s.abs,
            _ => s.freq.iter().sum(),
        }
    }

    fn has_weight(&self, s: &ItemState) -> bool {
        match self.cfg.mode {
            PurityMode::Footprint => s.abs != 0,
            _ => s.freq.iter().any(|&x| x != 0),
        }
    }

    /// Items of nonzero weight in h-buckets holding two or more of them.
    fn collisions(&self, h: &PairwiseHash, support: &[u64]) -> BTreeSet<u64> {
        let mut load: BTreeMap<u64, u32> = BTreeMap::new();
        for &i in support {
            *load.entry(h.eval(i)).or_insert(0) += 1;
        }
        support.iter().copied().filter(|&i| load[&h.eval(i)] >= 2).collect()
    }

    /// Stage at which each listed item is isolated among `present`; t + 1 if never.
    fn resolve(&self, list: &BTreeSet<u64>, present: &BTreeSet<u64>) -> BTreeMap<u64, usize> {
        let mut stage_of = BTreeMap::new();
        let mut remaining: Vec<u64> = list.iter().copied().collect();
        for (s, h) in self.stage_h.iter().enumerate() {
            if remaining.is_empty() {
                break;
            }
            let mut load: BTreeMap<u64, u32> = BTreeMap::new();
            for &i in present {
                *load.entry(h.eval(i)).or_insert(0) += 1;
            }
            remaining.retain(|&i| {
                if load[&h.eval(i)] == 1 {
                    stage_of.insert(i, s + 1);
                    false
                } else {
                    true
                }
            });
        }
        for i in remaining {
            stage_of.insert(i, self.cfg.stages + 1);
        }
        stage_of
    }

    pub fn finish(&mut self) -> Vec<u8> {
        let cfg = self.cfg.clone();
        let f = cfg.field;
        let c = cfg.components;
        let support: Vec<u64> = self.items.iter().filter(|(_, s)| self.has_weight(s)).map(|(&i, _)| i).collect();
        let mut list = match (&self.h, &self.targets) {
            (Some(h), _) => self.collisions(h, &support),
            (None, Some(t)) => t.clone(),
            (None, None) => BTreeSet::new(),
        };
        let zero = ItemState { freq: vec![0; c], abs: 0 };
        let mut claims: BTreeMap<u64, ItemState> =
            list.iter().map(|i| (*i, self.items.get(i).cloned().unwrap_or_else(|| zero.clone()))).collect();
        if self.strategy == Strategy::FalseCollisionList {
            let victim = if !list.is_empty() {
                *list.iter().nth((self.rng.next_u64() % list.len() as u64) as usize).expect("nonempty")
            } else if !support.is_empty() {
                support[(self.rng.next_u64() % support.len() as u64) as usize]
            } else {
                0
            };
            list.insert(victim);
            let entry = claims.entry(victim).or_insert_with(|| self.items.get(&victim).cloned().unwrap_or_else(|| zero.clone()));
            entry.freq[0] += 1;
            entry.abs += 1;
        }
        if let Some((item, shift)) = self.lie {
            list.insert(item);
            let entry = claims.entry(item).or_insert_with(|| self.items.get(&item).cloned().unwrap_or_else(|| zero.clone()));
            entry.freq[0] += shift;
            entry.abs += shift.abs();
        }
        let mut present: BTreeSet<u64> = support.iter().copied().collect();
        present.extend(list.iter().copied());
        let stage_of = self.resolve(&list, &present);
        let used = stage_of.values().copied().max().unwrap_or(0).min(cfg.stages);

        let mut w = Writer::new();
        w.u64(list.len() as u64);
        for (&i, claim) in &claims {
            w.u64(i).u8(stage_of[&i].min(u8::MAX as usize) as u8);
            for &x in &claim.freq {
                w.i64(x);
            }
            if cfg.mode == PurityMode::Footprint {
                w.i64(claim.abs);
            }
        }
        let mut tampered = false;

        if let Some(h) = self.h {
            let mut vectors = FrequencyVectors::new(f, c);
            for (&i, s) in &self.items {
                for (j, &x) in s.freq.iter().enumerate() {
                    vectors.add_int(j, h.eval(i), x);
                }
            }
            for (&i, claim) in &claims {
                for (j, &x) in claim.freq.iter().enumerate() {
                    vectors.add_int(j, h.eval(i), -x);
                }
            }
            for (p, m) in cfg.mains.iter().enumerate() {
                let params = cfg.main_params(p);
                let mut b = prove(&params, m, vectors.vectors());
                if p == 0 {
                    match self.strategy {
                        Strategy::WrongAnswer => {
                            let shift = self.answer_shift();
                            b = shift_answer(&params, &b, shift, &mut self.rng)
                        }
                        Strategy::TamperProof => {
                            b = tamper_proof(&params, &b, &mut self.rng);
                            tampered = true;
                        }
                        _ => {}
                    }
                }
                w.poly(&f, &b);
            }
            let params = cfg.stage0_params();
            let b = match cfg.mode {
                PurityMode::Ama => {
                    let (coins, layout) = cfg.ama();
                    let mut v = AmaVectors::new(f, coins, layout, false);
                    for (&i, s) in &self.items {
                        v.add(h.eval(i), i, f.from_i64(s.freq[0]));
                    }
                    for (&i, claim) in &claims {
                        v.add(h.eval(i), i, f.from_i64(-claim.freq[0]));
                    }
                    prove(&params, &Product, v.vectors.vectors())
                }
                _ => {
                    let mut v = PurityVectors::new(f, false);
                    for (&i, s) in &self.items {
                        v.add(h.eval(i), i, f.from_i64(self.weight(s)));
                    }
                    for (&i, claim) in &claims {
                        v.add(h.eval(i), i, f.from_i64(-self.weight(claim)));
                    }
                    prove(&params, &PurityDefect, v.vectors.vectors())
                }
            };
            w.poly(&f, &b);
        }

        for (s, h) in self.stage_h.iter().enumerate().take(used) {
            let marked = |i: &u64| stage_of.get(i) == Some(&(s + 1));
            let params = cfg.stage_purity_params();
            let mut b = match cfg.mode {
                PurityMode::Ama => {
                    let (coins, layout) = cfg.ama();
                    let mut v = AmaVectors::new(f, coins, layout, true);
                    for (&i, st) in &self.items {
                        v.add(h.eval(i), i, f.from_i64(st.freq[0]));
                    }
                    for &i in &list {
                        v.add(h.eval(i), i, coins.omega);
                        if marked(&i) {
                            v.mask(h.eval(i), f.one());
                        }
                    }
                    prove(&params, &MaskedProduct, v.vectors.vectors())
                }
                _ => {
                    let mut v = PurityVectors::new(f, true);
                    for (&i, st) in &self.items {
                        v.add(h.eval(i), i, f.from_i64(self.weight(st)));
                    }
                    for &i in &list {
                        v.add(h.eval(i), i, f.one());
                        if marked(&i) {
                            v.mask(h.eval(i), f.one());
                        }
                    }
                    prove(&params, &MaskedPurityDefect, v.vectors.vectors())
                }
            };
            if self.strategy == Strategy::TamperProof && !tampered {
                b = tamper_proof(&params, &b, &mut self.rng);
                tampered = true;
            }
            w.poly(&f, &b);

            let width = cfg.claim_width();
            let mut v = FrequencyVectors::new(f, width + 1);
            let footprint = cfg.mode == PurityMode::Footprint;
            for (&i, st) in &self.items {
                for (j, &x) in st.freq.iter().enumerate() {
                    v.add_int(j, h.eval(i), x);
                }
                if footprint {
                    v.add_int(c, h.eval(i), st.abs);
                }
            }
            for (&i, claim) in &claims {
                for (j, &x) in claim.freq.iter().enumerate() {
                    v.add_int(j, h.eval(i), -x);
                }
                if footprint {
                    v.add_int(c, h.eval(i), -claim.abs);
                }
                if marked(&i) {
                    v.add_int(width, h.eval(i), 1);
                }
            }
            w.poly(&f, &prove(&cfg.subf2_params(), &MaskedSquares(width), v.vectors()));
        }
        w.into_bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Strategy;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn sizing_helpers() {
        assert_eq!(reduced_range(100, 4), 200);
        assert_eq!(reduced_range(100, 16), 400);
        // ⌈100·√2⌉ = 142
        assert_eq!(reduced_range(100, 2), 142);
        assert_eq!(reduced_range(0, 16), 1);
        assert_eq!(list_limit(100, 400), 250);
        assert_eq!(stage_budget(100, 16), 5);
        assert_eq!(stage_budget(1, 16), 3);
        assert_eq!(stage_budget(0, 16), 3);
        assert_eq!(stage_budget(4096, 64), 5);
    }

    #[test]
    fn c_v_of_one_forbidden() {
        assert!(EngineConfig::online(16, 1, vec![Main::moment(1, 0, 2)], PurityMode::Strict, 4, 1, 10, None).is_err());
    }

    struct Run {
        outcome: Result<EngineOutcome, Reject>,
        hcost_bytes: usize,
    }

    fn run(cfg: &EngineConfig, stream: &[(usize, u64, i64)], strategy: Strategy, seed: u64) -> Run {
        let mut v = EngineVerifier::new(cfg.clone(), &mut rng(seed)).unwrap();
        let mut p = EngineProver::new(cfg.clone(), strategy, rng(seed ^ 0x5151)).unwrap();
        let start = p.start();
        let mut hcost = start.len();
        let outcome = (|| {
            v.start(&mut Reader::new(&start))?;
            for &(c, i, d) in stream {
                p.update(c, i, d);
                v.update(c, i, d)?;
            }
            let end = p.finish();
            hcost += end.len();
            let mut r = Reader::new(&end);
            let out = v.finish(&mut r, |_, _| Ok(()))?;
            r.finish()?;
            Ok(out)
        })();
        Run { outcome, hcost_bytes: hcost }
    }

    fn fk_config(n: u64, k: u32, m: u64, c_v: u64, mass: u64) -> EngineConfig {
        EngineConfig::online(n, 1, vec![Main::moment(1, 0, k)], PurityMode::Strict, m, c_v, mass, None).unwrap()
    }

    fn fk_oracle(stream: &[(usize, u64, i64)], k: u32) -> i128 {
        let mut f: BTreeMap<u64, i128> = BTreeMap::new();
        for &(_, i, d) in stream {
            *f.entry(i).or_insert(0) += d as i128;
        }
        f.values().map(|v| v.pow(k)).sum()
    }

    fn random_strict(r: &mut ChaCha8Rng, n: u64, m: usize) -> Vec<(usize, u64, i64)> {
        let mut s = Vec::new();
        let items: Vec<u64> = (0..m).map(|_| r.next_u64() % n).collect();
        for &i in &items {
            s.push((0, i, 1 + (r.next_u64() % 4) as i64));
        }
        // delete some of what was inserted
        for &i in items.iter().step_by(3) {
            s.push((0, i, -1));
        }
        s
    }

    fn mass(s: &[(usize, u64, i64)]) -> u64 {
        s.iter().map(|x| x.2.unsigned_abs()).sum()
    }

    #[test]
    fn empty_stream_gives_zero() {
        let cfg = fk_config(1 << 10, 2, 1, 4, 1);
        let out = run(&cfg, &[], Strategy::Honest, 1).outcome.unwrap();
        assert_eq!(out.values, vec![0]);
        assert!(out.certified);
        assert_eq!(out.list_len, 0);
    }

    #[test]
    fn forced_collision_is_listed_and_certified() {
        // identity-like hash with range 4 puts 1 and 5 together
        let cfg = fk_config(8, 2, 3, 4, 20);
        let h = PairwiseHash::new(1, 0, 11, cfg.r).unwrap();
        let stages: Vec<_> = (0..cfg.stages).map(|s| PairwiseHash::new(1 + s as u64, 3, 11, cfg.r).unwrap()).collect();
        assert_eq!(h.eval(1) == h.eval(1 + cfg.r), true);
        let stream = [(0, 1, 3), (0, 1 + cfg.r, 2), (0, 2, 1)];
        let mut v = EngineVerifier::new(cfg.clone(), &mut rng(3)).unwrap();
        let mut p = EngineProver::new(cfg.clone(), Strategy::Honest, rng(4)).unwrap().with_hashes(Some(h), stages);
        let start = p.start();
        v.start(&mut Reader::new(&start)).unwrap();
        for &(c, i, d) in &stream {
            p.update(c, i, d);
            v.update(c, i, d).unwrap();
        }
        let end = p.finish();
        let mut seen = Vec::new();
        let out = v.finish(&mut Reader::new(&end), |i, f| {
            seen.push((i, f[0]));
            Ok(())
        });
        let out = out.unwrap();
        assert_eq!(seen, vec![(1, 3), (1 + cfg.r, 2)]);
        assert_eq!(out.values, vec![9 + 4 + 1]);
        assert!(out.certified);
    }

    #[test]
    fn honest_runs_match_oracle() {
        let mut r = rng(10);
        let mut accepted = 0;
        for t in 0..40 {
            let k = 2 + (t % 2) as u32;
            let c_v = [4, 16, 64][t % 3];
            let len = 20 + (r.next_u64() % 200) as usize;
            let s = random_strict(&mut r, 1 << 20, len);
            let m = s.iter().map(|x| x.1).collect::<BTreeSet<_>>().len() as u64;
            let cfg = fk_config(1 << 20, k, m, c_v, mass(&s));
            match run(&cfg, &s, Strategy::Honest, t as u64).outcome {
                Ok(out) => {
                    accepted += 1;
                    assert!(out.certified);
                    assert_eq!(out.values[0], fk_oracle(&s, k));
                }
                Err(e) => assert!(matches!(e, Reject::OversizeCollisionList { .. } | Reject::StageBudgetExceeded), "{e:?}"),
            }
        }
        assert!(accepted >= 30, "{accepted}");
    }

    #[test]
    fn adversaries_never_pass() {
        let mut r = rng(11);
        for t in 0..30u64 {
            let s = random_strict(&mut r, 1 << 12, 40);
            let m = s.iter().map(|x| x.1).collect::<BTreeSet<_>>().len() as u64;
            let cfg = fk_config(1 << 12, 2, m, 4, mass(&s));
            for strategy in EngineProver::<ChaCha8Rng>::STRATEGIES {
                match run(&cfg, &s, strategy, t).outcome {
                    Ok(out) => assert!(!out.certified, "{strategy:?} accepted"),
                    Err(_) => {}
                }
            }
        }
    }

    #[test]
    fn false_claim_reaches_the_staged_check() {
        // with consistent proofs, only the SubF₂ stage can catch a wrong f*
        let mut r = rng(12);
        let s = random_strict(&mut r, 1 << 12, 60);
        let m = s.iter().map(|x| x.1).collect::<BTreeSet<_>>().len() as u64;
        let cfg = fk_config(1 << 12, 2, m, 4, mass(&s) + 8);
        let mut uncertified = 0;
        for t in 0..20 {
            if let Ok(out) = run(&cfg, &s, Strategy::FalseCollisionList, t).outcome {
                assert!(!out.certified);
                uncertified += 1;
            }
        }
        assert!(uncertified > 0);
    }

    #[test]
    fn multiindex_certifies_target_claims() {
        let mut r = rng(13);
        let s = random_strict(&mut r, 1 << 16, 400);
        let support: Vec<u64> = {
            let mut f: BTreeMap<u64, i64> = BTreeMap::new();
            for x in &s {
                *f.entry(x.1).or_insert(0) += x.2;
            }
            f.into_iter().filter(|x| x.1 != 0).map(|x| x.0).collect()
        };
        let targets: Vec<u64> = support.iter().copied().step_by(2).take(100).collect();
        let cfg = EngineConfig::multiindex(1 << 16, support.len() as u64, 100, 16, mass(&s), PurityMode::Strict, None).unwrap();
        assert_eq!(cfg.stages, 5);
        let mut within = 0;
        for seed in 0..30 {
            let mut v = EngineVerifier::new(cfg.clone(), &mut rng(seed)).unwrap();
            let mut p = EngineProver::new(cfg.clone(), Strategy::Honest, rng(seed + 99)).unwrap().with_targets(targets.clone());
            let start = p.start();
            v.start(&mut Reader::new(&start)).unwrap();
            for &(c, i, d) in &s {
                p.update(c, i, d);
                v.update(c, i, d).unwrap();
            }
            let end = p.finish();
            if let Ok(out) = v.finish(&mut Reader::new(&end), |_, _| Ok(())) {
                assert!(out.certified);
                assert_eq!(out.list_len, 100);
                within += 1;
            }
        }
        assert!(within >= 20, "{within}");
    }

    #[test]
    fn hcost_grows_with_m() {
        let mut r = rng(14);
        let mut costs = Vec::new();
        for m in [64usize, 256, 1024] {
            let s: Vec<_> = (0..m).map(|_| (0usize, r.next_u64() % (1 << 20), 1i64)).collect();
            let cfg = fk_config(1 << 20, 2, m as u64, 16, m as u64);
            let run = run(&cfg, &s, Strategy::Honest, 7);
            assert!(run.outcome.is_ok());
            costs.push(run.hcost_bytes);
        }
        assert!(costs[0] < costs[1] && costs[1] < costs[2], "{costs:?}");
    }
}
