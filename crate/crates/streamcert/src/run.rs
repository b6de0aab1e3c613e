//! Binding a configuration, a stream and a prover into one verified run.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::Serialize;

use streamcert_core::graphs::{
    bfs_tree, count_triangles, find_odd_cycle, find_perfect_matching, GraphConfig, GraphProver, GraphVerifier, Triangles,
    Witness, WitnessKind,
};
use streamcert_core::moments::prescient::product_value;
use streamcert_core::moments::{
    heavy_config, DisjPrescientProver, DisjPrescientVerifier, Disjointness, Fk, FkPrescientProver, FkPrescientVerifier,
    Hamming, HeavyHittersMultiIndexProver, HeavyHittersMultiIndexVerifier, InnerProduct, OnlineProver, OnlineVerifier,
    PrescientConfig, PurityMode, Reduction, SubsetConfig, SubsetProver, SubsetVerifier,
};
use streamcert_core::pointqueries::{
    derived_sparsity, fingerprint_field, is_heavy, select_rank, HeavyHittersProver, HeavyHittersVerifier, PQParams,
    PointQueryProver, PointQueryVerifier, SelectionProver, SelectionVerifier, DEFAULT_OVERFLOW,
};
use streamcert_core::protocol::{execute, Cost, StreamProver, StreamVerifier, Strategy};
use streamcert_core::purity::{
    ama_requirement, AmaCoins, AmaInjectionVerifier, InjectionVerifier, Masked, PurityKind, PurityParams, PurityProver,
    SubInjectionVerifier, Unmasked,
};
use streamcert_core::streams::{BucketedUpdate, Dyadic, StreamMeta, Tag};
use streamcert_core::sumcheck::{
    ceil_sqrt, Composition, DenseLayout, DenseParams, DenseStreamProver, DenseStreamVerifier, DenseVerifier, Power, ProofTamper,
    Product, VectorUpdate,
};
use streamcert_core::Reject;

use crate::config::{DenseFunction, DisjMode, FkMode, HeavyBackend, RunConfig, SchemeParams};
use crate::generate;
use crate::input::{BucketedStream, EdgeStream, PlainStream, StreamInput, TaggedStream};
use crate::HarnessError;

const PROVER_SALT: u64 = 0x005e_ed0f_9e0e_55e5;
const COIN_SALT: u64 = 0xc01d_c015_0000_0001;

/// Search budget of the honest matching prover.
const MATCHING_STEPS: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i128),
    Bool(bool),
    Items(Vec<u64>),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{}", *b as u8),
            Value::Items(v) => {
                let s: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{}", s.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchemeOutcome {
    Accepted(Value),
    Rejected(Reject),
}

impl SchemeOutcome {
    pub fn value(&self) -> Option<&Value> {
        match self {
            SchemeOutcome::Accepted(v) => Some(v),
            SchemeOutcome::Rejected(_) => None,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, SchemeOutcome::Accepted(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub hcost_bits: u64,
    pub vcost_words: u64,
    pub vcost_bits: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub outcome: SchemeOutcome,
    pub cost: CostReport,
}

fn drive<V, P>(v: V, p: P, stream: &[V::Update], coins: (u64, u64), out: impl FnOnce(V::Output) -> Value) -> RunResult
where
    V: StreamVerifier,
    P: StreamProver<Update = V::Update>,
    V::Update: Clone,
{
    let t = Instant::now();
    let ex = execute(v, p, stream);
    let mut cost: Cost = ex.cost;
    cost.charge_public_coins(coins.0, coins.1);
    let outcome = match ex.outcome {
        Ok(o) => SchemeOutcome::Accepted(out(o)),
        Err(r) => SchemeOutcome::Rejected(r),
    };
    RunResult {
        outcome,
        cost: CostReport {
            hcost_bits: cost.hcost_bits,
            vcost_words: cost.vcost_words,
            vcost_bits: cost.vcost_bits,
            wall_time: t.elapsed(),
        },
    }
}

fn usage(cfg: &RunConfig, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Usage(format!("{}: {msg}", cfg.scheme.name()))
}

fn tamper_of(cfg: &RunConfig) -> Result<ProofTamper, HarnessError> {
    match cfg.prover {
        Strategy::Honest => Ok(ProofTamper::None),
        Strategy::TamperProof => Ok(ProofTamper::Perturb),
        Strategy::WrongAnswer => Ok(ProofTamper::OffByOne),
        s => Err(usage(cfg, format!("strategy {s} does not apply"))),
    }
}

struct Rngs {
    verifier: ChaCha8Rng,
    prover: ChaCha8Rng,
    coins: ChaCha8Rng,
}

impl Rngs {
    fn of(cfg: &RunConfig) -> Self {
        Self {
            verifier: ChaCha8Rng::seed_from_u64(cfg.seed),
            prover: ChaCha8Rng::seed_from_u64(cfg.seed ^ PROVER_SALT),
            coins: ChaCha8Rng::seed_from_u64(cfg.coins_seed.unwrap_or(cfg.seed ^ COIN_SALT)),
        }
    }
}

/// One verified pass over `input`. Configuration problems surface as
/// errors before any update is read; a rejecting verifier is an outcome.
pub fn run_scheme(cfg: &RunConfig, input: &StreamInput) -> Result<RunResult, HarnessError> {
    cfg.validate()?;
    if input.kind() != cfg.scheme.input_kind() {
        return Err(usage(cfg, format!("expects a {}", cfg.scheme.input_kind().describe())));
    }
    if cfg.scheme.needs_strict() && !input.model().is_strict() {
        return Err(usage(cfg, "needs a strict turnstile stream"));
    }
    let mut rng = Rngs::of(cfg);
    match (&cfg.scheme, input) {
        (SchemeParams::Dense { g }, StreamInput::Plain(s)) => {
            let k = if *g == DenseFunction::F3 { 3 } else { 2 };
            let updates: Vec<VectorUpdate> = s.updates.iter().map(|u| VectorUpdate { vector: 0, item: u.item, delta: u.delta }).collect();
            dense(cfg, Power(k), &s.meta, &updates, rng)
        }
        (SchemeParams::Dense { .. }, StreamInput::Tagged(s)) => {
            let updates: Vec<VectorUpdate> =
                s.updates.iter().map(|u| VectorUpdate { vector: u.tag.index(), item: u.item, delta: u.delta }).collect();
            dense(cfg, Product, &s.meta, &updates, rng)
        }
        (SchemeParams::PointQuery { query }, StreamInput::Plain(s)) => {
            let params = pq_params(cfg, s.meta.sparsity, s.meta.n)?;
            let v = PointQueryVerifier::new(params, s.meta.n, *query, &mut rng.verifier)?;
            let p = PointQueryProver::new(params, *query, cfg.prover, rng.prover)?;
            Ok(drive(v, p, &s.updates, (0, 0), |f| Value::Int(f as i128)))
        }
        (SchemeParams::Selection { rank }, StreamInput::Plain(s)) => {
            let n = s.meta.n;
            let params = pq_params(cfg, derived_sparsity(n, s.meta.sparsity.max(1)), Dyadic::new(n).id_count())?;
            let v = SelectionVerifier::new(params, n, *rank, &mut rng.verifier)?;
            let p = SelectionProver::new(params, n, *rank, cfg.prover, rng.prover)?;
            Ok(drive(v, p, &s.updates, (0, 0), |j| Value::Int(j as i128)))
        }
        (SchemeParams::HeavyHitters { phi, backend }, StreamInput::Plain(s)) => {
            let n = s.meta.n;
            match backend {
                HeavyBackend::Buckets => {
                    let params = pq_params(cfg, derived_sparsity(n, s.meta.sparsity.max(1)), Dyadic::new(n).id_count())?;
                    let v = HeavyHittersVerifier::new(params, n, *phi, &mut rng.verifier)?;
                    let p = HeavyHittersProver::new(params, n, *phi, cfg.prover, rng.prover)?;
                    Ok(drive(v, p, &s.updates, (0, 0), Value::Items))
                }
                HeavyBackend::Multiindex => {
                    let ec = heavy_config(n, s.meta.sparsity, s.meta.mass, *phi, cfg.engine_cv(), PurityMode::Strict, cfg.field)?;
                    let v = HeavyHittersMultiIndexVerifier::new(ec.clone(), n, *phi, &mut rng.verifier)?;
                    let p = HeavyHittersMultiIndexProver::new(ec, n, *phi, cfg.prover, rng.prover)?;
                    Ok(drive(v, p, &s.updates, (0, 0), Value::Items))
                }
            }
        }
        (SchemeParams::Injection, StreamInput::Bucketed(s)) => {
            let params = purity_params(cfg, s)?;
            let v = InjectionVerifier::new(params, &mut rng.verifier)?;
            let p = Unmasked(PurityProver::new(params, PurityKind::Injection, tamper_of(cfg)?, rng.prover));
            Ok(drive(v, p, &s.updates, (0, 0), Value::Bool))
        }
        (SchemeParams::SubInjection { z }, StreamInput::Bucketed(s)) => {
            if z.len() as u64 != s.buckets {
                return Err(usage(cfg, format!("mask has {} entries for {} buckets", z.len(), s.buckets)));
            }
            let params = purity_params(cfg, s)?;
            let v = SubInjectionVerifier::new(params, &mut rng.verifier)?;
            let p = PurityProver::new(params, PurityKind::SubInjection, tamper_of(cfg)?, rng.prover);
            let mut masked: Vec<Masked<BucketedUpdate>> = s.updates.iter().map(|&u| Masked::Update(u)).collect();
            masked.extend(z.iter().enumerate().filter(|(_, &c)| c > 0).map(|(b, &c)| Masked::Mask { index: b as u64, count: c }));
            Ok(drive(v, p, &masked, (0, 0), Value::Bool))
        }
        (SchemeParams::AmaInjection, StreamInput::Bucketed(s)) => {
            let c_v = cfg.c_v.unwrap_or_else(|| ceil_sqrt(s.buckets).max(2));
            let field = match cfg.field {
                Some(f) => f,
                None => ama_requirement(s.meta.n, s.buckets, c_v).select()?,
            };
            let params = PurityParams { field, n: s.meta.n, r: s.buckets, c_v };
            let coins = AmaCoins::draw(&field, &mut rng.coins);
            let v = AmaInjectionVerifier::new(params, coins, &mut rng.verifier)?;
            let p = Unmasked(PurityProver::new(params, PurityKind::Ama(coins), tamper_of(cfg)?, rng.prover));
            Ok(drive(v, p, &s.updates, (AmaCoins::WORDS, AmaCoins::bits(&field)), Value::Bool))
        }
        (SchemeParams::Fk { k, mode }, StreamInput::Plain(s)) => fk(cfg, *k, *mode, s, rng),
        (SchemeParams::Disj { mode }, StreamInput::Tagged(s)) => disj(cfg, *mode, s, rng),
        (SchemeParams::Subset, StreamInput::Tagged(s)) => {
            let sc = SubsetConfig::new(&s.meta, cfg.engine_cv(), cfg.field)?;
            let v = SubsetVerifier::new(sc.clone(), &mut rng.verifier)?;
            let p = SubsetProver::new(sc, cfg.prover, rng.prover)?;
            Ok(drive(v, p, &s.updates, (0, 0), Value::Bool))
        }
        (SchemeParams::InnerProduct, StreamInput::Tagged(s)) => pairwise(cfg, InnerProduct, s, rng),
        (SchemeParams::Hamming, StreamInput::Tagged(s)) => pairwise(cfg, Hamming::default(), s, rng),
        (SchemeParams::Triangles, StreamInput::Edges(s)) => {
            let red = Triangles { vertices: s.vertices };
            let ec = red.config(&s.meta, cfg.engine_cv(), cfg.field)?;
            online(cfg, ec, red, &s.updates, rng, Value::Int)
        }
        (SchemeParams::Relaxed { kind, witness }, StreamInput::Edges(s)) => {
            let gc = GraphConfig::new(s.vertices, *kind, &s.meta, cfg.engine_cv(), cfg.field)?;
            let witness = match witness {
                Some(w) if w.kind() == *kind => w.clone(),
                Some(_) => return Err(usage(cfg, "witness is of another kind")),
                None => find_witness(*kind, s).unwrap_or_else(|| placeholder(*kind)),
            };
            let v = GraphVerifier::new(gc.clone(), &mut rng.verifier)?;
            let p = GraphProver::new(gc, witness, cfg.prover, rng.prover)?;
            Ok(drive(v, p, &s.updates, (0, 0), |_| Value::Bool(true)))
        }
        _ => unreachable!("input kind checked above"),
    }
}

fn dense<G: Composition + Copy>(
    cfg: &RunConfig,
    g: G,
    meta: &StreamMeta,
    updates: &[VectorUpdate],
    mut rng: Rngs,
) -> Result<RunResult, HarnessError> {
    let n = meta.n;
    let layout = match (cfg.c_a, cfg.c_v) {
        (Some(a), Some(v)) => DenseLayout::new(n, a, v)?,
        (None, Some(v)) => DenseLayout::with_columns(n, v),
        (Some(a), None) => DenseLayout::new(n, a, n.div_ceil(a).max(1))?,
        (None, None) => DenseLayout::square(n),
    };
    let bound = g.magnitude_bound(&vec![meta.mass as u128; g.arity()]);
    let field = match cfg.field {
        Some(f) => f,
        None => DenseParams::field_bound(layout, g.degree(), bound).select()?,
    };
    let params = DenseParams::new(field, layout, &g, bound)?;
    let v = DenseStreamVerifier(DenseVerifier::init(params, g, &mut rng.verifier));
    let p = DenseStreamProver::new(params, g, tamper_of(cfg)?, rng.prover);
    Ok(drive(v, p, updates, (0, 0), Value::Int))
}

/// c_a·c_v ≥ m; a missing side is derived from the other, both missing gives √m each.
fn pq_params(cfg: &RunConfig, m: u64, universe: u64) -> Result<PQParams, HarnessError> {
    let m = m.max(1);
    let field = match cfg.field {
        Some(f) => f,
        None => fingerprint_field(universe)?,
    };
    Ok(match (cfg.c_a, cfg.c_v) {
        (Some(a), Some(v)) => PQParams::new(m, a, v, DEFAULT_OVERFLOW, field)?,
        (None, Some(v)) => PQParams::new(m, m.div_ceil(v).max(1), v, DEFAULT_OVERFLOW, field)?,
        (Some(a), None) => PQParams::new(m, a, m.div_ceil(a).max(1), DEFAULT_OVERFLOW, field)?,
        (None, None) => PQParams::square(m, field),
    })
}

fn purity_params(cfg: &RunConfig, s: &BucketedStream) -> Result<PurityParams, HarnessError> {
    let c_v = cfg.c_v.unwrap_or_else(|| ceil_sqrt(s.buckets).max(1));
    Ok(PurityParams::new(&s.meta, s.buckets, c_v, cfg.field)?)
}

fn online<T: Reduction + Clone>(
    cfg: &RunConfig,
    ec: streamcert_core::moments::EngineConfig,
    red: T,
    updates: &[T::Update],
    mut rng: Rngs,
    out: impl FnOnce(T::Output) -> Value,
) -> Result<RunResult, HarnessError>
where
    T::Update: Clone,
{
    let ec = ec.with_coins(&mut rng.coins);
    let coins = ec.coin_cost();
    let v = OnlineVerifier::new(ec.clone(), red.clone(), &mut rng.verifier)?;
    let p = OnlineProver::new(ec, red, cfg.prover, rng.prover)?;
    Ok(drive(v, p, updates, coins, out))
}

fn fk(cfg: &RunConfig, k: u32, mode: FkMode, s: &PlainStream, mut rng: Rngs) -> Result<RunResult, HarnessError> {
    let c_v = cfg.engine_cv();
    let engine_mode = match mode {
        FkMode::Prescient => {
            let pc = PrescientConfig::fk(&s.meta, k, c_v, cfg.field)?;
            let v = FkPrescientVerifier::new(pc, &mut rng.verifier);
            let p = FkPrescientProver::new(pc, &s.updates, cfg.prover, rng.prover)?;
            return Ok(drive(v, p, &s.updates, (0, 0), Value::Int));
        }
        FkMode::Online => PurityMode::Strict,
        FkMode::Footprint => PurityMode::Footprint,
        FkMode::Ama => PurityMode::Ama,
    };
    let ec = Fk::config(&s.meta, k, c_v, engine_mode, cfg.field)?;
    online(cfg, ec, Fk { k }, &s.updates, rng, Value::Int)
}

fn disj(cfg: &RunConfig, mode: DisjMode, s: &TaggedStream, mut rng: Rngs) -> Result<RunResult, HarnessError> {
    let c_v = cfg.engine_cv();
    match mode {
        DisjMode::Prescient => {
            let pc = PrescientConfig::disj(&s.meta, c_v, cfg.field)?;
            let v = DisjPrescientVerifier::new(pc, &mut rng.verifier);
            let p = DisjPrescientProver::new(pc, &s.updates, cfg.prover, rng.prover)?;
            Ok(drive(v, p, &s.updates, (0, 0), Value::Bool))
        }
        DisjMode::Online => {
            let ec = Disjointness::config(&s.meta, c_v, PurityMode::Strict, cfg.field)?;
            let v = OnlineVerifier::new(ec.clone(), Disjointness, &mut rng.verifier)?;
            let mut p = OnlineProver::new(ec, Disjointness, cfg.prover, rng.prover)?;
            if cfg.prover == Strategy::WrongAnswer && product_value(&s.updates) != 0 {
                // the damaging lie: claim the sets are disjoint
                p.engine_mut().set_target(0);
            }
            Ok(drive(v, p, &s.updates, (0, 0), Value::Bool))
        }
    }
}

fn pairwise<T: Reduction<Update = streamcert_core::streams::TaggedUpdate, Output = i128> + Clone>(
    cfg: &RunConfig,
    red: T,
    s: &TaggedStream,
    rng: Rngs,
) -> Result<RunResult, HarnessError> {
    let mode = if s.model.is_strict() { PurityMode::Strict } else { PurityMode::Footprint };
    let ec = InnerProduct::config(&s.meta, cfg.engine_cv(), mode, cfg.field)?;
    online(cfg, ec, red, &s.updates, rng, Value::Int)
}

fn find_witness(kind: WitnessKind, s: &EdgeStream) -> Option<Witness> {
    let edges = s.final_edges();
    match kind {
        WitnessKind::Matching => find_perfect_matching(s.vertices, &edges, MATCHING_STEPS),
        WitnessKind::Connectivity => bfs_tree(s.vertices, &edges),
        WitnessKind::OddCycle => find_odd_cycle(s.vertices, &edges),
    }
}

/// What an honest prover without a witness sends; the verifier rejects it.
fn placeholder(kind: WitnessKind) -> Witness {
    match kind {
        WitnessKind::Matching => Witness::Matching(Vec::new()),
        WitnessKind::Connectivity => Witness::SpanningTree { root: 0, edges: Vec::new() },
        WitnessKind::OddCycle => Witness::OddCycle(Vec::new()),
    }
}

fn freq<K: Ord + Copy>(updates: impl IntoIterator<Item = (K, i64)>) -> BTreeMap<K, i64> {
    let mut f = BTreeMap::new();
    for (k, d) in updates {
        *f.entry(k).or_insert(0) += d;
    }
    f.retain(|_, v| *v != 0);
    f
}

fn tagged_freq(s: &TaggedStream) -> [BTreeMap<u64, i64>; 2] {
    let side = |t: Tag| freq(s.updates.iter().filter(|u| u.tag == t).map(|u| (u.item, u.delta)));
    [side(Tag::S), side(Tag::T)]
}

/// Buckets holding more than one item with a nonzero count.
fn impure_buckets(s: &BucketedStream) -> BTreeSet<u64> {
    let f = freq(s.updates.iter().map(|u| ((u.bucket, u.item), u.delta)));
    let mut per: BTreeMap<u64, usize> = BTreeMap::new();
    for &(b, _) in f.keys() {
        *per.entry(b).or_insert(0) += 1;
    }
    per.into_iter().filter(|&(_, c)| c > 1).map(|(b, _)| b).collect()
}

/// The answer by direct computation, when the scheme has a definite one.
/// Relaxed schemes answer `true` only when a witness is found.
pub fn oracle(cfg: &RunConfig, input: &StreamInput) -> Option<Value> {
    let int = |v: i128| Some(Value::Int(v));
    match (&cfg.scheme, input) {
        (SchemeParams::Dense { g }, StreamInput::Plain(s)) => {
            let k = if *g == DenseFunction::F3 { 3 } else { 2 };
            int(freq(s.updates.iter().map(|u| (u.item, u.delta))).values().map(|&f| (f as i128).pow(k)).sum())
        }
        (SchemeParams::Dense { .. }, StreamInput::Tagged(s)) => {
            let [a, b] = tagged_freq(s);
            int(a.iter().map(|(i, &x)| x as i128 * b.get(i).copied().unwrap_or(0) as i128).sum())
        }
        (SchemeParams::PointQuery { query }, StreamInput::Plain(s)) => {
            int(s.updates.iter().filter(|u| u.item == *query).map(|u| u.delta as i128).sum())
        }
        (SchemeParams::Selection { rank }, StreamInput::Plain(s)) => {
            select_rank(&freq(s.updates.iter().map(|u| (u.item, u.delta))), *rank).map(|j| Value::Int(j as i128))
        }
        (SchemeParams::HeavyHitters { phi, .. }, StreamInput::Plain(s)) => {
            let f = freq(s.updates.iter().map(|u| (u.item, u.delta)));
            let total: i64 = f.values().sum();
            Some(Value::Items(f.iter().filter(|(_, &c)| is_heavy(c, total, *phi)).map(|(&i, _)| i).collect()))
        }
        (SchemeParams::Injection | SchemeParams::AmaInjection, StreamInput::Bucketed(s)) => {
            Some(Value::Bool(impure_buckets(s).is_empty()))
        }
        (SchemeParams::SubInjection { z }, StreamInput::Bucketed(s)) => {
            Some(Value::Bool(impure_buckets(s).iter().all(|&b| z.get(b as usize).copied().unwrap_or(0) == 0)))
        }
        (SchemeParams::Fk { k, .. }, StreamInput::Plain(s)) => {
            int(freq(s.updates.iter().map(|u| (u.item, u.delta))).values().map(|&f| (f as i128).pow(*k)).sum())
        }
        (SchemeParams::Disj { .. }, StreamInput::Tagged(s)) => {
            let [a, b] = tagged_freq(s);
            Some(Value::Bool(a.keys().all(|i| !b.contains_key(i))))
        }
        (SchemeParams::Subset, StreamInput::Tagged(s)) => {
            let [x, y] = tagged_freq(s);
            Some(Value::Bool(x.iter().all(|(i, &c)| c <= 0 || y.get(i).is_some_and(|&d| d > 0))))
        }
        (SchemeParams::InnerProduct | SchemeParams::Hamming, StreamInput::Tagged(s)) => {
            let [a, b] = tagged_freq(s);
            let ip: i128 = a.iter().map(|(i, &x)| x as i128 * b.get(i).copied().unwrap_or(0) as i128).sum();
            if cfg.scheme == SchemeParams::InnerProduct {
                int(ip)
            } else {
                let f1 = |m: &BTreeMap<u64, i64>| m.values().map(|&v| v as i128).sum::<i128>();
                int(f1(&a) + f1(&b) - 2 * ip)
            }
        }
        (SchemeParams::Triangles, StreamInput::Edges(s)) => int(count_triangles(s.vertices, &s.final_edges()) as i128),
        (SchemeParams::Relaxed { kind, .. }, StreamInput::Edges(s)) => find_witness(*kind, s).map(|_| Value::Bool(true)),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TrialSummary {
    pub trials: u64,
    /// Runs the verifier accepted.
    pub accepted: u64,
    /// Accepted runs whose value differs from the oracle, or that accepted
    /// with no oracle answer to match.
    pub wrong: u64,
}

/// Repeats the run with seeds `seed, seed + 1, …`, fresh verifier randomness each time.
pub fn soundness_trials(cfg: &RunConfig, input: &StreamInput, trials: u64) -> Result<TrialSummary, HarnessError> {
    let truth = oracle(cfg, input);
    let mut sum = TrialSummary { trials, ..Default::default() };
    for t in 0..trials {
        let run = run_scheme(&RunConfig { seed: cfg.seed.wrapping_add(t), ..cfg.clone() }, input)?;
        if let SchemeOutcome::Accepted(v) = &run.outcome {
            sum.accepted += 1;
            if truth.as_ref() != Some(v) {
                sum.wrong += 1;
            }
        }
    }
    Ok(sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub m: u64,
    pub c_v: u64,
    pub accepted: bool,
    pub hcost_bits: u64,
    pub vcost_words: u64,
    pub vcost_bits: u64,
}

/// Honest runs on random strict streams over [n], one per (m, c_v) cell.
/// The scheme must read a plain stream.
pub fn cost_sweep(template: &RunConfig, n: u64, grid: &[(u64, u64)]) -> Result<Vec<SweepRow>, HarnessError> {
    if template.scheme.input_kind() != crate::input::InputKind::Plain {
        return Err(usage(template, "sweeps need a scheme over plain streams"));
    }
    for &(m, c_v) in grid {
        template.clone().with_cv(c_v).validate()?;
        if m > n {
            return Err(usage(template, format!("sparsity {m} exceeds the universe {n}")));
        }
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &(m, c_v) in grid {
        let mut r = ChaCha8Rng::seed_from_u64(template.seed ^ m.rotate_left(17));
        let stream = StreamInput::Plain(generate::strict_stream(&mut r, n, m));
        let cfg = RunConfig { prover: Strategy::Honest, ..template.clone().with_cv(c_v) };
        let run = run_scheme(&cfg, &stream)?;
        rows.push(SweepRow {
            m,
            c_v,
            accepted: run.outcome.is_accepted(),
            hcost_bits: run.cost.hcost_bits,
            vcost_words: run.cost.vcost_words,
            vcost_bits: run.cost.vcost_bits,
        });
    }
    Ok(rows)
}
