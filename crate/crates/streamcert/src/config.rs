use std::fmt;

use streamcert_core::graphs::{Witness, WitnessKind};
use streamcert_core::protocol::Strategy;
use streamcert_core::PrimeField;

use crate::input::InputKind;
use crate::HarnessError;

/// Names a field for `--field` and the environment default.
pub const FIELD_ENV: &str = "STREAMCERT_FIELD";

/// c_v when none is given, for the schemes built on universe reduction.
pub const DEFAULT_CV: u64 = 16;

/// `m61`, `m127`, or a prime in decimal.
pub fn parse_field(s: &str) -> Result<PrimeField, HarnessError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "m61" | "mersenne61" | "2^61-1" => Ok(PrimeField::mersenne61()),
        "m127" | "mersenne127" | "2^127-1" => Ok(PrimeField::mersenne127()),
        other => {
            let q: u128 = other.parse().map_err(|_| HarnessError::Usage(format!("unknown field `{s}`")))?;
            Ok(PrimeField::new(q)?)
        }
    }
}

/// The field named by the environment, if any.
pub fn field_from_env() -> Result<Option<PrimeField>, HarnessError> {
    match std::env::var(FIELD_ENV) {
        Ok(s) if !s.trim().is_empty() => parse_field(&s).map(Some),
        _ => Ok(None),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FkMode {
    Prescient,
    Online,
    Footprint,
    Ama,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum DisjMode {
    Prescient,
    Online,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum HeavyBackend {
    /// Bucket openings over the dyadic derived stream.
    Buckets,
    /// Frequencies of the examined dyadic nodes certified by MultiIndex.
    Multiindex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum DenseFunction {
    /// Σ f_i².
    F2,
    /// Σ f_i³.
    F3,
    /// Σ f_i g_i over a tagged stream.
    Product,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SchemeParams {
    Dense { g: DenseFunction },
    PointQuery { query: u64 },
    Selection { rank: u64 },
    HeavyHitters { phi: f64, backend: HeavyBackend },
    Injection,
    /// One weight per bucket.
    SubInjection { z: Vec<u64> },
    AmaInjection,
    Fk { k: u32, mode: FkMode },
    Disj { mode: DisjMode },
    Subset,
    InnerProduct,
    Hamming,
    Triangles,
    /// Without a witness the honest prover searches for one.
    Relaxed { kind: WitnessKind, witness: Option<Witness> },
}

impl SchemeParams {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeParams::Dense { .. } => "dense",
            SchemeParams::PointQuery { .. } => "pointquery",
            SchemeParams::Selection { .. } => "selection",
            SchemeParams::HeavyHitters { .. } => "heavyhitters",
            SchemeParams::Injection => "injection",
            SchemeParams::SubInjection { .. } => "subinjection",
            SchemeParams::AmaInjection => "ama-injection",
            SchemeParams::Fk { .. } => "fk",
            SchemeParams::Disj { .. } => "disj",
            SchemeParams::Subset => "subset",
            SchemeParams::InnerProduct => "innerproduct",
            SchemeParams::Hamming => "hamming",
            SchemeParams::Triangles => "triangles",
            SchemeParams::Relaxed { kind: WitnessKind::Matching, .. } => "matching",
            SchemeParams::Relaxed { kind: WitnessKind::Connectivity, .. } => "connectivity",
            SchemeParams::Relaxed { kind: WitnessKind::OddCycle, .. } => "oddcycle",
        }
    }

    pub fn input_kind(&self) -> InputKind {
        match self {
            SchemeParams::Dense { g: DenseFunction::Product } => InputKind::Tagged,
            SchemeParams::Dense { .. }
            | SchemeParams::PointQuery { .. }
            | SchemeParams::Selection { .. }
            | SchemeParams::HeavyHitters { .. }
            | SchemeParams::Fk { .. } => InputKind::Plain,
            SchemeParams::Injection | SchemeParams::SubInjection { .. } | SchemeParams::AmaInjection => InputKind::Bucketed,
            SchemeParams::Disj { .. } | SchemeParams::Subset | SchemeParams::InnerProduct | SchemeParams::Hamming => {
                InputKind::Tagged
            }
            SchemeParams::Triangles | SchemeParams::Relaxed { .. } => InputKind::Edges,
        }
    }

    /// Schemes whose soundness assumes nonnegative frequencies.
    pub fn needs_strict(&self) -> bool {
        match self {
            SchemeParams::Dense { .. } | SchemeParams::PointQuery { .. } | SchemeParams::AmaInjection => false,
            SchemeParams::InnerProduct | SchemeParams::Hamming => false,
            SchemeParams::Fk { mode, .. } => matches!(mode, FkMode::Prescient | FkMode::Online),
            _ => true,
        }
    }

    /// Runs on the universe-reduction engine, which needs c_v ≥ 2.
    pub fn uses_engine(&self) -> bool {
        match self {
            SchemeParams::Fk { mode, .. } => *mode != FkMode::Prescient,
            SchemeParams::Disj { mode } => *mode == DisjMode::Online,
            SchemeParams::HeavyHitters { backend, .. } => *backend == HeavyBackend::Multiindex,
            SchemeParams::Subset | SchemeParams::InnerProduct | SchemeParams::Hamming => true,
            SchemeParams::Triangles | SchemeParams::Relaxed { .. } => true,
            _ => false,
        }
    }

    pub fn prescient(&self) -> bool {
        matches!(self, SchemeParams::Fk { mode: FkMode::Prescient, .. } | SchemeParams::Disj { mode: DisjMode::Prescient })
    }
}

impl fmt::Display for SchemeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scheme: SchemeParams,
    pub c_a: Option<u64>,
    pub c_v: Option<u64>,
    /// Forces the field; otherwise each scheme picks the smallest that fits.
    pub field: Option<PrimeField>,
    pub seed: u64,
    pub prover: Strategy,
    /// Seed of the public coins in AMA runs; defaults to one derived from `seed`.
    pub coins_seed: Option<u64>,
}

impl RunConfig {
    pub fn new(scheme: SchemeParams) -> Self {
        Self { scheme, c_a: None, c_v: None, field: None, seed: 0, prover: Strategy::Honest, coins_seed: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_prover(mut self, prover: Strategy) -> Self {
        self.prover = prover;
        self
    }

    pub fn with_cv(mut self, c_v: u64) -> Self {
        self.c_v = Some(c_v);
        self
    }

    pub fn with_ca(mut self, c_a: u64) -> Self {
        self.c_a = Some(c_a);
        self
    }

    pub fn with_field(mut self, field: Option<PrimeField>) -> Self {
        self.field = field;
        self
    }

    pub fn engine_cv(&self) -> u64 {
        self.c_v.unwrap_or(DEFAULT_CV)
    }

    /// Checks that do not depend on the stream.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Usage(format!("{}: {m}", self.scheme.name())));
        if self.c_a == Some(0) || self.c_v == Some(0) {
            return bad("c_a and c_v must be positive");
        }
        if self.scheme.uses_engine() && self.engine_cv() < 2 {
            return bad("c_v must exceed 1");
        }
        match &self.scheme {
            SchemeParams::Fk { k: 0, .. } => bad("k must be at least 1"),
            SchemeParams::Selection { rank: 0 } => bad("rank must be at least 1"),
            SchemeParams::HeavyHitters { phi, .. } if !(*phi > 0.0 && *phi <= 1.0) => bad("phi must lie in (0, 1]"),
            _ => Ok(()),
        }
    }
}
