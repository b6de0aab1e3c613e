//! Frequency moments, set disjointness, subset and their relatives.

pub mod engine;
pub mod multiindex;
pub mod online;
pub mod prescient;
pub mod subset;

pub use engine::{EngineConfig, EngineOutcome, EngineProver, EngineVerifier, Main, PurityMode};
pub use online::{Disjointness, Fk, Hamming, InnerProduct, OnlineProver, OnlineVerifier, Reduction};
pub use prescient::{DisjPrescientProver, DisjPrescientVerifier, FkPrescientProver, FkPrescientVerifier, PrescientConfig};
pub use subset::{SubsetConfig, SubsetProver, SubsetVerifier};
pub use multiindex::{heavy_config, HeavyHittersMultiIndexProver, HeavyHittersMultiIndexVerifier, MultiIndexOutcome, MultiIndexProver, MultiIndexVerifier};
