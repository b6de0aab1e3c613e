//! Stream files, the protocol harness and the command line around
//! `streamcert-core`.
//!
//! [`run_scheme`] binds a [`RunConfig`] to a parsed stream, builds the
//! verifier and the (honest or adversarial) prover, runs them over one pass
//! and reports the outcome with its annotation and space costs.

pub mod config;
pub mod generate;
pub mod input;
pub mod report;
pub mod run;

use std::path::PathBuf;

pub use config::{DenseFunction, DisjMode, FkMode, HeavyBackend, RunConfig, SchemeParams};
pub use input::{BucketedStream, EdgeStream, InputKind, PlainStream, StreamInput, TaggedStream};
pub use run::{cost_sweep, oracle, run_scheme, soundness_trials, CostReport, RunResult, SchemeOutcome, SweepRow, TrialSummary, Value};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Config(#[from] streamcert_core::Error),
    #[error("{0}")]
    Usage(String),
}
