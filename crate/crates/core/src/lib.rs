//! Annotated data stream schemes over prime fields.
//!
//! A scheme pairs an untrusted prover, which annotates a stream, with a
//! small-space verifier that reads stream and annotation in one pass and
//! either outputs an answer or rejects.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod field;
pub mod graphs;
pub mod moments;
pub mod pointqueries;
pub mod poly;
pub mod protocol;
pub mod purity;
pub mod streams;
pub mod sumcheck;
pub mod wire;

pub use error::{Error, Reject};
pub use field::{make_field, FieldElement, PrimeField};
pub use poly::DensePolynomial;
