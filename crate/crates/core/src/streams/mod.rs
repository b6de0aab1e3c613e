//! Stream data model and the small randomized tools built on it: update
//! models, fingerprints, pairwise hashing and dyadic decomposition.

mod dyadic;
mod fingerprint;
mod hash;
mod model;

pub use dyadic::Dyadic;
pub use fingerprint::{fingerprints_equal, Fingerprint};
pub use hash::{find_perfect_hash, PairwiseHash, DEFAULT_HASH_PRIME};
pub use model::{
    validate_keyed, BucketedUpdate, EdgeUpdate, ModelKind, StreamMeta, StreamUpdate, Tag, TaggedUpdate, UpdateModel,
};
