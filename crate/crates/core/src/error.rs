use core::fmt;

/// Configuration and usage errors, reported before any stream is consumed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    NotPrime(u128),
    ModulusTooLarge,
    DomainTooLarge { domain: u64, modulus: u128 },
    IndexOutOfDomain { index: u64, domain: u64 },
    DuplicatePoint,
    /// No supported field satisfies the magnitude bound.
    FieldTooSmall { required: u128 },
    InvalidParams(&'static str),
    PerfectHashNotFound { trials: u32 },
    ItemOutOfRange { item: u64, universe: u64 },
    /// The stream breaks its declared update model at the given position.
    ModelViolation { position: usize, reason: &'static str },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotPrime(q) => write!(f, "{q} is not prime"),
            Error::ModulusTooLarge => write!(f, "modulus must be below 2^127"),
            Error::DomainTooLarge { domain, modulus } => {
                write!(f, "domain of size {domain} does not embed in F_{modulus}")
            }
            Error::IndexOutOfDomain { index, domain } => write!(f, "index {index} outside domain of size {domain}"),
            Error::DuplicatePoint => write!(f, "interpolation points are not distinct"),
            Error::FieldTooSmall { required } => write!(f, "no supported field has q >= {required}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::PerfectHashNotFound { trials } => write!(f, "no injective hash found in {trials} trials"),
            Error::ItemOutOfRange { item, universe } => write!(f, "item {item} outside universe [{universe}]"),
            Error::ModelViolation { position, reason } => write!(f, "update {position}: {reason}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

/// Why a verifier output ⊥.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reject {
    /// Annotation bytes do not parse.
    Malformed(&'static str),
    DegreeTooHigh { degree: usize, bound: usize },
    /// b(r) differs from the verifier's column sum.
    SumCheck,
    /// The decoded integer exceeds the a priori bound.
    OutOfRange,
    FingerprintMismatch,
    OversizeOpening { len: usize, limit: usize },
    WrongBucket,
    /// A claimed answer fails the verifier's own consistency test.
    Inconsistent(&'static str),
    /// A purity check certified a collision the prover claimed absent.
    Impure,
    OversizeCollisionList { len: usize, limit: usize },
    StageBudgetExceeded,
    /// The stream breaks the update model the verifier was configured for.
    StreamModel(&'static str),
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reject::Malformed(what) => write!(f, "malformed annotation: {what}"),
            Reject::DegreeTooHigh { degree, bound } => write!(f, "proof degree {degree} exceeds {bound}"),
            Reject::SumCheck => write!(f, "sum-check spot test failed"),
            Reject::OutOfRange => write!(f, "result exceeds the magnitude bound"),
            Reject::FingerprintMismatch => write!(f, "fingerprint mismatch"),
            Reject::OversizeOpening { len, limit } => write!(f, "opening of {len} entries exceeds {limit}"),
            Reject::WrongBucket => write!(f, "opened item lies in another bucket"),
            Reject::Inconsistent(what) => write!(f, "inconsistent claim: {what}"),
            Reject::Impure => write!(f, "hash is not injective where claimed"),
            Reject::OversizeCollisionList { len, limit } => {
                write!(f, "collision list of {len} entries exceeds {limit}")
            }
            Reject::StageBudgetExceeded => write!(f, "items left unresolved after the last stage"),
            Reject::StreamModel(what) => write!(f, "stream violates the update model: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Reject {}
