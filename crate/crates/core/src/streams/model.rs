use alloc::collections::BTreeMap;

use crate::error::Error;

/// One turnstile token (i, δ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamUpdate {
    pub item: u64,
    pub delta: i64,
}

impl StreamUpdate {
    pub const fn new(item: u64, delta: i64) -> Self {
        Self { item, delta }
    }
}

/// A token of a bucketed stream: δ copies of `item` placed in `bucket`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BucketedUpdate {
    pub item: u64,
    pub bucket: u64,
    pub delta: i64,
}

impl BucketedUpdate {
    pub const fn new(item: u64, bucket: u64, delta: i64) -> Self {
        Self { item, bucket, delta }
    }
}

/// Which of two interleaved inputs an update belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    S,
    T,
}

impl Tag {
    pub fn index(self) -> usize {
        match self {
            Tag::S => 0,
            Tag::T => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TaggedUpdate {
    pub tag: Tag,
    pub item: u64,
    pub delta: i64,
}

impl TaggedUpdate {
    pub const fn new(tag: Tag, item: u64, delta: i64) -> Self {
        Self { tag, item, delta }
    }
}

/// Edge {u, v} with u < v.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgeUpdate {
    pub u: u32,
    pub v: u32,
    pub delta: i64,
}

impl EdgeUpdate {
    /// Normalizes endpoint order; `None` for a self loop.
    pub fn new(a: u32, b: u32, delta: i64) -> Option<Self> {
        match a.cmp(&b) {
            core::cmp::Ordering::Less => Some(Self { u: a, v: b, delta }),
            core::cmp::Ordering::Greater => Some(Self { u: b, v: a, delta }),
            core::cmp::Ordering::Equal => None,
        }
    }

    /// Position of the edge in [n²].
    pub fn id(&self, vertices: u32) -> u64 {
        self.u as u64 * vertices as u64 + self.v as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    InsertOnly,
    Strict,
    NonStrict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UpdateModel {
    pub kind: ModelKind,
    pub unit: bool,
}

impl UpdateModel {
    pub const INSERT_ONLY: Self = Self { kind: ModelKind::InsertOnly, unit: false };
    pub const STRICT: Self = Self { kind: ModelKind::Strict, unit: false };
    pub const NON_STRICT: Self = Self { kind: ModelKind::NonStrict, unit: false };

    /// Frequencies stay nonnegative on every prefix.
    pub fn is_strict(&self) -> bool {
        self.kind != ModelKind::NonStrict
    }
}

/// Size parameters of a stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StreamMeta {
    /// Universe size.
    pub n: u64,
    /// Number of updates.
    pub len: u64,
    /// Items with nonzero final frequency.
    pub sparsity: u64,
    /// Distinct items ever touched.
    pub footprint: u64,
    /// Σ |δ|, a bound on every |f_i| and on Σ |f_i|.
    pub mass: u64,
}

impl StreamMeta {
    pub fn of_updates<'a>(n: u64, updates: impl IntoIterator<Item = &'a StreamUpdate>) -> Self {
        Self::of_keyed(n, updates.into_iter().map(|u| (u.item, u.delta)))
    }

    pub fn of_keyed<K: Ord>(n: u64, updates: impl IntoIterator<Item = (K, i64)>) -> Self {
        let mut freq: BTreeMap<K, i64> = BTreeMap::new();
        let mut meta = StreamMeta { n, ..Default::default() };
        for (k, d) in updates {
            meta.len += 1;
            meta.mass += d.unsigned_abs();
            *freq.entry(k).or_insert(0) += d;
        }
        meta.footprint = freq.len() as u64;
        meta.sparsity = freq.values().filter(|&&f| f != 0).count() as u64;
        meta
    }
}

/// Checks a keyed stream against `model`, returning its metadata.
///
/// `index_of` maps a key to the integer that must lie below `n`.
pub fn validate_keyed<K: Ord + Copy>(
    model: UpdateModel,
    n: u64,
    updates: impl IntoIterator<Item = (K, i64)>,
    index_of: impl Fn(K) -> u64,
) -> Result<StreamMeta, Error> {
    let mut freq: BTreeMap<K, i64> = BTreeMap::new();
    let mut meta = StreamMeta { n, ..Default::default() };
    for (position, (k, d)) in updates.into_iter().enumerate() {
        let item = index_of(k);
        if item >= n {
            return Err(Error::ItemOutOfRange { item, universe: n });
        }
        if d == 0 {
            return Err(Error::ModelViolation { position, reason: "zero delta" });
        }
        if model.unit && d.abs() != 1 {
            return Err(Error::ModelViolation { position, reason: "non-unit delta" });
        }
        if model.kind == ModelKind::InsertOnly && d < 0 {
            return Err(Error::ModelViolation { position, reason: "deletion in insert-only stream" });
        }
        let f = freq.entry(k).or_insert(0);
        *f = f.checked_add(d).ok_or(Error::ModelViolation { position, reason: "frequency overflow" })?;
        if model.kind == ModelKind::Strict && *f < 0 {
            return Err(Error::ModelViolation { position, reason: "negative frequency in strict stream" });
        }
        meta.len += 1;
        meta.mass += d.unsigned_abs();
    }
    meta.footprint = freq.len() as u64;
    meta.sparsity = freq.values().filter(|&&f| f != 0).count() as u64;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn keyed(u: &[StreamUpdate]) -> impl Iterator<Item = (u64, i64)> + '_ {
        u.iter().map(|u| (u.item, u.delta))
    }

    #[test]
    fn meta_counts() {
        let s = [StreamUpdate::new(1, 3), StreamUpdate::new(2, 1), StreamUpdate::new(1, -3), StreamUpdate::new(4, 2)];
        let m = validate_keyed(UpdateModel::STRICT, 8, keyed(&s), |k| k).unwrap();
        assert_eq!((m.len, m.sparsity, m.footprint, m.mass), (4, 2, 3, 9));
        assert_eq!(m, StreamMeta::of_updates(8, &s));
    }

    #[test]
    fn model_violations() {
        let neg = [StreamUpdate::new(1, 1), StreamUpdate::new(1, -2)];
        assert!(validate_keyed(UpdateModel::STRICT, 4, keyed(&neg), |k| k).is_err());
        assert!(validate_keyed(UpdateModel::NON_STRICT, 4, keyed(&neg), |k| k).is_ok());
        assert!(validate_keyed(UpdateModel::INSERT_ONLY, 4, keyed(&neg), |k| k).is_err());
        let unit = UpdateModel { kind: ModelKind::NonStrict, unit: true };
        assert!(validate_keyed(unit, 4, keyed(&neg), |k| k).is_err());
        let out = [StreamUpdate::new(9, 1)];
        assert_eq!(
            validate_keyed(UpdateModel::STRICT, 4, keyed(&out), |k| k),
            Err(Error::ItemOutOfRange { item: 9, universe: 4 })
        );
    }

    #[test]
    fn edge_normalization() {
        let e = EdgeUpdate::new(5, 2, 1).unwrap();
        assert_eq!((e.u, e.v), (2, 5));
        assert!(EdgeUpdate::new(3, 3, 1).is_none());
        assert_eq!(e.id(10), 25);
    }

    proptest! {
        #[test]
        fn meta_matches_naive_counter(raw in prop::collection::vec((0u64..16, -3i64..4), 0..60)) {
            let s: Vec<StreamUpdate> = raw.iter().filter(|(_, d)| *d != 0).map(|&(i, d)| StreamUpdate::new(i, d)).collect();
            let meta = StreamMeta::of_updates(16, &s);
            let mut f = [0i64; 16];
            let mut touched = [false; 16];
            for u in &s {
                f[u.item as usize] += u.delta;
                touched[u.item as usize] = true;
            }
            prop_assert_eq!(meta.len, s.len() as u64);
            prop_assert_eq!(meta.sparsity, f.iter().filter(|&&x| x != 0).count() as u64);
            prop_assert_eq!(meta.footprint, touched.iter().filter(|&&t| t).count() as u64);
            prop_assert!(meta.sparsity <= meta.footprint && meta.footprint <= meta.len);
        }

        #[test]
        fn strict_validator_keeps_prefixes_nonnegative(raw in prop::collection::vec((0u64..6, -2i64..3), 0..40)) {
            let s: Vec<StreamUpdate> = raw.iter().filter(|(_, d)| *d != 0).map(|&(i, d)| StreamUpdate::new(i, d)).collect();
            let accepted = validate_keyed(UpdateModel::STRICT, 6, keyed(&s), |k| k).is_ok();
            let mut f = [0i64; 6];
            let mut ok = true;
            for u in &s {
                f[u.item as usize] += u.delta;
                ok &= f[u.item as usize] >= 0;
            }
            prop_assert_eq!(accepted, ok);
        }
    }
}
