//! Seeded random instances for sweeps, trials and tests.

use std::collections::BTreeSet;

use rand_core::RngCore;
use streamcert_core::streams::{BucketedUpdate, EdgeUpdate, StreamUpdate, Tag, TaggedUpdate, UpdateModel};

use crate::input::{BucketedStream, EdgeStream, PlainStream, TaggedStream};

/// Uniform in [0, n); the modulo bias is below 2^-40 for the sizes used here.
pub fn below<R: RngCore + ?Sized>(rng: &mut R, n: u64) -> u64 {
    rng.next_u64() % n.max(1)
}

/// Uniform in [0, 1).
pub fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub fn distinct<R: RngCore + ?Sized>(rng: &mut R, n: u64, count: u64) -> BTreeSet<u64> {
    assert!(count <= n, "cannot draw {count} distinct items from [{n}]");
    let mut s = BTreeSet::new();
    while (s.len() as u64) < count {
        s.insert(below(rng, n));
    }
    s
}

/// Sparsity exactly `m`, counts in 1..=5 split over up to two insertions,
/// plus a few items inserted and later deleted outright.
pub fn strict_stream<R: RngCore + ?Sized>(rng: &mut R, n: u64, m: u64) -> PlainStream {
    let churn = (m / 8).min(n - m);
    let mut live: Vec<u64> = distinct(rng, n, m + churn).into_iter().collect();
    let dead: Vec<u64> = (0..churn).map(|_| live.swap_remove(below(rng, live.len() as u64) as usize)).collect();
    let mut updates = Vec::new();
    for &i in &dead {
        updates.push(StreamUpdate::new(i, 1 + below(rng, 3) as i64));
    }
    for &i in &live {
        let c = 1 + below(rng, 5) as i64;
        if c > 1 && rng.next_u64() % 2 == 0 {
            updates.push(StreamUpdate::new(i, 1));
            updates.push(StreamUpdate::new(i, c - 1));
        } else {
            updates.push(StreamUpdate::new(i, c));
        }
    }
    for k in 0..dead.len() {
        let d = updates[k].delta;
        updates.push(StreamUpdate::new(dead[k], -d));
    }
    PlainStream::new(n, UpdateModel::STRICT, updates).expect("generated stream is strict")
}

/// Signed frequencies in [-4, 4] \ {0} on `m` items, some reached through
/// sign changes.
pub fn nonstrict_stream<R: RngCore + ?Sized>(rng: &mut R, n: u64, m: u64) -> PlainStream {
    let mut updates = Vec::new();
    for i in distinct(rng, n, m) {
        let mut f = 1 + below(rng, 4) as i64;
        if rng.next_u64() % 2 == 0 {
            f = -f;
        }
        if rng.next_u64() % 3 == 0 {
            updates.push(StreamUpdate::new(i, -2 * f));
            updates.push(StreamUpdate::new(i, 3 * f));
        } else {
            updates.push(StreamUpdate::new(i, f));
        }
    }
    PlainStream::new(n, UpdateModel::NON_STRICT, updates).expect("generated stream fits its universe")
}

/// Sets S and T of the given sizes; `common` items lie in both.
pub fn set_pair<R: RngCore + ?Sized>(rng: &mut R, n: u64, s: u64, t: u64, common: u64) -> TaggedStream {
    let common = common.min(s).min(t);
    let all: Vec<u64> = distinct(rng, n, s + t - common).into_iter().collect();
    let mut updates = Vec::new();
    // interleave so neither set is a prefix
    for (k, &i) in all.iter().enumerate() {
        let k = k as u64;
        if k < s {
            updates.push(TaggedUpdate::new(Tag::S, i, 1));
        }
        if k < common || k >= s {
            updates.push(TaggedUpdate::new(Tag::T, i, 1));
        }
    }
    TaggedStream::new(n, UpdateModel::STRICT, updates).expect("generated sets fit their universe")
}

/// G(n, p) with every edge inserted once.
pub fn random_graph<R: RngCore + ?Sized>(rng: &mut R, vertices: u32, p: f64) -> EdgeStream {
    let mut updates = Vec::new();
    for u in 0..vertices {
        for v in u + 1..vertices {
            if unit(rng) < p {
                updates.push(EdgeUpdate::new(u, v, 1).expect("u < v"));
            }
        }
    }
    EdgeStream::new(vertices, UpdateModel::STRICT, updates).expect("generated graph fits its vertex set")
}

pub fn edges_of(vertices: u32, edges: &[(u32, u32)]) -> EdgeStream {
    let updates = edges.iter().map(|&(a, b)| EdgeUpdate::new(a, b, 1).expect("no self loops")).collect();
    EdgeStream::new(vertices, UpdateModel::STRICT, updates).expect("edges fit the vertex set")
}

/// `len` insertions of random (item, bucket) pairs with counts in 1..=3.
pub fn bucketed_stream<R: RngCore + ?Sized>(rng: &mut R, n: u64, buckets: u64, len: usize) -> BucketedStream {
    let updates = (0..len)
        .map(|_| BucketedUpdate::new(below(rng, n), below(rng, buckets), 1 + below(rng, 3) as i64))
        .collect();
    BucketedStream::new(n, buckets, UpdateModel::STRICT, updates).expect("generated stream is strict")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    #[test]
    fn shapes_are_as_requested() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for m in [1, 10, 333] {
            let s = strict_stream(&mut r, 1 << 20, m);
            assert_eq!(s.meta.sparsity, m);
            assert_eq!(s.meta.footprint, m + m / 8);
            let ns = nonstrict_stream(&mut r, 1 << 20, m);
            assert_eq!(ns.meta.sparsity, m);
        }
        let t = set_pair(&mut r, 1000, 30, 40, 5);
        let count = |tag| t.updates.iter().filter(|u| u.tag == tag).count();
        assert_eq!((count(Tag::S), count(Tag::T)), (30, 40));
        assert_eq!(t.meta.sparsity, 65);
        let g = random_graph(&mut r, 10, 1.0);
        assert_eq!(g.updates.len(), 45);
    }
}
