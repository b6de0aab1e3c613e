use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use streamcert_core::graphs::{count_triangles, final_edges, Triangles};
use streamcert_core::moments::{Fk, OnlineProver, OnlineVerifier, PurityMode};
use streamcert_core::pointqueries::{fingerprint_field, PQParams, PointQueryProver, PointQueryVerifier};
use streamcert_core::protocol::{execute, replay, Strategy};
use streamcert_core::streams::{EdgeUpdate, StreamMeta, StreamUpdate};
use streamcert_core::PrimeField;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_stream(r: &mut ChaCha8Rng, n: u64, m: usize) -> Vec<StreamUpdate> {
    let mut items = BTreeSet::new();
    while items.len() < m {
        items.insert(r.next_u64() % n);
    }
    items.into_iter().map(|i| StreamUpdate::new(i, 1 + (r.next_u64() % 4) as i64)).collect()
}

#[test]
fn point_query_transcript_replays_to_the_same_answer() {
    let n = 1 << 16;
    let s = random_stream(&mut rng(1), n, 200);
    let query = s[17].item;
    let params = PQParams::square(200, fingerprint_field(n).unwrap());
    let v = PointQueryVerifier::new(params, n, query, &mut rng(7)).unwrap();
    let p = PointQueryProver::new(params, query, Strategy::Honest, rng(8)).unwrap();
    let ex = execute(v, p, &s);
    assert_eq!(ex.outcome, Ok(s[17].delta));
    let fresh = PointQueryVerifier::new(params, n, query, &mut rng(7)).unwrap();
    assert_eq!(replay(fresh, &ex.transcript), ex.outcome);
}

#[test]
fn online_f2_agrees_with_direct_sum() {
    let n = 1 << 20;
    for seed in 0..5 {
        let s = random_stream(&mut rng(seed), n, 300);
        let truth: i128 = s.iter().map(|u| (u.delta as i128).pow(2)).sum();
        let red = Fk { k: 2 };
        let cfg = Fk::config(&StreamMeta::of_updates(n, &s), 2, 16, PurityMode::Strict, None).unwrap();
        let v = OnlineVerifier::new(cfg.clone(), red, &mut rng(seed + 100)).unwrap();
        let p = OnlineProver::new(cfg, red, Strategy::Honest, rng(seed + 200)).unwrap();
        match execute(v, p, &s).outcome {
            Ok(x) => assert_eq!(x, truth),
            Err(e) => panic!("honest run rejected: {e:?}"),
        }
    }
}

#[test]
fn k4_has_four_triangles() {
    let mut s = Vec::new();
    for a in 0..4 {
        for b in a + 1..4 {
            s.push(EdgeUpdate::new(a, b, 1).unwrap());
        }
    }
    assert_eq!(count_triangles(4, &final_edges(&s)), 4);
    let red = Triangles { vertices: 4 };
    let meta = StreamMeta::of_keyed(16, s.iter().map(|e| (e.id(4), e.delta)));
    let cfg = red.config(&meta, 16, None).unwrap();
    let v = OnlineVerifier::new(cfg.clone(), red, &mut rng(3)).unwrap();
    let p = OnlineProver::new(cfg, red, Strategy::Honest, rng(4)).unwrap();
    assert_eq!(execute(v, p, &s).outcome, Ok(4));
}

proptest! {
    #[test]
    fn m61_arithmetic_matches_u128(a in 0u64..(1 << 61) - 1, b in 0u64..(1 << 61) - 1) {
        let f = PrimeField::mersenne61();
        let q = (1u128 << 61) - 1;
        let (x, y) = (f.from_u64(a), f.from_u64(b));
        prop_assert_eq!(f.mul(x, y).value(), a as u128 * b as u128 % q);
        prop_assert_eq!(f.add(x, y).value(), (a as u128 + b as u128) % q);
        prop_assert_eq!(f.sub(x, y).value(), (a as u128 + q - b as u128) % q);
        if a != 0 {
            prop_assert_eq!(f.mul(x, f.inv(x).unwrap()), f.one());
        }
    }

    #[test]
    fn honest_point_queries_never_lie(seed in 0u64..1000, m in 1usize..60) {
        let n = 1 << 12;
        let mut r = rng(seed);
        let s = random_stream(&mut r, n, m);
        let freq: BTreeMap<u64, i64> = s.iter().map(|u| (u.item, u.delta)).collect();
        let query = if seed % 3 == 0 { r.next_u64() % n } else { s[seed as usize % m].item };
        let params = PQParams::square(m as u64, fingerprint_field(n).unwrap());
        let v = PointQueryVerifier::new(params, n, query, &mut rng(seed + 1)).unwrap();
        let p = PointQueryProver::new(params, query, Strategy::Honest, rng(seed + 2)).unwrap();
        if let Ok(x) = execute(v, p, &s).outcome {
            prop_assert_eq!(x, freq.get(&query).copied().unwrap_or(0));
        }
    }
}
