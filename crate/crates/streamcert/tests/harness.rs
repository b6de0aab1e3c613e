use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use streamcert::generate;
use streamcert::input::{parse_stream, InputKind};
use streamcert::{
    cost_sweep, oracle, run_scheme, soundness_trials, DisjMode, FkMode, RunConfig, SchemeOutcome, SchemeParams, StreamInput, Value,
};
use streamcert_core::protocol::Strategy;

fn plain(text: &str) -> StreamInput {
    parse_stream(InputKind::Plain, text).unwrap()
}

#[test]
fn point_query_on_a_tiny_file() {
    let s = plain("# n=16\n5 3\n2 1\n5 4\n");
    let r = run_scheme(&RunConfig::new(SchemeParams::PointQuery { query: 5 }).with_seed(4), &s).unwrap();
    assert_eq!(r.outcome, SchemeOutcome::Accepted(Value::Int(7)));
    assert!(r.cost.hcost_bits > 0 && r.cost.vcost_words > 0);
}

#[test]
fn empty_stream_has_zero_moment() {
    let s = plain("# n=1024\n");
    let cfg = RunConfig::new(SchemeParams::Fk { k: 2, mode: FkMode::Online });
    assert_eq!(run_scheme(&cfg, &s).unwrap().outcome, SchemeOutcome::Accepted(Value::Int(0)));
}

#[test]
fn wrong_answer_prover_is_rejected() {
    let s = StreamInput::Plain(generate::strict_stream(&mut ChaCha8Rng::seed_from_u64(2), 1 << 16, 100));
    for mode in [FkMode::Online, FkMode::Prescient] {
        let cfg = RunConfig::new(SchemeParams::Fk { k: 2, mode }).with_prover(Strategy::WrongAnswer);
        let t = soundness_trials(&cfg, &s, 20).unwrap();
        assert_eq!(t.accepted, 0, "{mode:?}");
    }
}

#[test]
fn runs_are_reproducible_from_the_seed() {
    let s = StreamInput::Plain(generate::strict_stream(&mut ChaCha8Rng::seed_from_u64(3), 1 << 16, 64));
    let cfg = RunConfig::new(SchemeParams::Fk { k: 3, mode: FkMode::Online }).with_seed(11);
    let a = run_scheme(&cfg, &s).unwrap();
    let b = run_scheme(&cfg, &s).unwrap();
    assert_eq!((a.outcome, a.cost.hcost_bits, a.cost.vcost_bits), (b.outcome, b.cost.hcost_bits, b.cost.vcost_bits));
}

#[test]
fn honest_answers_match_the_oracle() {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let pair = StreamInput::Tagged(generate::set_pair(&mut r, 1 << 12, 20, 30, 3));
    for scheme in [
        SchemeParams::Disj { mode: DisjMode::Online },
        SchemeParams::Disj { mode: DisjMode::Prescient },
        SchemeParams::InnerProduct,
        SchemeParams::Hamming,
        SchemeParams::Subset,
    ] {
        let cfg = RunConfig::new(scheme.clone()).with_seed(1);
        let run = run_scheme(&cfg, &pair).unwrap();
        if let SchemeOutcome::Accepted(v) = run.outcome {
            assert_eq!(Some(v), oracle(&cfg, &pair), "{scheme}");
        }
    }
    let g = StreamInput::Edges(generate::random_graph(&mut r, 12, 0.4));
    let cfg = RunConfig::new(SchemeParams::Triangles);
    assert_eq!(run_scheme(&cfg, &g).unwrap().outcome.value(), oracle(&cfg, &g).as_ref());
}

#[test]
fn sweep_rejects_cv_one_before_running() {
    let t = RunConfig::new(SchemeParams::Fk { k: 2, mode: FkMode::Online });
    assert!(cost_sweep(&t, 1 << 16, &[(10, 4), (10, 1)]).is_err());
    let rows = cost_sweep(&t, 1 << 16, &[(50, 4)]).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].accepted && rows[0].hcost_bits > 0);
}

#[test]
fn wrong_input_kind_is_a_usage_error() {
    let s = plain("# n=8\n1 1\n");
    assert!(run_scheme(&RunConfig::new(SchemeParams::Triangles), &s).is_err());
    assert!(run_scheme(&RunConfig::new(SchemeParams::Fk { k: 0, mode: FkMode::Online }), &s).is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;
    use streamcert::input::format_plain;
    use streamcert_core::streams::{StreamUpdate, UpdateModel};
    use streamcert::PlainStream;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn plain_files_round_trip(updates in prop::collection::vec((0u64..500, prop_oneof![-9i64..0, 1i64..10]), 0..40)) {
            let updates: Vec<StreamUpdate> = updates.into_iter().map(|(i, d)| StreamUpdate::new(i, d)).collect();
            let s = PlainStream::new(500, UpdateModel::NON_STRICT, updates).unwrap();
            let StreamInput::Plain(back) = parse_stream(InputKind::Plain, &format_plain(&s)).unwrap() else { unreachable!() };
            prop_assert_eq!(back.updates, s.updates);
            prop_assert_eq!(back.meta, s.meta);
        }

        #[test]
        fn honest_prescient_fk_is_exact(seed in 0u64..10_000, m in 0u64..80, k in 1u32..4) {
            let s = generate::strict_stream(&mut ChaCha8Rng::seed_from_u64(seed), 1 << 12, m);
            let truth: i128 = {
                let mut f = std::collections::BTreeMap::new();
                for u in &s.updates {
                    *f.entry(u.item).or_insert(0i128) += u.delta as i128;
                }
                f.values().map(|x| x.pow(k)).sum()
            };
            let cfg = RunConfig::new(SchemeParams::Fk { k, mode: FkMode::Prescient }).with_seed(seed);
            let out = run_scheme(&cfg, &StreamInput::Plain(s)).unwrap().outcome;
            prop_assert_eq!(out, SchemeOutcome::Accepted(Value::Int(truth)));
        }
    }
}
