mod common;

use common::all_variants;
use scratchbench::eval::{
    env_forced_decode, eval_examples, exact_match, length_curve, parse_curve_csv, per_token_accuracy, score_examples,
    ConstantStub, DecodeOutcome, OracleStub, SpyStub,
};
use scratchbench::model::{init_model, ModelConfig, PosScheme};
use scratchbench::tasks::{instantiate, FormatVariant, Problem, TaskKind, Vocab, VocabSpec};
use scratchbench::Error;

fn vocab() -> Vocab {
    Vocab::new(VocabSpec {
        word_pool: 512,
        int_tokens: 64,
    })
}

fn all_bit_strings(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..1u32 << n).map(move |m| (0..n).map(|i| ((m >> (n - 1 - i)) & 1) as u8).collect())
}

#[test]
fn oracle_stub_is_perfect_on_every_variant_and_length() {
    let v = vocab();
    for (task, max) in [(TaskKind::Parity, 60), (TaskKind::Addition, 14)] {
        let lengths: Vec<usize> = (1..=max).collect();
        for variant in all_variants(task) {
            let examples = eval_examples(&variant, &lengths, 3, 7, &v).unwrap();
            let stub = OracleStub::new(&examples).unwrap();
            let curve = length_curve(&stub, &variant, &lengths, 3, 7, &v, 1, "oracle").unwrap();
            assert_eq!(curve.rows.len(), max, "{variant}");
            for r in &curve.rows {
                assert_eq!((r.exact_match, r.per_token, r.overflow), (1.0, 1.0, 0), "{variant} at {}", r.length);
            }
        }
    }
}

#[test]
fn constant_zero_stub_matches_enumeration() {
    let v = vocab();
    let zero = ConstantStub(v.digit(0));
    // Fraction of 8-bit inputs whose targets are all '0' under each layout:
    // running-parity layouts need every prefix parity to be 0 (only the
    // all-zero input), the bare answer needs an even number of ones.
    for (name, expected) in [("standard", 1.0 / 256.0), ("interleaved", 1.0 / 256.0), ("none", 0.5)] {
        let variant: FormatVariant = name.parse().unwrap();
        let examples: Vec<_> = all_bit_strings(8)
            .map(|bits| instantiate(Problem::Parity(bits), &variant, &v, 0).unwrap())
            .collect();
        let scores = score_examples(&zero, &examples, 1).unwrap();
        let acc = scores.iter().filter(|s| s.exact).count() as f64 / scores.len() as f64;
        assert_eq!(acc, expected, "{name}");
    }
}

#[test]
fn decoder_sees_only_ground_truth_prefixes_and_its_own_outputs() {
    let v = vocab();
    for variant in all_variants(TaskKind::Parity).into_iter().chain(all_variants(TaskKind::Addition)) {
        let examples = eval_examples(&variant, &[1, 4, 9], 2, 3, &v).unwrap();
        let emitted = v.digit(1);
        let spy = SpyStub::new(ConstantStub(emitted));
        for ex in &examples {
            let preds = env_forced_decode(&spy, ex).unwrap();
            let seen = spy.take();
            let targets: Vec<usize> = ex.targets().collect();
            assert_eq!(seen.len(), targets.len());
            assert_eq!(preds, DecodeOutcome::Completed(vec![emitted; targets.len()]));
            for (ctx, &p) in seen.iter().zip(&targets) {
                assert_eq!(ctx.len(), p, "{variant}");
                for (i, &tok) in ctx.iter().enumerate() {
                    let want = if ex.target_mask[i] { emitted } else { ex.tokens[i] };
                    assert_eq!(tok, want, "{variant}: position {i} before target {p}");
                }
            }
        }
    }
}

#[test]
fn scores_do_not_depend_on_order_or_threads() {
    let v = vocab();
    let variant: FormatVariant = "mnemonic".parse().unwrap();
    let model = init_model::<f32>(&ModelConfig {
        n_layers: 1,
        n_heads: 2,
        d_model: 16,
        d_ff: 32,
        vocab_size: v.len(),
        max_seq_len: 256,
        pos_scheme: PosScheme::Rotary,
        seed: 1,
    })
    .unwrap();
    let examples = eval_examples(&variant, &[2, 5, 11], 4, 0, &v).unwrap();
    let forward = score_examples(&model, &examples, 1).unwrap();
    let mut reversed: Vec<_> = examples.clone();
    reversed.reverse();
    let mut backward = score_examples(&model, &reversed, 1).unwrap();
    backward.reverse();
    assert_eq!(forward, backward);
    assert_eq!(forward, score_examples(&model, &examples, 3).unwrap());
}

#[test]
fn learned_positions_report_overflow_instead_of_failing() {
    let v = vocab();
    let variant: FormatVariant = "standard".parse().unwrap();
    let model = init_model::<f32>(&ModelConfig {
        n_layers: 1,
        n_heads: 1,
        d_model: 8,
        d_ff: 8,
        vocab_size: v.len(),
        max_seq_len: 24,
        pos_scheme: PosScheme::Learned,
        seed: 0,
    })
    .unwrap();
    let curve = length_curve(&model, &variant, &[5, 11, 12, 30], 2, 0, &v, 1, "learned").unwrap();
    let overflow: Vec<usize> = curve.rows.iter().map(|r| r.overflow).collect();
    // standard layout is 2n+2 tokens; the last target is predicted from 2n+1
    assert_eq!(overflow, vec![0, 0, 2, 2]);
    assert_eq!(curve.row(30).unwrap().exact_match, 0.0);
}

#[test]
fn prediction_count_mismatch_is_a_scoring_error() {
    let v = vocab();
    let ex = instantiate(Problem::Parity(vec![1, 0, 1]), &"standard".parse().unwrap(), &v, 0).unwrap();
    assert!(matches!(exact_match(&ex, &[v.digit(1)]), Err(Error::Scoring { predicted: 1, targets: 3 })));
    assert!(per_token_accuracy(&ex, &[]).is_err());
    let truth: Vec<u32> = ex.targets().map(|p| ex.tokens[p]).collect();
    assert!(exact_match(&ex, &truth).unwrap());
    let mut wrong = truth.clone();
    wrong[1] = v.digit(0);
    assert!((per_token_accuracy(&ex, &wrong).unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn curve_csv_round_trips_and_validates_inputs() {
    let v = vocab();
    let variant: FormatVariant = "interleaved".parse().unwrap();
    let examples = eval_examples(&variant, &[3, 4], 5, 1, &v).unwrap();
    let stub = OracleStub::new(&examples).unwrap();
    let curve = length_curve(&stub, &variant, &[3, 4], 5, 1, &v, 1, "stub").unwrap();
    let csv = curve.to_csv();
    assert!(csv.starts_with("length,n,exact_match,per_token,overflow_count\n3,5,1.000000,1.000000,0\n"));
    assert_eq!(parse_curve_csv(&csv).unwrap(), curve.rows);
    assert!(matches!(length_curve(&stub, &variant, &[], 5, 1, &v, 1, "x"), Err(Error::Config(_))));
    assert!(matches!(length_curve(&stub, &variant, &[3], 0, 1, &v, 1, "x"), Err(Error::Config(_))));
}
