mod common;

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scratchbench::tasks::fewshot::demonstrations;
use scratchbench::tasks::*;
use scratchbench::Error;

fn vocab() -> Vocab {
    Vocab::new(VocabSpec::default())
}

#[test]
fn parity_boxes() {
    common::golden::parity_boxes();
}

#[test]
fn addition_boxes() {
    common::golden::addition_boxes();
}

#[test]
fn interval_wider_than_sequence_uses_one_mnemonic() {
    let v = vocab();
    let variant: FormatVariant = "interval:9".parse().unwrap();
    let ex = instantiate(Problem::Parity(vec![1, 1, 0]), &variant, &v, 5).unwrap();
    assert_eq!(ex.instance.mnemonics.len(), 1);
    assert_eq!(ex.len(), 2 * 3 + 2 + 2);
}

#[test]
fn parity_oracle_exhaustive_to_twelve_bits() {
    for n in 1..=12usize {
        for v in 0u32..1 << n {
            let bits: Vec<u8> = (0..n).map(|i| (v >> i) as u8 & 1).collect();
            let want: Vec<u8> = common::prefix_xor(&bits);
            assert_eq!(parity_oracle(&bits).unwrap(), want);
        }
    }
}

#[test]
fn addition_oracle_matches_schoolbook() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let la = rand::Rng::gen_range(&mut rng, 1..=14);
        let lb = rand::Rng::gen_range(&mut rng, 1..=14);
        let a = scratchbench::tasks::instance::sample_operand(la, &mut rng);
        let b = scratchbench::tasks::instance::sample_operand(lb, &mut rng);
        let (rev, fin) = addition_oracle(&a, &b).unwrap();
        let digits = |d: &[u8]| d.iter().map(|x| (b'0' + x) as char).collect::<String>();
        let want = common::schoolbook_add(&digits(&a), &digits(&b));
        let want = format!("{want:0>width$}", width = la.max(lb) + 1);
        assert_eq!(digits(&fin), want);
        assert_eq!(rev.iter().rev().copied().collect::<Vec<_>>(), fin);
    }
}

#[test]
fn mnemonic_pairs_are_uniform() {
    let pool = MnemonicPool {
        name: "ten".into(),
        kind: PoolKind::WordLike,
        tokens: (0..10).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let draws = 100_000;
    let mut counts: HashMap<(TokenId, TokenId), usize> = HashMap::new();
    for _ in 0..draws {
        let s = sample_mnemonics(&pool, 2, &mut rng).unwrap();
        assert_ne!(s[0], s[1]);
        *counts.entry((s[0], s[1])).or_default() += 1;
    }
    assert_eq!(counts.len(), 90);
    let p = 1.0 / 90.0;
    let mean = draws as f64 * p;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    let mut chi2 = 0.0;
    for &c in counts.values() {
        assert!((c as f64 - mean).abs() < 3.0 * sigma, "{c} vs {mean}");
        chi2 += (c as f64 - mean).powi(2) / mean;
    }
    // 89 degrees of freedom; the 0.999 quantile is about 135.
    assert!(chi2 < 135.0, "chi2 {chi2}");
}

#[test]
fn mnemonic_sampling_is_seed_deterministic() {
    let pool = vocab().word_pool();
    let a = sample_mnemonics_seeded(&pool, 20, 1).unwrap();
    assert_eq!(a, sample_mnemonics_seeded(&pool, 20, 1).unwrap());
    assert_ne!(a, sample_mnemonics_seeded(&pool, 20, 2).unwrap());
    assert_eq!(a.iter().collect::<HashSet<_>>().len(), 20);
}

#[test]
fn dataset_counts_and_determinism() {
    let v = vocab();
    let spec = DatasetSpec {
        variant: "interleaved".parse().unwrap(),
        lengths: (10..=20).collect(),
        per_length: 260,
        holdout_per_length: 200,
        seed: 7,
    };
    let ds = build_dataset(&spec, &v).unwrap();
    assert_eq!(ds.eval.len(), 2200);
    assert_eq!(ds.train.len(), 660);
    let train: HashSet<_> = ds.train.iter().map(|e| &e.instance.problem).collect();
    assert!(ds.eval.iter().all(|e| !train.contains(&e.instance.problem)));
    let again = build_dataset(&spec, &v).unwrap();
    assert_eq!(serialize_split(&ds.train, &v), serialize_split(&again.train, &v));
    assert_eq!(manifest(&spec, &ds, &v), manifest(&spec, &again, &v));

    let none = build_dataset(&DatasetSpec { holdout_per_length: 0, ..spec.clone() }, &v).unwrap();
    assert!(none.eval.is_empty());
    let too_many = DatasetSpec { lengths: vec![4], per_length: 17, holdout_per_length: 1, ..spec };
    assert!(matches!(build_dataset(&too_many, &v), Err(Error::Count { .. })));
}

#[test]
fn fresh_mnemonics_per_example() {
    let v = vocab();
    let spec = DatasetSpec {
        variant: "mnemonic".parse().unwrap(),
        lengths: vec![12],
        per_length: 50,
        holdout_per_length: 0,
        seed: 1,
    };
    let ds = build_dataset(&spec, &v).unwrap();
    let distinct: HashSet<_> = ds.train.iter().map(|e| e.instance.mnemonics.clone()).collect();
    assert_eq!(distinct.len(), 50);
}

#[test]
fn fewshot_prompt_layout() {
    let v = vocab();
    let variant: FormatVariant = "mnemonic".parse().unwrap();
    let spec = DatasetSpec {
        variant,
        lengths: (10..=20).collect(),
        per_length: 3,
        holdout_per_length: 0,
        seed: 2,
    };
    let demos = build_dataset(&spec, &v).unwrap().train;
    let query = instantiate(Problem::Parity(vec![1, 0, 1]), &variant, &v, 8).unwrap();
    let prompt = render_fewshot_prompt(&demos, &query.instance, &variant, &v).unwrap();
    let parts = demonstrations(&prompt, &v);
    assert_eq!(parts.len(), 33);
    for part in &parts {
        let inst = parse(part, &variant, &v).unwrap();
        let Problem::Parity(bits) = &inst.problem else { panic!() };
        let ex = render(&inst, &variant, &v).unwrap();
        assert_eq!(&ex.tokens, part);
        assert_eq!(parity_oracle(bits).unwrap().len(), bits.len());
    }
    assert!(prompt.ends_with(query.prompt()));
    assert_eq!(v.render(&prompt[..9]), "Calculate the running parity of the sequence after ===");

    let bare = render_fewshot_prompt(&[], &query.instance, &variant, &v).unwrap();
    assert_eq!(bare.len(), 9 + 1 + query.prompt_len);
}

#[test]
fn ood_pool_is_disjoint_from_training_pool() {
    let v = vocab();
    let id: FormatVariant = "mnemonic".parse().unwrap();
    let ood: FormatVariant = "mnemonic@integer".parse().unwrap();
    let mut seen_id = HashSet::new();
    let mut seen_ood = HashSet::new();
    for s in 0..50 {
        let p = Problem::Parity(vec![1; 30]);
        seen_id.extend(instantiate(p.clone(), &id, &v, s).unwrap().instance.mnemonics);
        seen_ood.extend(instantiate(p, &ood, &v, s).unwrap().instance.mnemonics);
    }
    assert!(seen_id.is_disjoint(&seen_ood));
}

fn parity_variants() -> impl Strategy<Value = FormatVariant> {
    prop_oneof![
        Just("none"),
        Just("standard"),
        Just("interleaved"),
        Just("mnemonic"),
        Just("mnemonic+forced"),
        Just("mnemonic@integer"),
        Just("numeric"),
        Just("numeric+forced"),
        Just("constant"),
        Just("constant+forced"),
        Just("non_aligned"),
        Just("non_aligned+forced"),
        Just("cyclic"),
        Just("cyclic+forced"),
        Just("interval:2"),
        Just("interval:3"),
        Just("interval:5+forced"),
    ]
    .prop_map(|s| s.parse().unwrap())
}

fn addition_variants() -> impl Strategy<Value = FormatVariant> {
    prop_oneof![
        Just("add_plain"),
        Just("add_plain_padded"),
        Just("add_digit_aligned"),
        Just("add_digit_aligned+forced"),
        Just("add_zero_padded"),
        Just("add_zero_padded+forced"),
        Just("add_non_aligned"),
        Just("add_non_aligned+forced"),
    ]
    .prop_map(|s| s.parse().unwrap())
}

fn check_invariants(ex: &FormattedExample, vocab: &Vocab) {
    let v = &ex.variant;
    assert_eq!(ex.len(), v.expected_len(&ex.instance.problem));
    assert_eq!(ex.target_mask.len(), ex.len());
    assert!(ex.target_mask[..ex.prompt_len].iter().all(|&m| !m));
    assert!(ex.num_targets() > 0);
    let back = parse(&ex.tokens, v, vocab).unwrap();
    assert_eq!(back.problem, ex.instance.problem);
    assert_eq!(back.mnemonics, ex.instance.mnemonics);
    let m = &ex.instance.mnemonics;
    let n = ex.length();
    match v.family {
        Family::NonAligned => {
            let (a, b) = m.split_at(n);
            let a: HashSet<_> = a.iter().collect();
            assert!(b.iter().all(|t| !a.contains(t)));
        }
        Family::Numeric => {
            let want: Vec<_> = (1..=n).map(|i| vocab.integer(i).unwrap()).collect();
            assert_eq!(m, &want);
        }
        Family::Constant => assert!(m.iter().all(|&t| t == vocab.constant_mnemonic())),
        Family::Cyclic => {
            let cycle = vocab.color_cycle(v.cycle_len).unwrap();
            assert!(m.iter().enumerate().all(|(i, &t)| t == cycle[i % cycle.len()]));
        }
        _ => {}
    }
    // Aligned layouts echo the input mnemonics in the same order on the output side.
    if matches!(v.family, Family::Mnemonic | Family::Interval | Family::Numeric | Family::Cyclic | Family::Constant) {
        let is_bit = |t: &TokenId| vocab.bit_value(*t, v.family == Family::Numeric).is_some();
        let eos = ex.tokens.iter().position(|&t| t == vocab.eos()).unwrap();
        let input: Vec<_> = ex.tokens[1..eos].iter().filter(|t| !is_bit(t)).collect();
        let output: Vec<_> = ex.tokens[eos + 1..].iter().filter(|t| !is_bit(t)).collect();
        assert_eq!(input, output);
    }
    // Environment-forced layouts keep every mnemonic out of the targets.
    if v.env_forced {
        for (t, &tgt) in ex.tokens.iter().zip(&ex.target_mask) {
            if tgt {
                assert!(vocab.digit_value(*t).is_some() || vocab.bit_value(*t, true).is_some());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn parity_render_invariants(variant in parity_variants(), n in 1usize..45, seed in any::<u64>()) {
        let v = vocab();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = sample_problem(TaskKind::Parity, n, &mut rng).unwrap();
        let ex = instantiate(problem, &variant, &v, seed).unwrap();
        check_invariants(&ex, &v);
    }

    #[test]
    fn addition_render_invariants(variant in addition_variants(), n in 1usize..16, seed in any::<u64>()) {
        let v = vocab();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = sample_problem(TaskKind::Addition, n, &mut rng).unwrap();
        let ex = instantiate(problem, &variant, &v, seed).unwrap();
        check_invariants(&ex, &v);
    }

    #[test]
    fn corrupted_renderings_do_not_parse_as_something_else(n in 2usize..20, seed in any::<u64>(), at in any::<prop::sample::Index>()) {
        let v = vocab();
        let variant: FormatVariant = "mnemonic".parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ex = instantiate(sample_problem(TaskKind::Parity, n, &mut rng).unwrap(), &variant, &v, seed).unwrap();
        let mut bad = ex.tokens.clone();
        let i = at.index(bad.len() - 1) + 1;
        bad[i] = if bad[i] == v.digit(0) { v.digit(1) } else { v.digit(0) };
        if let Ok(inst) = parse(&bad, &variant, &v) {
            prop_assert_eq!(render(&inst, &variant, &v).unwrap().tokens, bad);
        }
    }
}
