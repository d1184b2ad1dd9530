//! The worked format boxes, written out by hand.

use scratchbench::tasks::*;

fn vocab() -> Vocab {
    Vocab::new(VocabSpec::default())
}

/// Parse a box written as tokens, `M<i>` for the i-th mnemonic (1-based)
/// and a leading `*` on model-predicted tokens.
pub fn layout(text: &str, mnemonics: &[TokenId], vocab: &Vocab) -> (Vec<TokenId>, Vec<bool>) {
    text.split_whitespace()
        .map(|w| {
            let (target, w) = match w.strip_prefix('*') {
                Some(rest) => (true, rest),
                None => (false, w),
            };
            let id = match w.strip_prefix('M') {
                Some(i) if !i.is_empty() && i.chars().all(|c| c.is_ascii_digit()) => mnemonics[i.parse::<usize>().unwrap() - 1],
                _ => vocab.id(w).unwrap_or_else(|| panic!("token {w}")),
            };
            (id, target)
        })
        .unzip()
}

pub fn check_box(problem: Problem, variant: &str, mnemonics: Vec<TokenId>, text: &str) {
    let v = vocab();
    let variant: FormatVariant = variant.parse().unwrap();
    let inst = TaskInstance { problem, mnemonics: mnemonics.clone(), seed: 0 };
    let ex = render(&inst, &variant, &v).unwrap();
    let (tokens, mask) = layout(text, &mnemonics, &v);
    assert_eq!(v.render(&ex.tokens), v.render(&tokens), "{variant}");
    assert_eq!(ex.target_mask, mask, "{variant} mask");
    assert_eq!(ex.len(), variant.expected_len(&inst.problem));
    assert!(ex.target_mask[..ex.prompt_len].iter().all(|&m| !m));
    assert_eq!(parse(&ex.tokens, &variant, &v).unwrap().problem, inst.problem);
}

pub fn words(n: usize) -> Vec<TokenId> {
    vocab().word_pool().tokens[100..100 + n].to_vec()
}

const BITS7: [u8; 7] = [1, 0, 1, 0, 0, 1, 1];
const BITS6: [u8; 6] = [1, 0, 1, 0, 0, 1];

/// Every parity box, token for token with its target mask.
pub fn parity_boxes() {
    let p7 = Problem::Parity(BITS7.to_vec());
    let p6 = Problem::Parity(BITS6.to_vec());
    check_box(p7.clone(), "none", vec![], ">>> 1 0 1 0 0 1 1 === *0");
    check_box(p7.clone(), "standard", vec![], ">>> 1 0 1 0 0 1 1 === *1 *1 *0 *0 *0 *1 *0");
    check_box(p7, "interleaved", vec![], ">>> 1 *1 0 *1 1 *0 0 *0 0 *0 1 *1 1 *0");
    check_box(
        p6.clone(),
        "mnemonic",
        words(6),
        ">>> M1 1 M2 0 M3 1 M4 0 M5 0 M6 1 === *M1 *1 *M2 *1 *M3 *0 *M4 *0 *M5 *0 *M6 *1",
    );
    check_box(
        p6.clone(),
        "mnemonic+forced",
        words(6),
        ">>> M1 1 M2 0 M3 1 M4 0 M5 0 M6 1 === M1 *1 M2 *1 M3 *0 M4 *0 M5 *0 M6 *1",
    );
    let v = vocab();
    let ints: Vec<TokenId> = (1..=6).map(|i| v.integer(i).unwrap()).collect();
    check_box(p6.clone(), "numeric", ints, ">>> 1 b 2 a 3 b 4 a 5 a 6 b === *1 *b *2 *b *3 *a *4 *a *5 *a *6 *b");
    check_box(
        p6.clone(),
        "constant",
        vec![v.constant_mnemonic(); 6],
        ">>> # 1 # 0 # 1 # 0 # 0 # 1 === *# *1 *# *1 *# *0 *# *0 *# *0 *# *1",
    );
    check_box(
        p6.clone(),
        "non_aligned",
        words(12),
        ">>> M1 1 M2 0 M3 1 M4 0 M5 0 M6 1 === *M7 *1 *M8 *1 *M9 *0 *M10 *0 *M11 *0 *M12 *1",
    );
    let cycle = v.color_cycle(3).unwrap();
    let cyc: Vec<TokenId> = (0..6).map(|i| cycle[i % 3]).collect();
    check_box(
        p6,
        "cyclic:3",
        cyc,
        ">>> red 1 green 0 yellow 1 red 0 green 0 yellow 1 === *red *1 *green *1 *yellow *0 *red *0 *green *0 *yellow *1",
    );
    check_box(
        Problem::Parity(vec![1, 0, 1, 0, 0, 1, 0, 0]),
        "interval:2",
        words(4),
        ">>> M1 1 0 M2 1 0 M3 0 1 M4 0 0 === *M1 *1 *1 *M2 *0 *0 *M3 *0 *1 *M4 *1 *1",
    );
}

/// Every addition box for 12 + 9.
pub fn addition_boxes() {
    let p = || Problem::Addition { a: vec![1, 2], b: vec![9] };
    check_box(p(), "add_plain", vec![], ">>> 1 2 + 9 === *1 *2 *0 *### *0 *2 *1");
    check_box(p(), "add_plain_padded", vec![], ">>> 1 2 + 0 9 === *1 *2 *0 *### *0 *2 *1");
    check_box(
        p(),
        "add_digit_aligned",
        words(3),
        ">>> M1 1 M2 2 M3 + M2 9 M3 === *M2 *1 *M1 *2 *M3 *0 *### *M3 *0 *M1 *2 *M2 *1",
    );
    check_box(
        p(),
        "add_digit_aligned+forced",
        words(3),
        ">>> M1 1 M2 2 M3 + M2 9 M3 === M2 *1 M1 *2 M3 *0 ### M3 *0 M1 *2 M2 *1",
    );
    check_box(
        p(),
        "add_zero_padded",
        words(3),
        ">>> M1 1 M2 2 M3 + M1 0 M2 9 M3 === *M2 *1 *M1 *2 *M3 *0 *### *M3 *0 *M1 *2 *M2 *1",
    );
    check_box(
        p(),
        "add_zero_padded+forced",
        words(3),
        ">>> M1 1 M2 2 M3 + M1 0 M2 9 M3 === M2 *1 M1 *2 M3 *0 ### M3 *0 M1 *2 M2 *1",
    );
    check_box(
        p(),
        "add_non_aligned",
        words(3),
        ">>> M1 1 M2 2 + M3 9 === *M3 *M2 *1 *M1 *2 *0 *### *0 *M1 *2 *M3 *M2 *1",
    );
    check_box(
        p(),
        "add_non_aligned+forced",
        words(3),
        ">>> M1 1 M2 2 + M3 9 === M3 M2 *1 M1 *2 *0 ### *0 M1 *2 M3 M2 *1",
    );
}

