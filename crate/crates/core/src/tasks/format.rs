//! Renderers for every parity and addition layout, and their inverses.
//!
//! A rendered example carries the complete token sequence plus a target
//! mask: `true` where the model predicts the token, `false` where the
//! environment supplies it.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::instance::{addition_oracle, parity_oracle, sample_mnemonics, Problem, TaskInstance, TaskKind};
use super::vocab::{PoolKind, TokenId, Vocab, COLORS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    None,
    Standard,
    Interleaved,
    Mnemonic,
    Numeric,
    Constant,
    NonAligned,
    Cyclic,
    Interval,
    AddPlain,
    AddPlainPadded,
    AddDigitAligned,
    AddZeroPadded,
    AddNonAligned,
}

impl Family {
    pub const ALL: [Family; 14] = [
        Family::None,
        Family::Standard,
        Family::Interleaved,
        Family::Mnemonic,
        Family::Numeric,
        Family::Constant,
        Family::NonAligned,
        Family::Cyclic,
        Family::Interval,
        Family::AddPlain,
        Family::AddPlainPadded,
        Family::AddDigitAligned,
        Family::AddZeroPadded,
        Family::AddNonAligned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::None => "none",
            Family::Standard => "standard",
            Family::Interleaved => "interleaved",
            Family::Mnemonic => "mnemonic",
            Family::Numeric => "numeric",
            Family::Constant => "constant",
            Family::NonAligned => "non_aligned",
            Family::Cyclic => "cyclic",
            Family::Interval => "interval",
            Family::AddPlain => "add_plain",
            Family::AddPlainPadded => "add_plain_padded",
            Family::AddDigitAligned => "add_digit_aligned",
            Family::AddZeroPadded => "add_zero_padded",
            Family::AddNonAligned => "add_non_aligned",
        }
    }

    pub fn task(self) -> TaskKind {
        match self {
            Family::AddPlain
            | Family::AddPlainPadded
            | Family::AddDigitAligned
            | Family::AddZeroPadded
            | Family::AddNonAligned => TaskKind::Addition,
            _ => TaskKind::Parity,
        }
    }

    /// Families that carry mnemonic tokens, and so have a forced variant.
    pub fn has_mnemonics(self) -> bool {
        !matches!(
            self,
            Family::None | Family::Standard | Family::Interleaved | Family::AddPlain | Family::AddPlainPadded
        )
    }

    /// Mnemonics are drawn from a pool per instance (rather than fixed).
    pub fn samples_pool(self) -> bool {
        matches!(
            self,
            Family::Mnemonic | Family::NonAligned | Family::Interval | Family::AddDigitAligned | Family::AddZeroPadded | Family::AddNonAligned
        )
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown format family `{s}`")))
    }
}

/// A layout choice. Text form: `family[:k][+forced][@pool]`, where `k` is
/// the interval for `interval` and the cycle length for `cyclic`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FormatVariant {
    pub family: Family,
    pub env_forced: bool,
    pub interval_k: usize,
    pub cycle_len: usize,
    pub pool: PoolKind,
}

impl FormatVariant {
    pub fn new(family: Family) -> Self {
        FormatVariant {
            family,
            env_forced: false,
            interval_k: 1,
            cycle_len: COLORS.len(),
            pool: PoolKind::WordLike,
        }
    }

    pub fn forced(mut self) -> Self {
        self.env_forced = true;
        self
    }

    pub fn interval(k: usize) -> Self {
        FormatVariant {
            interval_k: k,
            ..FormatVariant::new(Family::Interval)
        }
    }

    pub fn with_pool(mut self, pool: PoolKind) -> Self {
        self.pool = pool;
        self
    }

    pub fn task(&self) -> TaskKind {
        self.family.task()
    }

    pub fn validate(&self) -> Result<()> {
        if self.interval_k == 0 {
            return Err(Error::Config("interval_k must be at least 1".into()));
        }
        if self.env_forced && !self.family.has_mnemonics() {
            return Err(Error::Config(format!(
                "`{}` has no environment-forced variant",
                self.family.name()
            )));
        }
        if self.family.samples_pool() && self.pool == PoolKind::Color {
            return Err(Error::Config("the color tokens are reserved for the cyclic layout".into()));
        }
        if self.cycle_len == 0 || self.cycle_len > COLORS.len() {
            return Err(Error::Config(format!("cycle length must be 1..={}", COLORS.len())));
        }
        Ok(())
    }

    /// Mnemonic slots the layout needs for a problem.
    pub fn mnemonic_count(&self, problem: &Problem) -> usize {
        let n = problem.length();
        match (self.family, problem) {
            (Family::Mnemonic | Family::Numeric | Family::Constant | Family::Cyclic, _) => n,
            (Family::NonAligned, _) => 2 * n,
            (Family::Interval, _) => n.div_ceil(self.interval_k),
            (Family::AddDigitAligned | Family::AddZeroPadded, _) => n + 1,
            (Family::AddNonAligned, Problem::Addition { a, b }) => a.len() + b.len(),
            _ => 0,
        }
    }

    /// Closed-form token count, computed without rendering.
    pub fn expected_len(&self, problem: &Problem) -> usize {
        let n = problem.length();
        match (self.family, problem) {
            (Family::None, _) => n + 3,
            (Family::Standard, _) => 2 * n + 2,
            (Family::Interleaved, _) => 2 * n + 1,
            (Family::Mnemonic | Family::Numeric | Family::Constant | Family::NonAligned | Family::Cyclic, _) => 4 * n + 2,
            (Family::Interval, _) => 2 * n + 2 + 2 * n.div_ceil(self.interval_k),
            (Family::AddPlain, Problem::Addition { a, b }) => a.len() + b.len() + 2 * n + 6,
            (Family::AddPlainPadded, _) => 4 * n + 6,
            (Family::AddDigitAligned, Problem::Addition { a, b }) => 2 * a.len() + 2 * b.len() + 4 * n + 10,
            (Family::AddZeroPadded, _) => 8 * n + 10,
            (Family::AddNonAligned, Problem::Addition { a, b }) => 4 * a.len() + 4 * b.len() + 2 * n + 6,
            _ => 0,
        }
    }
}

impl fmt::Display for FormatVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family.name())?;
        match self.family {
            Family::Interval => write!(f, ":{}", self.interval_k)?,
            Family::Cyclic if self.cycle_len != COLORS.len() => write!(f, ":{}", self.cycle_len)?,
            _ => {}
        }
        if self.env_forced {
            f.write_str("+forced")?;
        }
        if self.pool != PoolKind::WordLike && self.family.samples_pool() {
            write!(f, "@{}", self.pool)?;
        }
        Ok(())
    }
}

impl FromStr for FormatVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (rest, pool) = match s.split_once('@') {
            Some((r, "word")) => (r, PoolKind::WordLike),
            Some((r, "integer")) => (r, PoolKind::Integer),
            Some((_, p)) => return Err(Error::Config(format!("unknown pool `{p}` (word, integer)"))),
            None => (s, PoolKind::WordLike),
        };
        let (rest, forced) = match rest.strip_suffix("+forced") {
            Some(r) => (r, true),
            None => (rest, false),
        };
        let (name, param) = match rest.split_once(':') {
            Some((n, k)) => {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::Config(format!("bad parameter in `{s}`")))?;
                (n, Some(k))
            }
            None => (rest, None),
        };
        let mut v = FormatVariant::new(name.parse()?).with_pool(pool);
        v.env_forced = forced;
        match (v.family, param) {
            (Family::Interval, Some(k)) => v.interval_k = k,
            (Family::Interval, None) => return Err(Error::Config("interval needs `:k`".into())),
            (Family::Cyclic, Some(k)) => v.cycle_len = k,
            (_, Some(_)) => return Err(Error::Config(format!("`{name}` takes no parameter"))),
            (_, None) => {}
        }
        v.validate()?;
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormattedExample {
    pub tokens: Vec<TokenId>,
    pub target_mask: Vec<bool>,
    pub prompt_len: usize,
    pub instance: TaskInstance,
    pub variant: FormatVariant,
}

impl FormattedExample {
    pub fn length(&self) -> usize {
        self.instance.problem.length()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.instance.seed
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.target_mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn num_targets(&self) -> usize {
        self.target_mask.iter().filter(|&&m| m).count()
    }

    pub fn prompt(&self) -> &[TokenId] {
        &self.tokens[..self.prompt_len]
    }
}

/// Draw (or look up) the mnemonic assignment for a problem.
pub fn assign_mnemonics(problem: &Problem, variant: &FormatVariant, vocab: &Vocab, seed: u64) -> Result<Vec<TokenId>> {
    let n = variant.mnemonic_count(problem);
    let len = problem.length();
    match variant.family {
        Family::Numeric => (1..=len)
            .map(|i| {
                vocab.integer(i).ok_or_else(|| Error::PoolExhausted {
                    pool: "integer".into(),
                    requested: len,
                    available: 9 + vocab.spec().int_tokens,
                })
            })
            .collect(),
        Family::Constant => Ok(vec![vocab.constant_mnemonic(); len]),
        Family::Cyclic => {
            let cycle = vocab.color_cycle(variant.cycle_len)?;
            Ok((0..len).map(|i| cycle[i % cycle.len()]).collect())
        }
        f if f.samples_pool() => {
            let pool = vocab.pool(variant.pool);
            sample_mnemonics(&pool, n, &mut ChaCha8Rng::seed_from_u64(seed))
        }
        _ => Ok(Vec::new()),
    }
}

/// Sample mnemonics for `problem` and render it.
pub fn instantiate(problem: Problem, variant: &FormatVariant, vocab: &Vocab, seed: u64) -> Result<FormattedExample> {
    let mnemonics = assign_mnemonics(&problem, variant, vocab, seed)?;
    render(
        &TaskInstance {
            problem,
            mnemonics,
            seed,
        },
        variant,
        vocab,
    )
}

struct Builder {
    tokens: Vec<TokenId>,
    mask: Vec<bool>,
}

impl Builder {
    fn new(sos: TokenId) -> Self {
        Builder {
            tokens: vec![sos],
            mask: vec![false],
        }
    }

    fn push(&mut self, tok: TokenId, target: bool) {
        self.tokens.push(tok);
        self.mask.push(target);
    }

    fn finish(self, prompt_len: usize, instance: &TaskInstance, variant: &FormatVariant) -> FormattedExample {
        FormattedExample {
            tokens: self.tokens,
            target_mask: self.mask,
            prompt_len,
            instance: instance.clone(),
            variant: *variant,
        }
    }
}

pub fn render(instance: &TaskInstance, variant: &FormatVariant, vocab: &Vocab) -> Result<FormattedExample> {
    match variant.task() {
        TaskKind::Parity => render_parity(instance, variant, vocab),
        TaskKind::Addition => render_addition(instance, variant, vocab),
    }
}

fn check_slots(instance: &TaskInstance, variant: &FormatVariant) -> Result<()> {
    let need = variant.mnemonic_count(&instance.problem);
    if instance.mnemonics.len() != need {
        return Err(Error::Domain(format!(
            "{variant} needs {need} mnemonics, instance has {}",
            instance.mnemonics.len()
        )));
    }
    Ok(())
}

pub fn render_parity(instance: &TaskInstance, variant: &FormatVariant, vocab: &Vocab) -> Result<FormattedExample> {
    variant.validate()?;
    let bits = match &instance.problem {
        Problem::Parity(bits) => bits,
        _ => return Err(Error::Config(format!("{variant} renders parity, got addition"))),
    };
    let parities = parity_oracle(bits)?;
    check_slots(instance, variant)?;
    let n = bits.len();
    let letters = variant.family == Family::Numeric;
    let bit = |b: u8| vocab.bit(b, letters);
    let mut s = Builder::new(vocab.sos());
    match variant.family {
        Family::None | Family::Standard => {
            for &b in bits {
                s.push(bit(b), false);
            }
            s.push(vocab.eos(), false);
            if variant.family == Family::None {
                s.push(bit(parities[n - 1]), true);
            } else {
                for &p in &parities {
                    s.push(bit(p), true);
                }
            }
            Ok(s.finish(n + 2, instance, variant))
        }
        Family::Interleaved => {
            for (&b, &p) in bits.iter().zip(&parities) {
                s.push(bit(b), false);
                s.push(bit(p), true);
            }
            Ok(s.finish(1, instance, variant))
        }
        _ => {
            let k = if variant.family == Family::Interval { variant.interval_k } else { 1 };
            let groups = n.div_ceil(k);
            let m = &instance.mnemonics;
            let (input, output) = if variant.family == Family::NonAligned {
                (&m[..n], &m[n..])
            } else {
                (&m[..groups], &m[..groups])
            };
            for (i, &b) in bits.iter().enumerate() {
                if i % k == 0 {
                    s.push(input[i / k], false);
                }
                s.push(bit(b), false);
            }
            s.push(vocab.eos(), false);
            let prompt_len = s.tokens.len();
            for (i, &p) in parities.iter().enumerate() {
                if i % k == 0 {
                    s.push(output[i / k], !variant.env_forced);
                }
                s.push(bit(p), true);
            }
            Ok(s.finish(prompt_len, instance, variant))
        }
    }
}

pub fn render_addition(instance: &TaskInstance, variant: &FormatVariant, vocab: &Vocab) -> Result<FormattedExample> {
    variant.validate()?;
    let (a, b) = match &instance.problem {
        Problem::Addition { a, b } => (a, b),
        _ => return Err(Error::Config(format!("{variant} renders addition, got parity"))),
    };
    if variant.task() != TaskKind::Addition {
        return Err(Error::Config(format!("{variant} is not an addition layout")));
    }
    let (reversed, fin) = addition_oracle(a, b)?;
    check_slots(instance, variant)?;
    let l = a.len().max(b.len());
    let padded = matches!(variant.family, Family::AddPlainPadded | Family::AddZeroPadded);
    let pad = |op: &[u8]| -> Vec<u8> {
        if padded {
            let mut v = vec![0; l - op.len()];
            v.extend_from_slice(op);
            v
        } else {
            op.to_vec()
        }
    };
    let (a, b) = (pad(a), pad(b));
    let forced = variant.env_forced;
    let m = &instance.mnemonics;
    let mut s = Builder::new(vocab.sos());

    // Mnemonic tokens that precede the sum digit at place `p` (0 = units).
    let place_mnemonics: Box<dyn Fn(usize) -> Vec<TokenId>> = match variant.family {
        Family::AddDigitAligned | Family::AddZeroPadded => Box::new(|p| vec![if p == l { m[l] } else { m[l - 1 - p] }]),
        Family::AddNonAligned => {
            let (ma, mb) = m.split_at(a.len());
            let (la, lb) = (a.len(), b.len());
            Box::new(move |p| {
                let mut out = Vec::new();
                if p < lb {
                    out.push(mb[lb - 1 - p]);
                }
                if p < la {
                    out.push(ma[la - 1 - p]);
                }
                out
            })
        }
        _ => Box::new(|_| Vec::new()),
    };

    for (k, op) in [&a, &b].into_iter().enumerate() {
        if k == 1 {
            s.push(vocab.plus(), false);
        }
        for (i, &d) in op.iter().enumerate() {
            let place = op.len() - 1 - i;
            match variant.family {
                Family::AddDigitAligned | Family::AddZeroPadded => s.push(m[l - 1 - place], false),
                Family::AddNonAligned => s.push(if k == 0 { m[i] } else { m[a.len() + i] }, false),
                _ => {}
            }
            s.push(vocab.digit(d), false);
        }
        if matches!(variant.family, Family::AddDigitAligned | Family::AddZeroPadded) {
            s.push(m[l], false);
        }
    }
    s.push(vocab.eos(), false);
    let prompt_len = s.tokens.len();
    for (p, &d) in reversed.iter().enumerate() {
        for t in place_mnemonics(p) {
            s.push(t, !forced);
        }
        s.push(vocab.digit(d), true);
    }
    s.push(vocab.reversal(), !forced);
    for (j, &d) in fin.iter().enumerate() {
        for t in place_mnemonics(l - j) {
            s.push(t, !forced);
        }
        s.push(vocab.digit(d), true);
    }
    Ok(s.finish(prompt_len, instance, variant))
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Recover the instance (problem and mnemonic assignment) from a complete
/// rendering. The result re-renders to exactly `tokens`; anything else is
/// rejected. The returned seed is zero.
pub fn parse(tokens: &[TokenId], variant: &FormatVariant, vocab: &Vocab) -> Result<TaskInstance> {
    if tokens.first() != Some(&vocab.sos()) {
        return Err(parse_err("missing start symbol"));
    }
    let (problem, mnemonics) = match variant.task() {
        TaskKind::Parity => parse_parity(&tokens[1..], variant, vocab)?,
        TaskKind::Addition => parse_addition(&tokens[1..], variant, vocab)?,
    };
    let instance = TaskInstance {
        problem,
        mnemonics,
        seed: 0,
    };
    let again = render(&instance, variant, vocab).map_err(|e| parse_err(format!("inconsistent example: {e}")))?;
    if again.tokens != tokens {
        return Err(parse_err("example is not a valid rendering of its content"));
    }
    Ok(instance)
}

fn parse_parity(body: &[TokenId], variant: &FormatVariant, vocab: &Vocab) -> Result<(Problem, Vec<TokenId>)> {
    let letters = variant.family == Family::Numeric;
    let bit = |t: TokenId| vocab.bit_value(t, letters);
    if variant.family == Family::Interleaved {
        let bits = body
            .iter()
            .step_by(2)
            .map(|&t| bit(t).ok_or_else(|| parse_err("expected a bit")))
            .collect::<Result<Vec<_>>>()?;
        return Ok((Problem::Parity(bits), Vec::new()));
    }
    let eos = body
        .iter()
        .position(|&t| t == vocab.eos())
        .ok_or_else(|| parse_err("missing `===`"))?;
    let mut bits = Vec::new();
    let mut mnemonics = Vec::new();
    for &t in &body[..eos] {
        match bit(t) {
            Some(b) => bits.push(b),
            None => mnemonics.push(t),
        }
    }
    if variant.family == Family::NonAligned {
        mnemonics.extend(body[eos + 1..].iter().filter(|&&t| bit(t).is_none()));
    }
    Ok((Problem::Parity(bits), mnemonics))
}

fn parse_addition(body: &[TokenId], variant: &FormatVariant, vocab: &Vocab) -> Result<(Problem, Vec<TokenId>)> {
    let find = |t: TokenId, what: &str| body.iter().position(|&x| x == t).ok_or_else(|| parse_err(format!("missing `{what}`")));
    let plus = find(vocab.plus(), "+")?;
    let eos = find(vocab.eos(), "===")?;
    if plus > eos {
        return Err(parse_err("`+` after `===`"));
    }
    let sides = [&body[..plus], &body[plus + 1..eos]];
    let digits_of = |seg: &[TokenId]| -> Result<Vec<u8>> {
        seg.iter()
            .map(|&t| vocab.digit_value(t).ok_or_else(|| parse_err("expected a digit")))
            .collect()
    };
    let strip = |mut d: Vec<u8>| {
        let lead = d.iter().take_while(|&&x| x == 0).count().min(d.len().saturating_sub(1));
        d.drain(..lead);
        d
    };
    let pairs = |seg: &[TokenId]| -> Result<(Vec<TokenId>, Vec<u8>)> {
        if seg.len() % 2 != 0 {
            return Err(parse_err("unpaired mnemonic"));
        }
        let m = seg.iter().step_by(2).copied().collect();
        let d = digits_of(&seg.iter().skip(1).step_by(2).copied().collect::<Vec<_>>())?;
        Ok((m, d))
    };
    match variant.family {
        Family::AddPlain | Family::AddPlainPadded => {
            let a = strip(digits_of(sides[0])?);
            let b = strip(digits_of(sides[1])?);
            Ok((Problem::Addition { a, b }, Vec::new()))
        }
        Family::AddNonAligned => {
            let (ma, a) = pairs(sides[0])?;
            let (mb, b) = pairs(sides[1])?;
            Ok((Problem::Addition { a, b }, [ma, mb].concat()))
        }
        _ => {
            let mut ops = Vec::new();
            let mut carry = None;
            for seg in sides {
                let (last, rest) = seg.split_last().ok_or_else(|| parse_err("empty operand"))?;
                let (m, d) = pairs(rest)?;
                if carry.is_some_and(|c| c != *last) {
                    return Err(parse_err("carry mnemonics differ"));
                }
                carry = Some(*last);
                ops.push((m, d));
            }
            let l = ops[0].1.len().max(ops[1].1.len());
            let mut slots = vec![None; l + 1];
            slots[l] = carry;
            for (m, d) in &ops {
                for (i, &t) in m.iter().enumerate() {
                    let idx = (l + i).checked_sub(d.len()).ok_or_else(|| parse_err("operand too long"))?;
                    if slots[idx].is_some_and(|s| s != t) {
                        return Err(parse_err("misaligned mnemonics"));
                    }
                    slots[idx] = Some(t);
                }
            }
            let mnemonics = slots
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| parse_err("unassigned mnemonic slot"))?;
            let [(_, a), (_, b)] = <[_; 2]>::try_from(ops).unwrap();
            Ok((
                Problem::Addition {
                    a: strip(a),
                    b: strip(b),
                },
                mnemonics,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_text_round_trip() {
        for s in [
            "none",
            "standard",
            "interleaved",
            "mnemonic",
            "mnemonic+forced",
            "mnemonic@integer",
            "numeric+forced",
            "cyclic",
            "cyclic:3",
            "interval:2",
            "add_digit_aligned+forced",
            "add_non_aligned",
        ] {
            let v: FormatVariant = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        for bad in ["interleaved+forced", "interval", "interval:0", "standard:2", "mnemonic@color", "xyz"] {
            assert!(bad.parse::<FormatVariant>().is_err(), "{bad}");
        }
    }
}
