use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::format::{instantiate, FormatVariant, FormattedExample};
use super::instance::{example_seed, mix64, problem_count, sample_problem, Problem, TaskKind};
use super::vocab::{TokenId, Vocab};
use crate::error::{Error, Result};

/// Below this many candidates a length is enumerated instead of sampled.
const ENUMERATE_BELOW: u128 = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub variant: FormatVariant,
    pub lengths: Vec<usize>,
    /// Distinct problems per length, both splits together.
    pub per_length: usize,
    pub holdout_per_length: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn task(&self) -> TaskKind {
        self.variant.task()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub train: Vec<FormattedExample>,
    pub eval: Vec<FormattedExample>,
}

/// `per_length` distinct problems at a length, in a seed-determined order.
pub fn distinct_problems(kind: TaskKind, len: usize, count: usize, seed: u64) -> Result<Vec<Problem>> {
    let available = problem_count(kind, len);
    if count as u128 > available {
        return Err(Error::Count {
            length: len,
            requested: count,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(len as u64)));
    if available < ENUMERATE_BELOW && count as u128 * 2 > available {
        let mut all = enumerate(kind, len);
        all.shuffle(&mut rng);
        all.truncate(count);
        return Ok(all);
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = sample_problem(kind, len, &mut rng)?;
        if seen.insert(p.clone()) {
            out.push(p);
        }
    }
    Ok(out)
}

fn enumerate(kind: TaskKind, len: usize) -> Vec<Problem> {
    match kind {
        TaskKind::Parity => (0..1u64 << len)
            .map(|v| Problem::Parity((0..len).map(|i| (v >> (len - 1 - i)) as u8 & 1).collect()))
            .collect(),
        TaskKind::Addition => {
            let values = |max_len: usize| -> Vec<Vec<u8>> {
                (0..10u64.pow(max_len as u32))
                    .map(|v| v.to_string().bytes().map(|c| c - b'0').collect())
                    .collect()
            };
            let all = values(len);
            let mut out = Vec::new();
            for a in &all {
                for b in &all {
                    if a.len().max(b.len()) == len {
                        out.push(Problem::Addition { a: a.clone(), b: b.clone() });
                    }
                }
            }
            out
        }
    }
}

/// Build train and eval splits. The first `holdout_per_length` problems of
/// each length go to eval; problems are distinct within a length, so the
/// splits never share an example. Mnemonics are drawn per example from a
/// seed derived from `(seed, length, index)`.
pub fn build_dataset(spec: &DatasetSpec, vocab: &Vocab) -> Result<Dataset> {
    spec.variant.validate()?;
    if spec.per_length <= spec.holdout_per_length {
        return Err(Error::Config(format!(
            "per_length ({}) must exceed holdout_per_length ({})",
            spec.per_length, spec.holdout_per_length
        )));
    }
    let mut ds = Dataset::default();
    for &len in &spec.lengths {
        let problems = distinct_problems(spec.task(), len, spec.per_length, spec.seed)?;
        for (i, p) in problems.into_iter().enumerate() {
            let ex = instantiate(p, &spec.variant, vocab, example_seed(spec.seed, len, i))?;
            if i < spec.holdout_per_length {
                ds.eval.push(ex);
            } else {
                ds.train.push(ex);
            }
        }
    }
    Ok(ds)
}

/// One line: space-separated token strings, a tab, then the mask as 0/1.
pub fn example_to_line(ex: &FormattedExample, vocab: &Vocab) -> String {
    let mut line = vocab.render(&ex.tokens);
    line.push('\t');
    line.extend(ex.target_mask.iter().map(|&m| if m { '1' } else { '0' }));
    line
}

pub fn line_to_tokens(line: &str, vocab: &Vocab) -> Result<(Vec<TokenId>, Vec<bool>)> {
    let (text, mask) = line
        .split_once('\t')
        .ok_or_else(|| Error::Parse("expected `tokens<TAB>mask`".into()))?;
    let tokens = vocab.encode(text)?;
    let mask = mask
        .trim_end()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse(format!("mask character `{c}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if mask.len() != tokens.len() {
        return Err(Error::Parse(format!("{} tokens but {} mask bits", tokens.len(), mask.len())));
    }
    Ok((tokens, mask))
}

pub fn serialize_split(examples: &[FormattedExample], vocab: &Vocab) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&example_to_line(ex, vocab));
        out.push('\n');
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// `key = value` manifest describing a dataset.
pub fn manifest(spec: &DatasetSpec, ds: &Dataset, vocab: &Vocab) -> String {
    let mut m = String::new();
    let lengths: Vec<String> = spec.lengths.iter().map(|l| l.to_string()).collect();
    let pool = if spec.variant.family.samples_pool() {
        vocab.pool(spec.variant.pool).name
    } else {
        "fixed".into()
    };
    let _ = writeln!(m, "task = {}", spec.task());
    let _ = writeln!(m, "variant = {}", spec.variant);
    let _ = writeln!(m, "seed = {}", spec.seed);
    let _ = writeln!(m, "lengths = {}", lengths.join(","));
    let _ = writeln!(m, "per_length = {}", spec.per_length);
    let _ = writeln!(m, "holdout_per_length = {}", spec.holdout_per_length);
    let _ = writeln!(m, "pool = {pool}");
    let _ = writeln!(m, "vocab_size = {}", vocab.len());
    let _ = writeln!(m, "train_count = {}", ds.train.len());
    let _ = writeln!(m, "eval_count = {}", ds.eval.len());
    for &len in &spec.lengths {
        let count = |split: &[FormattedExample]| split.iter().filter(|e| e.length() == len).count();
        let _ = writeln!(m, "count.{len} = {} train, {} eval", count(&ds.train), count(&ds.eval));
    }
    let _ = writeln!(m, "train_sha256 = {}", sha256_hex(serialize_split(&ds.train, vocab).as_bytes()));
    let _ = writeln!(m, "eval_sha256 = {}", sha256_hex(serialize_split(&ds.eval, vocab).as_bytes()));
    m
}
