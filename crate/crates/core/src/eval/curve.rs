use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::decode::{score_examples, Decoder, ExampleScore};
use crate::error::{Error, Result};
use crate::tasks::instance::{example_seed, mix64, sample_problem};
use crate::tasks::{instantiate, FormatVariant, FormattedExample, TaskKind, Vocab};

/// Keeps evaluation instance seeds away from every training seed.
const EVAL_DOMAIN: u64 = 0x6576_616c_5f64_6f6d;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub length: usize,
    pub n: usize,
    pub exact_match: f64,
    pub per_token: f64,
    pub overflow: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LengthAccuracyCurve {
    pub task: TaskKind,
    pub variant: FormatVariant,
    pub model_id: String,
    pub rows: Vec<CurveRow>,
}

impl LengthAccuracyCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("length,n,exact_match,per_token,overflow_count\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:.6},{:.6},{}", r.length, r.n, r.exact_match, r.per_token, r.overflow);
        }
        s
    }

    pub fn row(&self, length: usize) -> Option<&CurveRow> {
        self.rows.iter().find(|r| r.length == length)
    }

    /// Mean exact match over rows whose length falls in `lo..=hi`.
    pub fn mean_exact(&self, lo: usize, hi: usize) -> f64 {
        let rows: Vec<_> = self.rows.iter().filter(|r| (lo..=hi).contains(&r.length)).collect();
        rows.iter().map(|r| r.exact_match).sum::<f64>() / rows.len().max(1) as f64
    }
}

/// Parse a `length,n,exact_match,per_token,overflow_count` file.
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines();
    if lines.next() != Some("length,n,exact_match,per_token,overflow_count") {
        return Err(Error::Parse("unexpected curve header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || Error::Parse(format!("bad curve row `{l}`"));
            if f.len() != 5 {
                return Err(bad());
            }
            Ok(CurveRow {
                length: f[0].parse().map_err(|_| bad())?,
                n: f[1].parse().map_err(|_| bad())?,
                exact_match: f[2].parse().map_err(|_| bad())?,
                per_token: f[3].parse().map_err(|_| bad())?,
                overflow: f[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Fresh evaluation instances: `n_per_length` per length, drawn with
/// replacement from a seed domain disjoint from dataset generation.
pub fn eval_examples(variant: &FormatVariant, lengths: &[usize], n_per_length: usize, seed: u64, vocab: &Vocab) -> Result<Vec<FormattedExample>> {
    let base = mix64(seed ^ EVAL_DOMAIN);
    let mut out = Vec::with_capacity(lengths.len() * n_per_length);
    for &len in lengths {
        for i in 0..n_per_length {
            let s = example_seed(base, len, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let problem = sample_problem(variant.task(), len, &mut rng)?;
            out.push(instantiate(problem, variant, vocab, mix64(s))?);
        }
    }
    Ok(out)
}

/// Aggregate per-example scores into rows sorted by length.
pub fn aggregate(scores: &[ExampleScore]) -> Vec<CurveRow> {
    let mut by_len: BTreeMap<usize, Vec<&ExampleScore>> = BTreeMap::new();
    for s in scores {
        by_len.entry(s.length).or_default().push(s);
    }
    by_len
        .into_iter()
        .map(|(length, v)| {
            let n = v.len();
            CurveRow {
                length,
                n,
                exact_match: v.iter().filter(|s| s.exact).count() as f64 / n as f64,
                per_token: v.iter().map(|s| s.per_token).sum::<f64>() / n as f64,
                overflow: v.iter().filter(|s| s.overflow).count(),
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn length_curve(
    decoder: &dyn Decoder,
    variant: &FormatVariant,
    lengths: &[usize],
    n_per_length: usize,
    seed: u64,
    vocab: &Vocab,
    threads: usize,
    model_id: &str,
) -> Result<LengthAccuracyCurve> {
    if lengths.is_empty() {
        return Err(Error::Config("no evaluation lengths".into()));
    }
    if n_per_length == 0 {
        return Err(Error::Config("n_per_length must be positive".into()));
    }
    let examples = eval_examples(variant, lengths, n_per_length, seed, vocab)?;
    let scores = score_examples(decoder, &examples, threads)?;
    Ok(LengthAccuracyCurve {
        task: variant.task(),
        variant: *variant,
        model_id: model_id.to_string(),
        rows: aggregate(&scores),
    })
}
