use std::collections::hash_map::{DefaultHasher, Entry};
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::math::Scalar;
use crate::model::{Session, Transformer};
use crate::tasks::{FormattedExample, TokenId};

/// Something that can propose the next token for a context.
pub trait Decoder: Sync {
    fn session(&self) -> Box<dyn DecodeSession + '_>;
}

/// Per-example decoding state. Contexts passed to successive calls extend
/// each other, which lets implementations reuse work.
pub trait DecodeSession {
    fn predict(&mut self, context: &[TokenId]) -> Result<TokenId>;
}

struct ModelSession<'m, F>(Session<'m, F>);

impl<F: Scalar> DecodeSession for ModelSession<'_, F> {
    fn predict(&mut self, context: &[TokenId]) -> Result<TokenId> {
        self.0.sync(context)?;
        self.0.greedy()
    }
}

impl<F: Scalar> Decoder for Transformer<F> {
    fn session(&self) -> Box<dyn DecodeSession + '_> {
        Box::new(ModelSession(Session::new(self)))
    }
}

fn context_key(context: &[TokenId]) -> u64 {
    let mut h = DefaultHasher::new();
    context.hash(&mut h);
    h.finish()
}

/// Answers every target from a table of known examples.
#[derive(Debug, Default)]
pub struct OracleStub {
    table: HashMap<u64, TokenId>,
}

impl OracleStub {
    pub fn new<'a>(examples: impl IntoIterator<Item = &'a FormattedExample>) -> Result<Self> {
        let mut stub = OracleStub::default();
        for ex in examples {
            stub.add(ex)?;
        }
        Ok(stub)
    }

    pub fn add(&mut self, ex: &FormattedExample) -> Result<()> {
        for p in ex.targets() {
            match self.table.entry(context_key(&ex.tokens[..p])) {
                Entry::Vacant(v) => {
                    v.insert(ex.tokens[p]);
                }
                Entry::Occupied(o) if *o.get() != ex.tokens[p] => {
                    return Err(Error::Domain("two examples disagree on the same context".into()));
                }
                Entry::Occupied(_) => {}
            }
        }
        Ok(())
    }
}

impl Decoder for OracleStub {
    fn session(&self) -> Box<dyn DecodeSession + '_> {
        Box::new(|ctx: &[TokenId]| {
            self.table
                .get(&context_key(ctx))
                .copied()
                .ok_or_else(|| Error::Domain("oracle stub has no entry for this context".into()))
        })
    }
}

impl<T: FnMut(&[TokenId]) -> Result<TokenId>> DecodeSession for T {
    fn predict(&mut self, context: &[TokenId]) -> Result<TokenId> {
        self(context)
    }
}

/// Always emits the same token.
#[derive(Clone, Copy, Debug)]
pub struct ConstantStub(pub TokenId);

impl Decoder for ConstantStub {
    fn session(&self) -> Box<dyn DecodeSession + '_> {
        let t = self.0;
        Box::new(move |_: &[TokenId]| Ok(t))
    }
}

/// Wraps a decoder and records every context it is asked about.
pub struct SpyStub<D> {
    pub inner: D,
    pub seen: Mutex<Vec<Vec<TokenId>>>,
}

impl<D: Decoder> SpyStub<D> {
    pub fn new(inner: D) -> Self {
        SpyStub {
            inner,
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn take(&self) -> Vec<Vec<TokenId>> {
        std::mem::take(&mut self.seen.lock().unwrap())
    }
}

impl<D: Decoder> Decoder for SpyStub<D> {
    fn session(&self) -> Box<dyn DecodeSession + '_> {
        let mut inner = self.inner.session();
        Box::new(move |ctx: &[TokenId]| {
            self.seen.lock().unwrap().push(ctx.to_vec());
            inner.predict(ctx)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodeOutcome {
    /// One prediction per target position, in order.
    Completed(Vec<TokenId>),
    /// A learned-position model ran past its table.
    Overflow { position: usize, max_seq_len: usize },
}

impl DecodeOutcome {
    pub fn predictions(&self) -> Option<&[TokenId]> {
        match self {
            DecodeOutcome::Completed(p) => Some(p),
            DecodeOutcome::Overflow { .. } => None,
        }
    }
}

/// Walk the example from its prompt: targets come from the decoder (and are
/// fed back), every other position gets the ground-truth token.
pub fn env_forced_decode(decoder: &dyn Decoder, ex: &FormattedExample) -> Result<DecodeOutcome> {
    let mut session = decoder.session();
    let mut context = ex.tokens[..ex.prompt_len].to_vec();
    let mut preds = Vec::with_capacity(ex.num_targets());
    for p in ex.prompt_len..ex.len() {
        if ex.target_mask[p] {
            match session.predict(&context) {
                Ok(t) => {
                    preds.push(t);
                    context.push(t);
                }
                Err(Error::PositionOverflow { position, max_seq_len }) => {
                    return Ok(DecodeOutcome::Overflow { position, max_seq_len });
                }
                Err(e) => return Err(e),
            }
        } else {
            context.push(ex.tokens[p]);
        }
    }
    Ok(DecodeOutcome::Completed(preds))
}

/// The example's tokens with targets replaced by `predictions`.
pub fn completed_context(ex: &FormattedExample, predictions: &[TokenId]) -> Result<Vec<TokenId>> {
    check_count(ex, predictions)?;
    let mut out = ex.tokens.clone();
    for (p, &t) in ex.targets().zip(predictions) {
        out[p] = t;
    }
    Ok(out)
}

fn check_count(ex: &FormattedExample, predictions: &[TokenId]) -> Result<()> {
    let targets = ex.num_targets();
    if predictions.len() != targets {
        return Err(Error::Scoring {
            predicted: predictions.len(),
            targets,
        });
    }
    Ok(())
}

fn correct_count(ex: &FormattedExample, predictions: &[TokenId]) -> Result<usize> {
    check_count(ex, predictions)?;
    Ok(ex.targets().zip(predictions).filter(|(p, &t)| ex.tokens[*p] == t).count())
}

pub fn exact_match(ex: &FormattedExample, predictions: &[TokenId]) -> Result<bool> {
    Ok(correct_count(ex, predictions)? == predictions.len())
}

pub fn per_token_accuracy(ex: &FormattedExample, predictions: &[TokenId]) -> Result<f64> {
    let c = correct_count(ex, predictions)?;
    Ok(if predictions.is_empty() { 1.0 } else { c as f64 / predictions.len() as f64 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExampleScore {
    pub length: usize,
    pub exact: bool,
    pub per_token: f64,
    pub overflow: bool,
}

pub fn score_example(decoder: &dyn Decoder, ex: &FormattedExample) -> Result<ExampleScore> {
    Ok(match env_forced_decode(decoder, ex)? {
        DecodeOutcome::Completed(p) => ExampleScore {
            length: ex.length(),
            exact: exact_match(ex, &p)?,
            per_token: per_token_accuracy(ex, &p)?,
            overflow: false,
        },
        DecodeOutcome::Overflow { .. } => ExampleScore {
            length: ex.length(),
            exact: false,
            per_token: 0.0,
            overflow: true,
        },
    })
}

/// Score many examples, optionally on a private thread pool. Results keep input order.
pub fn score_examples(decoder: &dyn Decoder, examples: &[FormattedExample], threads: usize) -> Result<Vec<ExampleScore>> {
    if threads <= 1 {
        return examples.iter().map(|ex| score_example(decoder, ex)).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| examples.par_iter().map(|ex| score_example(decoder, ex)).collect())
}
