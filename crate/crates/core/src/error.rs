use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("{op} expects a rank-{expected} tensor, got shape {got:?}")]
    Rank {
        op: &'static str,
        expected: usize,
        got: Vec<usize>,
    },

    #[error("loss mask selects no positions")]
    EmptyMask,

    #[error("gradient buffers already populated; reset them before another backward pass")]
    GradientNotReset,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("token id {id} is outside the vocabulary of size {vocab_size}")]
    Vocabulary { id: u32, vocab_size: usize },

    #[error("position {position} exceeds the learned position table ({max_seq_len} entries)")]
    PositionOverflow { position: usize, max_seq_len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mnemonic pool `{pool}` has {available} tokens, {requested} requested")]
    PoolExhausted {
        pool: String,
        requested: usize,
        available: usize,
    },

    #[error("cannot draw {requested} distinct instances of length {length}: only {available} exist")]
    Count {
        length: usize,
        requested: usize,
        available: u128,
    },

    #[error("sequence of {len} tokens exceeds max_seq_len {max_seq_len}")]
    Length { len: usize, max_seq_len: usize },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("non-finite loss at step {step} (lr {lr:e}, grad norm {grad_norm:e})")]
    NonFinite { step: usize, lr: f64, grad_norm: f64 },

    #[error("scoring error: {predicted} predictions for {targets} targets")]
    Scoring { predicted: usize, targets: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Usage and configuration problems map to exit code 2, everything else to 1.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse(_))
    }
}
