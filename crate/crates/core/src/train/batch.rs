use crate::error::{Error, Result};
use crate::tasks::{FormattedExample, TokenId};

/// Right-padded batch, row-major `batch × width`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub tokens: Vec<TokenId>,
    pub target_mask: Vec<bool>,
    pub lens: Vec<usize>,
    pub batch: usize,
    pub width: usize,
}

impl Batch {
    pub fn num_targets(&self) -> usize {
        self.target_mask.iter().filter(|&&m| m).count()
    }
}

/// Pad to the longest example. Pad positions are never targets, and the
/// per-row lengths keep them out of attention.
pub fn assemble_batch(examples: &[&FormattedExample], pad: TokenId, max_seq_len: usize) -> Result<Batch> {
    if examples.is_empty() {
        return Err(Error::Domain("empty batch".into()));
    }
    if let Some(ex) = examples.iter().find(|e| e.len() > max_seq_len) {
        return Err(Error::Length {
            len: ex.len(),
            max_seq_len,
        });
    }
    let width = examples.iter().map(|e| e.len()).max().unwrap_or(0);
    let mut tokens = Vec::with_capacity(width * examples.len());
    let mut target_mask = Vec::with_capacity(width * examples.len());
    for ex in examples {
        tokens.extend_from_slice(&ex.tokens);
        tokens.resize(tokens.len() + width - ex.len(), pad);
        target_mask.extend_from_slice(&ex.target_mask);
        target_mask.resize(target_mask.len() + width - ex.len(), false);
    }
    Ok(Batch {
        tokens,
        target_mask,
        lens: examples.iter().map(|e| e.len()).collect(),
        batch: examples.len(),
        width,
    })
}
