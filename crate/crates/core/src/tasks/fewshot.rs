use super::format::{render, FormatVariant, FormattedExample};
use super::instance::TaskInstance;
use super::vocab::{TokenId, Vocab, STATEMENT};
use crate::error::{Error, Result};

/// Problem statement, then `<sep>` before each complete demonstration, then
/// `<sep>` and the query up to where generation begins.
pub fn render_fewshot_prompt(
    examples: &[FormattedExample],
    query: &TaskInstance,
    variant: &FormatVariant,
    vocab: &Vocab,
) -> Result<Vec<TokenId>> {
    let mut out: Vec<TokenId> = STATEMENT
        .iter()
        .map(|w| vocab.id(w).ok_or_else(|| Error::Domain(format!("statement token `{w}` missing"))))
        .collect::<Result<_>>()?;
    for ex in examples {
        out.push(vocab.separator());
        out.extend_from_slice(&ex.tokens);
    }
    out.push(vocab.separator());
    out.extend_from_slice(render(query, variant, vocab)?.prompt());
    Ok(out)
}

/// Split a prompt back into its demonstrations (token runs between separators).
pub fn demonstrations(prompt: &[TokenId], vocab: &Vocab) -> Vec<Vec<TokenId>> {
    let mut parts = prompt.split(|&t| t == vocab.separator()).skip(1).map(|p| p.to_vec()).collect::<Vec<_>>();
    parts.pop();
    parts
}
