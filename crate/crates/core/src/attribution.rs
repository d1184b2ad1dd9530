//! Gradient×input attribution over the context window, one column per
//! target step.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::math::kernels::argmax;
use crate::math::{Scalar, Tape, Var};
use crate::model::Transformer;
use crate::plot::{gray_level, heatmap_svg};
use crate::tasks::{FormattedExample, TokenId, Vocab};

/// A differentiable map from tokens to next-token logits that exposes its
/// token-embedding activations.
pub trait AttributionTarget<F: Scalar> {
    /// Record a forward pass; returns `(embeddings [T×d], logits [T×V])`.
    fn record(&self, tape: &mut Tape<F>, tokens: &[TokenId]) -> Result<(Var, Var)>;
}

impl<F: Scalar> AttributionTarget<F> for Transformer<F> {
    fn record(&self, tape: &mut Tape<F>, tokens: &[TokenId]) -> Result<(Var, Var)> {
        let t = tokens.len();
        let fwd = self.forward_tape(tape, tokens, 1, t, &[t])?;
        let logits = self.project(tape, &fwd, fwd.hidden)?;
        Ok((fwd.embeddings, logits))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    /// `|Σ_k grad_k · emb_k|` per position.
    SignedSum,
    /// `‖grad ⊙ emb‖₂` per position.
    L2,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::SignedSum => "signed_sum",
            Aggregation::L2 => "l2",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributionMap {
    /// `rows × cols`, non-negative, each column max-normalised.
    pub values: Vec<Vec<f64>>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub aggregation: Aggregation,
}

impl AttributionMap {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, |r| r.len())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r][c]
    }

    /// Row holding each column's maximum (`None` for all-zero columns).
    pub fn column_argmax(&self) -> Vec<Option<usize>> {
        (0..self.cols())
            .map(|c| {
                let col: Vec<f64> = self.values.iter().map(|r| r[c]).collect();
                let best = argmax(&col);
                (col[best] > 0.0).then_some(best)
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("token");
        for c in &self.col_labels {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for (label, row) in self.row_labels.iter().zip(&self.values) {
            s.push_str(label);
            for v in row {
                let _ = write!(s, ",{v:.9}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str, aggregation: Aggregation) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty attribution csv".into()))?;
        let col_labels: Vec<String> = header.split(',').skip(1).map(String::from).collect();
        let mut row_labels = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let mut f = line.split(',');
            row_labels.push(f.next().unwrap_or_default().to_string());
            let row = f
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad value `{v}`"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != col_labels.len() {
                return Err(Error::Parse("ragged attribution csv".into()));
            }
            values.push(row);
        }
        Ok(AttributionMap {
            values,
            row_labels,
            col_labels,
            aggregation,
        })
    }

    /// Plain PGM (P2), one pixel per cell, darker for larger values.
    pub fn to_pgm(&self) -> String {
        let mut s = format!("P2\n{} {}\n255\n", self.cols(), self.rows());
        for row in &self.values {
            let px: Vec<String> = row.iter().map(|&v| gray_level(v).to_string()).collect();
            s.push_str(&px.join(" "));
            s.push('\n');
        }
        s
    }
}

fn normalize_columns(values: &mut [Vec<f64>]) {
    let cols = values.first().map_or(0, |r| r.len());
    for c in 0..cols {
        let max = values.iter().map(|r| r[c]).fold(0.0, f64::max);
        if max > 0.0 {
            for r in values.iter_mut() {
                r[c] /= max;
            }
        }
    }
}

/// Both aggregations for `context`, the example's tokens with every target
/// filled in (by decoding or ground truth). Column `t` explains the logit of
/// the argmax token at the position that produces the t-th target.
pub fn grad_x_input_maps<F: Scalar>(
    target: &dyn AttributionTarget<F>,
    example: &FormattedExample,
    context: &[TokenId],
    vocab: &Vocab,
) -> Result<(AttributionMap, AttributionMap)> {
    if context.len() != example.len() {
        return Err(Error::Dimension {
            op: "attribution",
            detail: format!("context has {} tokens, example {}", context.len(), example.len()),
        });
    }
    let mut tape = Tape::new();
    let (emb, logits) = target.record(&mut tape, context)?;
    let (t_len, v) = tape.value(logits).dims2("attribution")?;
    let d = tape.value(emb).dims2("attribution")?.1;
    let emb_vals: Vec<f64> = tape.value(emb).data().iter().map(|x| x.to_f64().unwrap_or(0.0)).collect();
    let steps: Vec<usize> = example.targets().collect();
    let mut signed = vec![vec![0.0; steps.len()]; t_len];
    let mut l2 = vec![vec![0.0; steps.len()]; t_len];
    for (c, &p) in steps.iter().enumerate() {
        let row = p - 1;
        let lv = &tape.value(logits).data()[row * v..(row + 1) * v];
        let mut seed = vec![F::zero(); t_len * v];
        seed[row * v + argmax(lv)] = F::one();
        let grads = tape.backward_seeded(logits, seed)?;
        let g = grads.get_or_zeros(emb, t_len * d);
        for r in 0..t_len {
            let (mut s, mut q) = (0.0, 0.0);
            for k in 0..d {
                let x = g[r * d + k].to_f64().unwrap_or(0.0) * emb_vals[r * d + k];
                s += x;
                q += x * x;
            }
            signed[r][c] = s.abs();
            l2[r][c] = q.sqrt();
        }
    }
    normalize_columns(&mut signed);
    normalize_columns(&mut l2);
    let row_labels: Vec<String> = context.iter().map(|&t| vocab.token(t).to_string()).collect();
    let col_labels: Vec<String> = (1..=steps.len()).map(|i| i.to_string()).collect();
    let make = |values, aggregation| AttributionMap {
        values,
        row_labels: row_labels.clone(),
        col_labels: col_labels.clone(),
        aggregation,
    };
    Ok((make(signed, Aggregation::SignedSum), make(l2, Aggregation::L2)))
}

pub fn grad_x_input_map<F: Scalar>(
    target: &dyn AttributionTarget<F>,
    example: &FormattedExample,
    context: &[TokenId],
    vocab: &Vocab,
) -> Result<AttributionMap> {
    Ok(grad_x_input_maps(target, example, context, vocab)?.0)
}

/// Write `<stem>.csv`, `<stem>.pgm` and `<stem>.svg` into `dir`.
pub fn export_heatmap(map: &AttributionMap, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let title = format!("gradient x input ({})", map.aggregation.name());
    let files = [
        (format!("{stem}.csv"), map.to_csv()),
        (format!("{stem}.pgm"), map.to_pgm()),
        (format!("{stem}.svg"), heatmap_svg(&map.values, &map.row_labels, &map.col_labels, &title)),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalisation_handles_zero_columns() {
        let mut v = vec![vec![0.0, 2.0], vec![0.0, 4.0]];
        normalize_columns(&mut v);
        assert_eq!(v, vec![vec![0.0, 0.5], vec![0.0, 1.0]]);
    }

    #[test]
    fn csv_round_trip() {
        let m = AttributionMap {
            values: vec![vec![1.0, 0.25], vec![0.125, 1.0]],
            row_labels: vec![">>>".into(), "1".into()],
            col_labels: vec!["1".into(), "2".into()],
            aggregation: Aggregation::L2,
        };
        assert_eq!(AttributionMap::from_csv(&m.to_csv(), Aggregation::L2).unwrap(), m);
        assert!(m.to_pgm().starts_with("P2\n2 2\n255\n0 191\n"));
    }
}
