//! Incremental inference with a key/value cache. Used for greedy decoding,
//! where re-running the whole prefix for every generated token would be
//! quadratic in the sequence length.

use super::positional::{linear_bias_slopes, PosScheme, RotaryTable, ROTARY_THETA_BASE};
use super::transformer::{Layout, Transformer, LN_EPS};
use crate::error::{Error, Result};
use crate::math::kernels::{self, dot, gemm_into};
use crate::math::Scalar;

pub struct Session<'m, F> {
    model: &'m Transformer<F>,
    layout: Layout,
    slopes: Vec<F>,
    rotary: Option<RotaryTable<F>>,
    /// Per layer, rotated keys then values, `[position × d_model]`.
    keys: Vec<Vec<F>>,
    values: Vec<Vec<F>>,
    fed: Vec<u32>,
    hidden: Vec<F>,
}

impl<'m, F: Scalar> Session<'m, F> {
    pub fn new(model: &'m Transformer<F>) -> Self {
        let cfg = &model.config;
        let slopes = if cfg.pos_scheme == PosScheme::LinearBias {
            linear_bias_slopes(cfg.n_heads)
                .into_iter()
                .map(F::lit)
                .collect()
        } else {
            vec![]
        };
        Session {
            model,
            layout: model.layout(),
            slopes,
            rotary: None,
            keys: vec![Vec::new(); cfg.n_layers],
            values: vec![Vec::new(); cfg.n_layers],
            fed: Vec::new(),
            hidden: vec![F::zero(); cfg.d_model],
        }
    }

    /// Tokens consumed so far.
    pub fn context(&self) -> &[u32] {
        &self.fed
    }

    pub fn reset(&mut self) {
        for k in &mut self.keys {
            k.clear();
        }
        for v in &mut self.values {
            v.clear();
        }
        self.fed.clear();
    }

    /// Bring the cache in line with `context`, reusing the longest shared prefix.
    pub fn sync(&mut self, context: &[u32]) -> Result<()> {
        if !context.starts_with(&self.fed) {
            self.reset();
        }
        for &tok in &context[self.fed.len()..] {
            self.feed(tok)?;
        }
        Ok(())
    }

    fn ensure_rotary(&mut self, pos: usize) {
        let dh = self.model.config.head_dim();
        let stale = self.rotary.as_ref().is_none_or(|t| t.positions() <= pos);
        if stale {
            let size = (pos + 1).next_power_of_two().max(64);
            self.rotary = Some(RotaryTable::new(size, dh, ROTARY_THETA_BASE));
        }
    }

    /// Append one token and run it through every layer.
    pub fn feed(&mut self, token: u32) -> Result<()> {
        let cfg = self.model.config;
        if token as usize >= cfg.vocab_size {
            return Err(Error::Vocabulary {
                id: token,
                vocab_size: cfg.vocab_size,
            });
        }
        let pos = self.fed.len();
        if cfg.pos_scheme == PosScheme::Learned && pos >= cfg.max_seq_len {
            return Err(Error::PositionOverflow {
                position: pos,
                max_seq_len: cfg.max_seq_len,
            });
        }
        let (d, f, heads, dh) = (cfg.d_model, cfg.d_ff, cfg.n_heads, cfg.head_dim());
        let params = &self.model.params;
        let eps = F::lit(LN_EPS);
        let mut x: Vec<F> = params.get(self.layout.tok_emb).row(token as usize).to_vec();
        if let Some(pe) = self.layout.pos_emb {
            for (xi, &p) in x.iter_mut().zip(params.get(pe).row(pos)) {
                *xi += p;
            }
        }
        let scale = F::one() / F::from_usize(dh).unwrap().sqrt();
        let mut h = vec![F::zero(); d];
        let mut qkv = vec![F::zero(); 3 * d];
        let mut att = vec![F::zero(); d];
        let mut o = vec![F::zero(); d];
        let mut ff = vec![F::zero(); f];
        let mut scores = Vec::with_capacity(pos + 1);
        if cfg.pos_scheme == PosScheme::Rotary {
            self.ensure_rotary(pos);
        }
        for (li, l) in self.layout.layers.iter().enumerate() {
            kernels::layer_norm_row(&x, params.get(l.ln1_g).data(), params.get(l.ln1_b).data(), eps, &mut h);
            gemm_into(&h, params.get(l.wqkv).data(), &mut qkv, 1, d, 3 * d, false, false);
            for (q, &b) in qkv.iter_mut().zip(params.get(l.bqkv).data()) {
                *q += b;
            }
            if let Some(table) = &self.rotary {
                for hd in 0..heads {
                    table.rotate(&mut qkv[hd * dh..(hd + 1) * dh], pos, false);
                    table.rotate(&mut qkv[d + hd * dh..d + (hd + 1) * dh], pos, false);
                }
            }
            self.keys[li].extend_from_slice(&qkv[d..2 * d]);
            self.values[li].extend_from_slice(&qkv[2 * d..]);
            let (keys, values) = (&self.keys[li], &self.values[li]);
            att.iter_mut().for_each(|a| *a = F::zero());
            for hd in 0..heads {
                let q = &qkv[hd * dh..(hd + 1) * dh];
                scores.clear();
                for j in 0..=pos {
                    let mut s = dot(q, &keys[j * d + hd * dh..j * d + (hd + 1) * dh]) * scale;
                    if let Some(&m) = self.slopes.get(hd) {
                        s -= m * F::from_usize(pos - j).unwrap();
                    }
                    scores.push(s);
                }
                kernels::softmax_in_place(&mut scores);
                let out = &mut att[hd * dh..(hd + 1) * dh];
                for (j, &p) in scores.iter().enumerate() {
                    for (a, &v) in out.iter_mut().zip(&values[j * d + hd * dh..j * d + (hd + 1) * dh]) {
                        *a += p * v;
                    }
                }
            }
            gemm_into(&att, params.get(l.wo).data(), &mut o, 1, d, d, false, false);
            for ((xi, &oi), &b) in x.iter_mut().zip(&o).zip(params.get(l.bo).data()) {
                *xi += oi + b;
            }
            kernels::layer_norm_row(&x, params.get(l.ln2_g).data(), params.get(l.ln2_b).data(), eps, &mut h);
            gemm_into(&h, params.get(l.w1).data(), &mut ff, 1, d, f, false, false);
            for (v, &b) in ff.iter_mut().zip(params.get(l.b1).data()) {
                *v = kernels::gelu(*v + b);
            }
            gemm_into(&ff, params.get(l.w2).data(), &mut o, 1, f, d, false, false);
            for ((xi, &oi), &b) in x.iter_mut().zip(&o).zip(params.get(l.b2).data()) {
                *xi += oi + b;
            }
        }
        kernels::layer_norm_row(
            &x,
            params.get(self.layout.lnf_g).data(),
            params.get(self.layout.lnf_b).data(),
            eps,
            &mut self.hidden,
        );
        self.fed.push(token);
        Ok(())
    }

    /// Logits for the token after the current context.
    pub fn logits(&self) -> Result<Vec<F>> {
        if self.fed.is_empty() {
            return Err(Error::Domain("no context fed to the session".into()));
        }
        let cfg = &self.model.config;
        let mut out = vec![F::zero(); cfg.vocab_size];
        gemm_into(
            &self.hidden,
            self.model.params.get(self.layout.tok_emb).data(),
            &mut out,
            1,
            cfg.d_model,
            cfg.vocab_size,
            true,
            false,
        );
        Ok(out)
    }

    pub fn greedy(&self) -> Result<u32> {
        Ok(kernels::argmax(&self.logits()?) as u32)
    }
}
