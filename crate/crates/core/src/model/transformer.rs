use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::positional::{linear_bias_slopes, PosScheme, RotaryTable, ROTARY_THETA_BASE};
use crate::error::{Error, Result};
use crate::math::{AttentionPositions, AttentionSpec, ParamStore, Scalar, Tape, Tensor, Var};

pub const LN_EPS: f64 = 1e-5;
const INIT_STD: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub pos_scheme: PosScheme,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_layers: 2,
            n_heads: 4,
            d_model: 128,
            d_ff: 512,
            vocab_size: 64,
            max_seq_len: 512,
            pos_scheme: PosScheme::LinearBias,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_model", self.d_model),
            ("d_ff", self.d_ff),
            ("vocab_size", self.vocab_size),
            ("max_seq_len", self.max_seq_len),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.pos_scheme == PosScheme::Rotary && self.head_dim() % 2 != 0 {
            return Err(Error::Config(format!(
                "rotary embedding needs an even head dimension, got {}",
                self.head_dim()
            )));
        }
        Ok(())
    }
}

/// Indices of each parameter tensor inside the store.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub tok_emb: usize,
    pub pos_emb: Option<usize>,
    pub layers: Vec<LayerLayout>,
    pub lnf_g: usize,
    pub lnf_b: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct LayerLayout {
    pub ln1_g: usize,
    pub ln1_b: usize,
    pub wqkv: usize,
    pub bqkv: usize,
    pub wo: usize,
    pub bo: usize,
    pub ln2_g: usize,
    pub ln2_b: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

/// Parameter shapes in traversal order; the single source of truth for
/// initialisation, checkpoints and the layout.
pub(crate) fn param_shapes(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let (d, f) = (config.d_model, config.d_ff);
    let mut shapes = vec![("tok_emb".to_string(), vec![config.vocab_size, d])];
    if config.pos_scheme == PosScheme::Learned {
        shapes.push(("pos_emb".into(), vec![config.max_seq_len, d]));
    }
    for l in 0..config.n_layers {
        let p = |n: &str| format!("layer{l}.{n}");
        shapes.extend([
            (p("ln1.gamma"), vec![d]),
            (p("ln1.beta"), vec![d]),
            (p("attn.wqkv"), vec![d, 3 * d]),
            (p("attn.bqkv"), vec![3 * d]),
            (p("attn.wo"), vec![d, d]),
            (p("attn.bo"), vec![d]),
            (p("ln2.gamma"), vec![d]),
            (p("ln2.beta"), vec![d]),
            (p("ff.w1"), vec![d, f]),
            (p("ff.b1"), vec![f]),
            (p("ff.w2"), vec![f, d]),
            (p("ff.b2"), vec![d]),
        ]);
    }
    shapes.push(("ln_f.gamma".into(), vec![d]));
    shapes.push(("ln_f.beta".into(), vec![d]));
    shapes
}

impl Layout {
    pub fn for_config(config: &ModelConfig) -> Self {
        let mut next = 0..;
        let mut take = || next.next().unwrap();
        let tok_emb = take();
        let pos_emb = (config.pos_scheme == PosScheme::Learned).then(&mut take);
        let layers = (0..config.n_layers)
            .map(|_| LayerLayout {
                ln1_g: take(),
                ln1_b: take(),
                wqkv: take(),
                bqkv: take(),
                wo: take(),
                bo: take(),
                ln2_g: take(),
                ln2_b: take(),
                w1: take(),
                b1: take(),
                w2: take(),
                b2: take(),
            })
            .collect();
        Layout {
            tok_emb,
            pos_emb,
            layers,
            lnf_g: take(),
            lnf_b: take(),
        }
    }
}

/// Decoder-only transformer: pre-norm blocks, GELU feed-forward, output
/// projection tied to the token embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct Transformer<F> {
    pub config: ModelConfig,
    pub params: ParamStore<F>,
}

pub type TransformerWeights<F> = Transformer<F>;

/// Seeded initialisation: N(0, 0.02) matrices and embeddings, residual output
/// projections scaled by `1/sqrt(2·n_layers)`, unit LayerNorm gains, zero biases.
pub fn init_model<F: Scalar>(config: &ModelConfig) -> Result<Transformer<F>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    let resid_scale = 1.0 / (2.0 * config.n_layers as f64).sqrt();
    let mut params = ParamStore::new();
    for (name, shape) in param_shapes(config) {
        let numel: usize = shape.iter().product();
        let data: Vec<F> = if name.ends_with("gamma") {
            vec![F::one(); numel]
        } else if shape.len() == 1 {
            vec![F::zero(); numel]
        } else {
            let scale = if name.ends_with("attn.wo") || name.ends_with("ff.w2") {
                resid_scale
            } else {
                1.0
            };
            (0..numel)
                .map(|_| F::lit(normal.sample(&mut rng) * scale))
                .collect()
        };
        params.push(name, Tensor::new(shape, data)?);
    }
    Ok(Transformer {
        config: *config,
        params,
    })
}

/// Which rows feed the output projection in [`Transformer::next_token_loss`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossPath {
    /// Logits for every position, masked inside the cross-entropy.
    Full,
    /// Logits only for rows that carry a target.
    TargetRows,
}

/// Handles produced by a recorded forward pass.
pub struct TapeForward {
    pub params: Vec<Var>,
    /// Token-embedding lookup output, `[batch*seq × d_model]`.
    pub embeddings: Var,
    /// Final normalised hidden states, `[batch*seq × d_model]`.
    pub hidden: Var,
}

pub struct LossOutput {
    pub forward: TapeForward,
    pub logits: Var,
    pub loss: Var,
    /// Number of positions contributing to the loss.
    pub targets: usize,
    /// Argmax-correct target predictions (teacher forced).
    pub correct: usize,
}

impl<F: Scalar> Transformer<F> {
    pub(crate) fn layout(&self) -> Layout {
        Layout::for_config(&self.config)
    }

    pub fn num_params(&self) -> usize {
        self.params.num_params()
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<()> {
        if let Some(&id) = tokens
            .iter()
            .find(|&&t| t as usize >= self.config.vocab_size)
        {
            return Err(Error::Vocabulary {
                id,
                vocab_size: self.config.vocab_size,
            });
        }
        Ok(())
    }

    /// Record the network on `tape` for a right-padded batch.
    /// `tokens` is `batch × seq` row-major; `lens[b]` real tokens per row.
    pub fn forward_tape(
        &self,
        tape: &mut Tape<F>,
        tokens: &[u32],
        batch: usize,
        seq: usize,
        lens: &[usize],
    ) -> Result<TapeForward> {
        if tokens.len() != batch * seq || lens.len() != batch {
            return Err(Error::Dimension {
                op: "forward",
                detail: format!("{} tokens for batch {batch} × seq {seq}", tokens.len()),
            });
        }
        self.check_tokens(tokens)?;
        let cfg = &self.config;
        if cfg.pos_scheme == PosScheme::Learned && seq > cfg.max_seq_len {
            return Err(Error::PositionOverflow {
                position: seq - 1,
                max_seq_len: cfg.max_seq_len,
            });
        }
        let layout = self.layout();
        let p = self.params.attach(tape);
        let ids: Vec<usize> = tokens.iter().map(|&t| t as usize).collect();
        let embeddings = tape.gather_rows(p[layout.tok_emb], ids)?;
        let mut x = embeddings;
        if let Some(pos) = layout.pos_emb {
            let positions = (0..batch).flat_map(|_| 0..seq).collect();
            let pe = tape.gather_rows(p[pos], positions)?;
            x = tape.add(x, pe)?;
        }
        let eps = F::lit(LN_EPS);
        let positions = match cfg.pos_scheme {
            PosScheme::Rotary => AttentionPositions::Rotary(RotaryTable::new(
                seq,
                cfg.head_dim(),
                ROTARY_THETA_BASE,
            )),
            PosScheme::LinearBias => AttentionPositions::LinearBias(
                linear_bias_slopes(cfg.n_heads)
                    .into_iter()
                    .map(F::lit)
                    .collect(),
            ),
            PosScheme::Learned | PosScheme::None => AttentionPositions::None,
        };
        for l in &layout.layers {
            let h = tape.layer_norm(x, p[l.ln1_g], p[l.ln1_b], eps)?;
            let qkv = tape.matmul(h, p[l.wqkv])?;
            let qkv = tape.add_bias(qkv, p[l.bqkv])?;
            let spec = AttentionSpec {
                batch,
                seq,
                heads: cfg.n_heads,
                head_dim: cfg.head_dim(),
                lens: lens.to_vec(),
                positions: positions.clone(),
            };
            let att = tape.causal_attention(qkv, spec)?;
            let o = tape.matmul(att, p[l.wo])?;
            let o = tape.add_bias(o, p[l.bo])?;
            x = tape.add(x, o)?;
            let h = tape.layer_norm(x, p[l.ln2_g], p[l.ln2_b], eps)?;
            let f = tape.matmul(h, p[l.w1])?;
            let f = tape.add_bias(f, p[l.b1])?;
            let f = tape.gelu(f);
            let f = tape.matmul(f, p[l.w2])?;
            let f = tape.add_bias(f, p[l.b2])?;
            x = tape.add(x, f)?;
        }
        let hidden = tape.layer_norm(x, p[layout.lnf_g], p[layout.lnf_b], eps)?;
        Ok(TapeForward {
            params: p,
            embeddings,
            hidden,
        })
    }

    /// Tied output projection of hidden rows.
    pub fn project(&self, tape: &mut Tape<F>, fwd: &TapeForward, hidden: Var) -> Result<Var> {
        let tok = fwd.params[self.layout().tok_emb];
        tape.matmul_t(hidden, tok)
    }

    /// Next-token cross-entropy over a padded batch of full sequences.
    ///
    /// Row `b` predicts `tokens[b][t+1]` from position `t`; only positions whose
    /// successor is flagged in `target_mask` (and lies inside `lens[b]`) count.
    #[allow(clippy::too_many_arguments)]
    pub fn next_token_loss(
        &self,
        tape: &mut Tape<F>,
        tokens: &[u32],
        target_mask: &[bool],
        batch: usize,
        width: usize,
        lens: &[usize],
        path: LossPath,
    ) -> Result<LossOutput> {
        if width < 2 {
            return Err(Error::EmptyMask);
        }
        let seq = width - 1;
        let mut inputs = Vec::with_capacity(batch * seq);
        let mut labels = Vec::with_capacity(batch * seq);
        let mut mask = Vec::with_capacity(batch * seq);
        for b in 0..batch {
            let row = &tokens[b * width..(b + 1) * width];
            let mrow = &target_mask[b * width..(b + 1) * width];
            inputs.extend_from_slice(&row[..seq]);
            for t in 0..seq {
                labels.push(row[t + 1] as usize);
                mask.push(mrow[t + 1] && t + 1 < lens[b]);
            }
        }
        let in_lens: Vec<usize> = lens.iter().map(|&l| l.saturating_sub(1)).collect();
        let forward = self.forward_tape(tape, &inputs, batch, seq, &in_lens)?;
        let (logits, labels, mask) = match path {
            LossPath::Full => (self.project(tape, &forward, forward.hidden)?, labels, mask),
            LossPath::TargetRows => {
                let rows: Vec<usize> = (0..mask.len()).filter(|&r| mask[r]).collect();
                if rows.is_empty() {
                    return Err(Error::EmptyMask);
                }
                let picked_labels = rows.iter().map(|&r| labels[r]).collect();
                let n = rows.len();
                let h = tape.gather_rows(forward.hidden, rows)?;
                (self.project(tape, &forward, h)?, picked_labels, vec![true; n])
            }
        };
        let loss = tape.masked_cross_entropy(logits, &labels, &mask)?;
        let lv = tape.value(logits);
        let vocab = self.config.vocab_size;
        let correct = (0..mask.len())
            .filter(|&r| mask[r])
            .filter(|&r| {
                crate::math::kernels::argmax(&lv.data()[r * vocab..(r + 1) * vocab]) == labels[r]
            })
            .count();
        Ok(LossOutput {
            forward,
            logits,
            loss,
            targets: mask.iter().filter(|&&m| m).count(),
            correct,
        })
    }
}

/// Logits `[T × V]` for a single sequence.
pub fn forward_logits<F: Scalar>(model: &Transformer<F>, tokens: &[u32]) -> Result<Tensor<F>> {
    let mut tape = Tape::new();
    let t = tokens.len();
    let fwd = model.forward_tape(&mut tape, tokens, 1, t, &[t])?;
    let logits = model.project(&mut tape, &fwd, fwd.hidden)?;
    Ok(tape.value(logits).clone())
}

/// Greedy choice for the token following `tokens` (lowest id on ties).
pub fn greedy_next<F: Scalar>(model: &Transformer<F>, tokens: &[u32]) -> Result<u32> {
    let mut session = super::infer::Session::new(model);
    for &tok in tokens {
        session.feed(tok)?;
    }
    session.greedy()
}
