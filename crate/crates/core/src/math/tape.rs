//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Nodes are appended in evaluation order, so walking the tape backwards is a
//! valid topological order for the backward sweep.

use super::kernels::{self, dot, gemm_into};
use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::model::positional::RotaryTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Positional treatment applied inside the attention op.
#[derive(Clone, Debug)]
pub enum AttentionPositions<F> {
    None,
    Rotary(RotaryTable<F>),
    /// One slope per head.
    LinearBias(Vec<F>),
}

/// Layout of a fused causal self-attention call over a padded batch.
///
/// The input holds `batch * seq` rows of `[q | k | v]`, each `3 * heads * head_dim`
/// wide. Rows at or beyond `lens[b]` are padding: they produce zeros and are
/// never attended to.
#[derive(Clone, Debug)]
pub struct AttentionSpec<F> {
    pub batch: usize,
    pub seq: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub lens: Vec<usize>,
    pub positions: AttentionPositions<F>,
}

impl<F> AttentionSpec<F> {
    fn width(&self) -> usize {
        self.heads * self.head_dim
    }
}

enum Op<F> {
    Leaf,
    MatMul {
        a: Var,
        b: Var,
        trans_b: bool,
    },
    Add(Var, Var),
    Mul(Var, Var),
    AddBias {
        x: Var,
        bias: Var,
    },
    Sum(Var),
    Gelu(Var),
    SoftmaxRows(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        mean: Vec<F>,
        rstd: Vec<F>,
    },
    Gather {
        table: Var,
        ids: Vec<usize>,
    },
    Attention {
        qkv: Var,
        spec: Box<AttentionSpec<F>>,
        probs: Vec<F>,
        q_rot: Vec<F>,
        k_rot: Vec<F>,
    },
    CrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        mask: Vec<bool>,
        probs: Vec<F>,
        count: usize,
    },
}

struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
}

/// Gradients from one backward sweep, indexed by [`Var`].
pub struct Gradients<F> {
    grads: Vec<Option<Vec<F>>>,
}

impl<F: Scalar> Gradients<F> {
    pub fn get(&self, v: Var) -> Option<&[F]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradient of `v`, or zeros of length `len` when nothing flowed into it.
    pub fn get_or_zeros(&self, v: Var, len: usize) -> Vec<F> {
        self.get(v).map_or_else(|| vec![F::zero(); len], <[F]>::to_vec)
    }
}

#[derive(Default)]
pub struct Tape<F> {
    nodes: Vec<Node<F>>,
}

impl<F: Scalar> Tape<F> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, mut value: Tensor<F>) -> Var {
        value.grad = None;
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    fn dims2(&self, v: Var, op: &'static str) -> Result<(usize, usize)> {
        self.value(v).dims2(op)
    }

    /// `a · b` for rank-2 operands.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, false)
    }

    /// `a · bᵀ` without materialising the transpose.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, true)
    }

    fn matmul_impl(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (m, k) = self.dims2(a, "matmul")?;
        let (br, bc) = self.dims2(b, "matmul")?;
        let (bk, n) = if trans_b { (bc, br) } else { (br, bc) };
        if k != bk {
            return Err(Error::Dimension {
                op: "matmul",
                detail: format!("inner extents {k} and {bk} differ"),
            });
        }
        let mut out = vec![F::zero(); m * n];
        gemm_into(
            self.value(a).data(),
            self.value(b).data(),
            &mut out,
            m,
            k,
            n,
            trans_b,
            false,
        );
        let value = Tensor::new(vec![m, n], out)?;
        Ok(self.push(value, Op::MatMul { a, b, trans_b }))
    }

    fn same_shape(&self, a: Var, b: Var, op: &'static str) -> Result<()> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::Dimension {
                op,
                detail: format!(
                    "{:?} vs {:?}",
                    self.value(a).shape(),
                    self.value(b).shape()
                ),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x + y)
            .collect();
        let value = Tensor::new(self.value(a).shape().to_vec(), data)?;
        Ok(self.push(value, Op::Add(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x * y)
            .collect();
        let value = Tensor::new(self.value(a).shape().to_vec(), data)?;
        Ok(self.push(value, Op::Mul(a, b)))
    }

    /// Adds a bias vector to every row of a rank-2 tensor.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (rows, cols) = self.dims2(x, "add_bias")?;
        if self.value(bias).numel() != cols {
            return Err(Error::Dimension {
                op: "add_bias",
                detail: format!("bias of {} for {cols} columns", self.value(bias).numel()),
            });
        }
        let b = self.value(bias).data();
        let mut data = self.value(x).data().to_vec();
        for r in 0..rows {
            for (o, &bv) in data[r * cols..(r + 1) * cols].iter_mut().zip(b) {
                *o += bv;
            }
        }
        let value = Tensor::new(vec![rows, cols], data)?;
        Ok(self.push(value, Op::AddBias { x, bias }))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let total = self.value(x).data().iter().copied().sum();
        self.push(Tensor::scalar(total), Op::Sum(x))
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let src = self.value(x);
        let data = src.data().iter().map(|&v| kernels::gelu(v)).collect();
        let value = Tensor::new(src.shape().to_vec(), data).expect("same shape");
        self.push(value, Op::Gelu(x))
    }

    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        let (rows, cols) = self.dims2(x, "softmax_rows")?;
        let mut data = self.value(x).data().to_vec();
        for r in 0..rows {
            kernels::softmax_in_place(&mut data[r * cols..(r + 1) * cols]);
        }
        let value = Tensor::new(vec![rows, cols], data)?;
        Ok(self.push(value, Op::SoftmaxRows(x)))
    }

    /// Layer normalisation over the last axis.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: F) -> Result<Var> {
        let src = self.value(x);
        let d = *src.shape().last().ok_or(Error::Rank {
            op: "layer_norm",
            expected: 1,
            got: vec![],
        })?;
        if self.value(gamma).numel() != d || self.value(beta).numel() != d {
            return Err(Error::Dimension {
                op: "layer_norm",
                detail: format!("gamma/beta must have {d} entries"),
            });
        }
        let rows = src.numel() / d.max(1);
        let mut out = vec![F::zero(); src.numel()];
        let mut mean = Vec::with_capacity(rows);
        let mut rstd = Vec::with_capacity(rows);
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        for r in 0..rows {
            let (mu, rs) = kernels::layer_norm_row(
                &src.data()[r * d..(r + 1) * d],
                g,
                b,
                eps,
                &mut out[r * d..(r + 1) * d],
            );
            mean.push(mu);
            rstd.push(rs);
        }
        let value = Tensor::new(src.shape().to_vec(), out)?;
        Ok(self.push(
            value,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                mean,
                rstd,
            },
        ))
    }

    /// Selects rows of a rank-2 table (embedding lookup).
    pub fn gather_rows(&mut self, table: Var, ids: Vec<usize>) -> Result<Var> {
        let (rows, cols) = self.dims2(table, "gather_rows")?;
        let src = self.value(table).data();
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &id in &ids {
            if id >= rows {
                return Err(Error::Vocabulary {
                    id: id as u32,
                    vocab_size: rows,
                });
            }
            data.extend_from_slice(&src[id * cols..(id + 1) * cols]);
        }
        let value = Tensor::new(vec![ids.len(), cols], data)?;
        Ok(self.push(value, Op::Gather { table, ids }))
    }

    /// Fused multi-head causal self-attention.
    pub fn causal_attention(&mut self, qkv: Var, spec: AttentionSpec<F>) -> Result<Var> {
        let (rows, cols) = self.dims2(qkv, "causal_attention")?;
        let width = spec.width();
        if rows != spec.batch * spec.seq || cols != 3 * width || spec.lens.len() != spec.batch {
            return Err(Error::Dimension {
                op: "causal_attention",
                detail: format!(
                    "input [{rows}×{cols}] does not fit batch {} × seq {} × 3·{width}",
                    spec.batch, spec.seq
                ),
            });
        }
        if spec.lens.iter().any(|&l| l > spec.seq) {
            return Err(Error::Dimension {
                op: "causal_attention",
                detail: "sequence length exceeds padded width".into(),
            });
        }
        if let AttentionPositions::Rotary(table) = &spec.positions {
            if table.positions() < spec.seq {
                return Err(Error::Dimension {
                    op: "causal_attention",
                    detail: "rotary table shorter than sequence".into(),
                });
            }
        }
        let (t, dh, heads) = (spec.seq, spec.head_dim, spec.heads);
        let input = self.value(qkv).data();
        let mut q_rot = vec![F::zero(); rows * width];
        let mut k_rot = vec![F::zero(); rows * width];
        for r in 0..rows {
            q_rot[r * width..(r + 1) * width].copy_from_slice(&input[r * cols..r * cols + width]);
            k_rot[r * width..(r + 1) * width]
                .copy_from_slice(&input[r * cols + width..r * cols + 2 * width]);
        }
        if let AttentionPositions::Rotary(table) = &spec.positions {
            for r in 0..rows {
                let pos = r % t;
                for h in 0..heads {
                    let at = r * width + h * dh;
                    table.rotate(&mut q_rot[at..at + dh], pos, false);
                    table.rotate(&mut k_rot[at..at + dh], pos, false);
                }
            }
        }
        let scale = F::one() / F::from_usize(dh).unwrap().sqrt();
        let mut probs = vec![F::zero(); spec.batch * heads * t * t];
        let mut out = vec![F::zero(); rows * width];
        for b in 0..spec.batch {
            let len = spec.lens[b];
            for h in 0..heads {
                let slope = match &spec.positions {
                    AttentionPositions::LinearBias(s) => Some(s[h]),
                    _ => None,
                };
                let pbase = (b * heads + h) * t * t;
                for i in 0..len {
                    let qi = &q_rot[(b * t + i) * width + h * dh..][..dh];
                    let prow = &mut probs[pbase + i * t..pbase + i * t + i + 1];
                    for (j, p) in prow.iter_mut().enumerate() {
                        let kj = &k_rot[(b * t + j) * width + h * dh..][..dh];
                        let mut s = dot(qi, kj) * scale;
                        if let Some(m) = slope {
                            s -= m * F::from_usize(i - j).unwrap();
                        }
                        *p = s;
                    }
                    kernels::softmax_in_place(prow);
                    let orow = &mut out[(b * t + i) * width + h * dh..][..dh];
                    for (j, &p) in prow.iter().enumerate() {
                        let vj = &input[(b * t + j) * cols + 2 * width + h * dh..][..dh];
                        for (o, &v) in orow.iter_mut().zip(vj) {
                            *o += p * v;
                        }
                    }
                }
            }
        }
        let value = Tensor::new(vec![rows, width], out)?;
        Ok(self.push(
            value,
            Op::Attention {
                qkv,
                spec: Box::new(spec),
                probs,
                q_rot,
                k_rot,
            },
        ))
    }

    /// Mean negative log-likelihood over rows where `mask` is true.
    pub fn masked_cross_entropy(
        &mut self,
        logits: Var,
        targets: &[usize],
        mask: &[bool],
    ) -> Result<Var> {
        let (rows, vocab) = self.dims2(logits, "masked_cross_entropy")?;
        if targets.len() != rows || mask.len() != rows {
            return Err(Error::Dimension {
                op: "masked_cross_entropy",
                detail: format!(
                    "{rows} logit rows, {} targets, {} mask entries",
                    targets.len(),
                    mask.len()
                ),
            });
        }
        let count = mask.iter().filter(|&&m| m).count();
        if count == 0 {
            return Err(Error::EmptyMask);
        }
        let data = self.value(logits).data();
        let mut probs = vec![F::zero(); rows * vocab];
        let mut total = F::zero();
        for r in (0..rows).filter(|&r| mask[r]) {
            let target = targets[r];
            if target >= vocab {
                return Err(Error::Vocabulary {
                    id: target as u32,
                    vocab_size: vocab,
                });
            }
            let row = &mut probs[r * vocab..(r + 1) * vocab];
            row.copy_from_slice(&data[r * vocab..(r + 1) * vocab]);
            let max = row.iter().copied().fold(F::neg_infinity(), F::max);
            let mut z = F::zero();
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                z += *v;
            }
            total += z.ln() + max - data[r * vocab + target];
            for v in row.iter_mut() {
                *v /= z;
            }
        }
        let loss = total / F::from_usize(count).unwrap();
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec(),
                mask: mask.to_vec(),
                probs,
                count,
            },
        ))
    }

    /// Backpropagate from a scalar loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients<F>> {
        let value = self.value(loss);
        if value.numel() != 1 {
            return Err(Error::Rank {
                op: "backward",
                expected: 0,
                got: value.shape().to_vec(),
            });
        }
        self.backward_seeded(loss, vec![F::one()])
    }

    /// Backpropagate an arbitrary output cotangent `seed` from `out`.
    pub fn backward_seeded(&self, out: Var, seed: Vec<F>) -> Result<Gradients<F>> {
        if seed.len() != self.value(out).numel() {
            return Err(Error::Dimension {
                op: "backward",
                detail: "seed length differs from output size".into(),
            });
        }
        let mut grads: Vec<Option<Vec<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(seed);
        for idx in (0..=out.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.backprop_node(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, idx: usize, g: &[F], grads: &mut [Option<Vec<F>>]) {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { a, b, trans_b } => {
                let (m, k) = self.value(*a).dims2("matmul").unwrap();
                let n = node.value.shape()[1];
                let bv = self.value(*b).data();
                let av = self.value(*a).data();
                // da[m×k] = g[m×n] · bᵀ
                {
                    let da = slot(grads, *a, m * k);
                    // logical b is [k×n]; bᵀ as a [n×k] operand
                    if *trans_b {
                        gemm_into(g, bv, da, m, n, k, false, true);
                    } else {
                        gemm_into(g, bv, da, m, n, k, true, true);
                    }
                }
                let db = slot(grads, *b, k * n);
                if *trans_b {
                    // db[n×k] = gᵀ · a
                    unsafe_gemm_at(g, av, db, n, m, k);
                } else {
                    // db[k×n] = aᵀ · g
                    unsafe_gemm_at(av, g, db, k, m, n);
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    add_into(slot(grads, v, g.len()), g);
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                let da = slot(grads, *a, g.len());
                for ((d, &gi), &y) in da.iter_mut().zip(g).zip(bv) {
                    *d += gi * y;
                }
                let db = slot(grads, *b, g.len());
                for ((d, &gi), &x) in db.iter_mut().zip(g).zip(av) {
                    *d += gi * x;
                }
            }
            Op::AddBias { x, bias } => {
                add_into(slot(grads, *x, g.len()), g);
                let cols = self.value(*bias).numel();
                let db = slot(grads, *bias, cols);
                for row in g.chunks(cols) {
                    add_into(db, row);
                }
            }
            Op::Sum(x) => {
                let n = self.value(*x).numel();
                let dx = slot(grads, *x, n);
                for d in dx.iter_mut() {
                    *d += g[0];
                }
            }
            Op::Gelu(x) => {
                let xv = self.value(*x).data();
                let dx = slot(grads, *x, g.len());
                for ((d, &gi), &v) in dx.iter_mut().zip(g).zip(xv) {
                    *d += gi * kernels::gelu_grad(v);
                }
            }
            Op::SoftmaxRows(x) => {
                let (rows, cols) = node.value.dims2("softmax_rows").unwrap();
                let y = node.value.data();
                let dx = slot(grads, *x, rows * cols);
                for r in 0..rows {
                    let yr = &y[r * cols..(r + 1) * cols];
                    let gr = &g[r * cols..(r + 1) * cols];
                    let inner = dot(yr, gr);
                    for c in 0..cols {
                        dx[r * cols + c] += yr[c] * (gr[c] - inner);
                    }
                }
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                mean,
                rstd,
            } => {
                let xv = self.value(*x).data();
                let gv = self.value(*gamma).data();
                let d = gv.len();
                let rows = mean.len();
                let inv_d = F::one() / F::from_usize(d).unwrap();
                let mut dgamma = vec![F::zero(); d];
                let mut dbeta = vec![F::zero(); d];
                let mut xhat = vec![F::zero(); d];
                let mut dxhat = vec![F::zero(); d];
                let dx = slot(grads, *x, rows * d);
                for r in 0..rows {
                    let xr = &xv[r * d..(r + 1) * d];
                    let gr = &g[r * d..(r + 1) * d];
                    for c in 0..d {
                        xhat[c] = (xr[c] - mean[r]) * rstd[r];
                        dxhat[c] = gr[c] * gv[c];
                        dgamma[c] += gr[c] * xhat[c];
                        dbeta[c] += gr[c];
                    }
                    let mean_dxhat = dxhat.iter().copied().sum::<F>() * inv_d;
                    let mean_dxhat_xhat = dot(&dxhat, &xhat) * inv_d;
                    for c in 0..d {
                        dx[r * d + c] += rstd[r] * (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat);
                    }
                }
                add_into(slot(grads, *gamma, d), &dgamma);
                add_into(slot(grads, *beta, d), &dbeta);
            }
            Op::Gather { table, ids } => {
                let (rows, cols) = self.value(*table).dims2("gather_rows").unwrap();
                let dt = slot(grads, *table, rows * cols);
                for (i, &id) in ids.iter().enumerate() {
                    add_into(&mut dt[id * cols..(id + 1) * cols], &g[i * cols..(i + 1) * cols]);
                }
            }
            Op::Attention {
                qkv,
                spec,
                probs,
                q_rot,
                k_rot,
            } => self.backprop_attention(*qkv, spec, probs, q_rot, k_rot, g, grads),
            Op::CrossEntropy {
                logits,
                targets,
                mask,
                probs,
                count,
            } => {
                let (rows, vocab) = self.value(*logits).dims2("ce").unwrap();
                let scale = g[0] / F::from_usize(*count).unwrap();
                let dl = slot(grads, *logits, rows * vocab);
                for r in (0..rows).filter(|&r| mask[r]) {
                    let row = &mut dl[r * vocab..(r + 1) * vocab];
                    for (d, &p) in row.iter_mut().zip(&probs[r * vocab..(r + 1) * vocab]) {
                        *d += p * scale;
                    }
                    row[targets[r]] -= scale;
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn backprop_attention(
        &self,
        qkv: Var,
        spec: &AttentionSpec<F>,
        probs: &[F],
        q_rot: &[F],
        k_rot: &[F],
        g: &[F],
        grads: &mut [Option<Vec<F>>],
    ) {
        let (t, dh, heads, width) = (spec.seq, spec.head_dim, spec.heads, spec.width());
        let cols = 3 * width;
        let rows = spec.batch * t;
        let input = self.value(qkv).data();
        let scale = F::one() / F::from_usize(dh).unwrap().sqrt();
        // gradients w.r.t. rotated q and k, un-rotated at the end
        let mut dq = vec![F::zero(); rows * width];
        let mut dk = vec![F::zero(); rows * width];
        let dall = slot(grads, qkv, rows * cols);
        let mut dp = vec![F::zero(); t];
        for b in 0..spec.batch {
            let len = spec.lens[b];
            for h in 0..heads {
                let pbase = (b * heads + h) * t * t;
                for i in 0..len {
                    let gi = &g[(b * t + i) * width + h * dh..][..dh];
                    let prow = &probs[pbase + i * t..pbase + i * t + i + 1];
                    let mut inner = F::zero();
                    for j in 0..=i {
                        let vrow = (b * t + j) * cols + 2 * width + h * dh;
                        dp[j] = dot(gi, &input[vrow..vrow + dh]);
                        inner += dp[j] * prow[j];
                        let dv = &mut dall[vrow..vrow + dh];
                        for (d, &gv) in dv.iter_mut().zip(gi) {
                            *d += prow[j] * gv;
                        }
                    }
                    let qi_at = (b * t + i) * width + h * dh;
                    for j in 0..=i {
                        let ds = prow[j] * (dp[j] - inner) * scale;
                        if ds == F::zero() {
                            continue;
                        }
                        let kj_at = (b * t + j) * width + h * dh;
                        for c in 0..dh {
                            dq[qi_at + c] += ds * k_rot[kj_at + c];
                            dk[kj_at + c] += ds * q_rot[qi_at + c];
                        }
                    }
                }
            }
        }
        if let AttentionPositions::Rotary(table) = &spec.positions {
            for r in 0..rows {
                let pos = r % t;
                for h in 0..heads {
                    let at = r * width + h * dh;
                    table.rotate(&mut dq[at..at + dh], pos, true);
                    table.rotate(&mut dk[at..at + dh], pos, true);
                }
            }
        }
        for r in 0..rows {
            add_into(&mut dall[r * cols..r * cols + width], &dq[r * width..(r + 1) * width]);
            add_into(
                &mut dall[r * cols + width..r * cols + 2 * width],
                &dk[r * width..(r + 1) * width],
            );
        }
    }
}

fn slot<F: Scalar>(grads: &mut [Option<Vec<F>>], v: Var, len: usize) -> &mut [F] {
    grads[v.0].get_or_insert_with(|| vec![F::zero(); len])
}

fn add_into<F: Scalar>(dst: &mut [F], src: &[F]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// `out[p×q] += xᵀ · y` for row-major `x[r×p]`, `y[r×q]`.
fn unsafe_gemm_at<F: Scalar>(x: &[F], y: &[F], out: &mut [F], p: usize, r: usize, q: usize) {
    if p == 0 || q == 0 {
        return;
    }
    // SAFETY: x is [r×p] read as its transpose via swapped strides.
    unsafe {
        F::gemm(
            p,
            r,
            q,
            F::one(),
            x.as_ptr(),
            1,
            p as isize,
            y.as_ptr(),
            q as isize,
            1,
            F::one(),
            out.as_mut_ptr(),
            q as isize,
            1,
        );
    }
}
