//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

pub mod golden;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scratchbench::math::{ParamStore, Tape, Tensor, Var};
use scratchbench::model::{init_model, LossPath, ModelConfig, PosScheme, Transformer};

pub const FD_STEP: f64 = 1e-5;

/// `‖a − n‖₂ / max(‖a‖₂, ‖n‖₂)` with a floor for all-zero vectors.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let na = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = na.max(nn);
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences of `loss` w.r.t. selected coordinates of `inputs[which]`.
pub fn central_difference(
    inputs: &[Tensor<f64>],
    which: usize,
    coords: &[usize],
    loss: impl Fn(&[Tensor<f64>]) -> f64,
) -> Vec<f64> {
    coords
        .iter()
        .map(|&c| {
            let mut plus = inputs.to_vec();
            plus[which].data_mut()[c] += FD_STEP;
            let mut minus = inputs.to_vec();
            minus[which].data_mut()[c] -= FD_STEP;
            (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Gradient-check a tape program: `build` maps leaf vars to an output which is
/// contracted with fixed random weights into a scalar.
pub fn check_primitive(
    inputs: Vec<Tensor<f64>>,
    seed: u64,
    build: impl Fn(&mut Tape<f64>, &[Var]) -> Var,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &vars);
        let shape = tape.value(out).shape().to_vec();
        let n = tape.value(out).numel();
        Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    };
    let scalar_loss = |xs: &[Tensor<f64>]| -> (f64, Tape<f64>, Vec<Var>, Var) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &vars);
        let w = tape.leaf(weights.clone());
        let prod = tape.mul(out, w).unwrap();
        let loss = tape.sum(prod);
        (tape.value(loss).item().unwrap(), tape, vars, loss)
    };
    let (_, tape, vars, loss) = scalar_loss(&inputs);
    let grads = tape.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let n = inputs[i].numel();
        let coords: Vec<usize> = (0..n).collect();
        let analytic = grads.get_or_zeros(*v, n);
        let numeric = central_difference(&inputs, i, &coords, |xs| scalar_loss(xs).0);
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    worst
}

/// A padded two-sequence batch with a sparse target mask.
pub struct ToyBatch {
    pub tokens: Vec<u32>,
    pub mask: Vec<bool>,
    pub batch: usize,
    pub width: usize,
    pub lens: Vec<usize>,
}

pub fn toy_batch(vocab: usize, seed: u64) -> ToyBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = 7;
    let lens = vec![7, 5];
    let mut tokens = vec![0u32; 2 * width];
    let mut mask = vec![false; 2 * width];
    for b in 0..2 {
        for t in 0..lens[b] {
            tokens[b * width + t] = rng.gen_range(0..vocab as u32);
            mask[b * width + t] = t >= 2 && rng.gen_bool(0.7);
        }
        mask[b * width + lens[b] - 1] = true;
    }
    ToyBatch {
        tokens,
        mask,
        batch: 2,
        width,
        lens,
    }
}

pub fn model_loss(model: &Transformer<f64>, b: &ToyBatch) -> f64 {
    let mut tape = Tape::new();
    let out = model
        .next_token_loss(&mut tape, &b.tokens, &b.mask, b.batch, b.width, &b.lens, LossPath::Full)
        .unwrap();
    tape.value(out.loss).item().unwrap()
}

/// Random small config for the given scheme.
pub fn random_small_config(scheme: PosScheme, seed: u64) -> ModelConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    let n_heads = [1, 2][rng.gen_range(0..2)];
    let head_dim = [4, 6][rng.gen_range(0..2)];
    ModelConfig {
        n_layers: rng.gen_range(1..=2),
        n_heads,
        d_model: n_heads * head_dim,
        d_ff: rng.gen_range(4..=10),
        vocab_size: rng.gen_range(5..=9),
        max_seq_len: 8,
        pos_scheme: scheme,
        seed,
    }
}

/// Worst relative error between backprop and central differences over every
/// parameter tensor of a freshly initialised model (up to `per_tensor`
/// sampled coordinates each).
pub fn model_gradcheck(config: &ModelConfig, batch_seed: u64, per_tensor: usize) -> f64 {
    let mut model = init_model::<f64>(config).unwrap();
    // widen the initial weights so gradients are not vanishingly small
    let mut rng = ChaCha8Rng::seed_from_u64(batch_seed);
    for p in model.params.iter_mut() {
        for v in p.tensor.data_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    let batch = toy_batch(config.vocab_size, batch_seed);
    let mut tape = Tape::new();
    let out = model
        .next_token_loss(
            &mut tape,
            &batch.tokens,
            &batch.mask,
            batch.batch,
            batch.width,
            &batch.lens,
            LossPath::Full,
        )
        .unwrap();
    let grads = tape.backward(out.loss).unwrap();
    let mut store: ParamStore<f64> = model.params.clone();
    store.absorb_grads(&out.forward.params, &grads).unwrap();
    let mut worst: f64 = 0.0;
    for idx in 0..store.len() {
        let n = store.get(idx).numel();
        let coords: Vec<usize> = (0..n.min(per_tensor)).map(|i| (i * 7919) % n).collect();
        let analytic: Vec<f64> = coords
            .iter()
            .map(|&c| store.get(idx).grad.as_ref().unwrap()[c])
            .collect();
        let numeric: Vec<f64> = coords
            .iter()
            .map(|&c| {
                let mut plus = model.clone();
                plus.params.get_mut(idx).data_mut()[c] += FD_STEP;
                let mut minus = model.clone();
                minus.params.get_mut(idx).data_mut()[c] -= FD_STEP;
                (model_loss(&plus, &batch) - model_loss(&minus, &batch)) / (2.0 * FD_STEP)
            })
            .collect();
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    worst
}

/// Prefix-XOR running parity, written independently of the library.
pub fn prefix_xor(bits: &[u8]) -> Vec<u8> {
    let mut acc = 0;
    bits.iter()
        .map(|&b| {
            acc ^= b;
            acc
        })
        .collect()
}

/// Schoolbook addition on decimal strings (most significant first).
pub fn schoolbook_add(a: &str, b: &str) -> String {
    let (a, b): (Vec<u8>, Vec<u8>) = (
        a.bytes().rev().map(|c| c - b'0').collect(),
        b.bytes().rev().map(|c| c - b'0').collect(),
    );
    let mut out = Vec::new();
    let mut carry = 0;
    for i in 0..a.len().max(b.len()) {
        let s = a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0) + carry;
        out.push(b'0' + s % 10);
        carry = s / 10;
    }
    if carry > 0 {
        out.push(b'0' + carry);
    }
    while out.len() > 1 && *out.last().unwrap() == b'0' {
        out.pop();
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

/// Every layout the bench knows, in text form: each family, its forced
/// form where it has mnemonics, several intervals and the integer pool
/// (except the two-sets-per-bit layout, which outgrows the 64 integer
/// tokens past 32 bits).
pub fn all_variants(task: scratchbench::tasks::TaskKind) -> Vec<scratchbench::tasks::FormatVariant> {
    use scratchbench::tasks::{Family, FormatVariant, PoolKind};
    let mut out = Vec::new();
    for family in Family::ALL.into_iter().filter(|f| f.task() == task) {
        let mut bases = vec![FormatVariant::new(family)];
        if family == Family::Interval {
            bases = [1, 2, 3, 5, 8].iter().map(|&k| FormatVariant::interval(k)).collect();
        }
        for base in bases {
            out.push(base);
            if family.has_mnemonics() {
                out.push(base.forced());
            }
            if family.samples_pool() && family != Family::NonAligned {
                out.push(base.with_pool(PoolKind::Integer));
            }
        }
    }
    out
}
