// Compare backprop through the whole model with central differences, in
// 64-bit floats, for each positional scheme.
//
//     cargo run --example gradient_check

use scratchbench::math::Tape;
use scratchbench::model::{init_model, LossPath, ModelConfig, PosScheme, Transformer};

fn loss(model: &Transformer<f64>, tokens: &[u32], mask: &[bool]) -> scratchbench::Result<(f64, Vec<Vec<f64>>)> {
    let mut tape = Tape::new();
    let out = model.next_token_loss(&mut tape, tokens, mask, 1, tokens.len(), &[tokens.len()], LossPath::Full)?;
    let grads = tape.backward(out.loss)?;
    let mut store = model.params.clone();
    store.absorb_grads(&out.forward.params, &grads)?;
    let g = store.iter().map(|p| p.tensor.grad.clone().unwrap_or_default()).collect();
    Ok((tape.value(out.loss).item()?, g))
}

pub fn run() -> scratchbench::Result<()> {
    let tokens = [1u32, 4, 2, 7, 3, 3, 5, 0];
    let mask = [false, false, true, true, false, true, true, true];
    let h = 1e-5;
    for scheme in PosScheme::ALL {
        let cfg = ModelConfig {
            n_layers: 2,
            n_heads: 2,
            d_model: 8,
            d_ff: 12,
            vocab_size: 8,
            max_seq_len: 16,
            pos_scheme: scheme,
            seed: 1,
        };
        let model = init_model::<f64>(&cfg)?;
        let (_, analytic) = loss(&model, &tokens, &mask)?;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for (idx, grad) in analytic.iter().enumerate() {
            for c in (0..grad.len()).step_by(5) {
                let mut plus = model.clone();
                plus.params.get_mut(idx).data_mut()[c] += h;
                let mut minus = model.clone();
                minus.params.get_mut(idx).data_mut()[c] -= h;
                let fd = (loss(&plus, &tokens, &mask)?.0 - loss(&minus, &tokens, &mask)?.0) / (2.0 * h);
                num += (fd - grad[c]).powi(2);
                den += grad[c].powi(2).max(fd.powi(2));
            }
        }
        println!("{scheme:<12} relative error {:.2e}", (num / den).sqrt());
    }
    Ok(())
}

fn main() -> scratchbench::Result<()> {
    run()
}
