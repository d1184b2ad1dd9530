mod common;

use common::{check_primitive, model_gradcheck, random_small_config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scratchbench::math::{AttentionPositions, AttentionSpec, Tensor};
use scratchbench::model::positional::{RotaryTable, ROTARY_THETA_BASE};
use scratchbench::model::PosScheme;

const TOL: f64 = 1e-4;

fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()).unwrap()
}

#[test]
fn linear_and_quadratic_sums() {
    let w = Tensor::new(vec![4], vec![0.5, -1.0, 2.0, 3.0]).unwrap();
    let mut tape = scratchbench::math::Tape::new();
    let v = tape.leaf(w.clone());
    let s = tape.sum(v);
    assert_eq!(tape.backward(s).unwrap().get(v).unwrap(), &[1.0; 4]);
    let sq = tape.mul(v, v).unwrap();
    let s2 = tape.sum(sq);
    let g = tape.backward(s2).unwrap();
    let expected: Vec<f64> = w.data().iter().map(|x| 2.0 * x).collect();
    assert_eq!(g.get(v).unwrap(), &expected[..]);
    // non-scalar root is a rank error
    assert!(tape.backward(sq).is_err());
}

#[test]
fn primitives_match_central_differences() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rand_tensor(&[3, 4], &mut rng);
        let b = rand_tensor(&[4, 5], &mut rng);
        let bt = rand_tensor(&[5, 4], &mut rng);
        let bias = rand_tensor(&[4], &mut rng);
        let gamma = rand_tensor(&[4], &mut rng);
        let beta = rand_tensor(&[4], &mut rng);
        let checks: Vec<(&str, f64)> = vec![
            (
                "matmul",
                check_primitive(vec![a.clone(), b.clone()], seed, |t, v| t.matmul(v[0], v[1]).unwrap()),
            ),
            (
                "matmul_t",
                check_primitive(vec![a.clone(), bt.clone()], seed, |t, v| {
                    t.matmul_t(v[0], v[1]).unwrap()
                }),
            ),
            (
                "add_bias",
                check_primitive(vec![a.clone(), bias.clone()], seed, |t, v| {
                    t.add_bias(v[0], v[1]).unwrap()
                }),
            ),
            ("gelu", check_primitive(vec![a.clone()], seed, |t, v| t.gelu(v[0]))),
            (
                "softmax_rows",
                check_primitive(vec![a.clone()], seed, |t, v| t.softmax_rows(v[0]).unwrap()),
            ),
            (
                "layer_norm",
                check_primitive(vec![a.clone(), gamma.clone(), beta.clone()], seed, |t, v| {
                    t.layer_norm(v[0], v[1], v[2], 1e-5).unwrap()
                }),
            ),
            (
                "gather_rows",
                check_primitive(vec![b.clone()], seed, |t, v| {
                    t.gather_rows(v[0], vec![3, 0, 3, 1]).unwrap()
                }),
            ),
            (
                "cross_entropy",
                check_primitive(vec![a.clone()], seed, |t, v| {
                    t.masked_cross_entropy(v[0], &[1, 3, 0], &[true, false, true])
                        .unwrap()
                }),
            ),
        ];
        for (name, err) in checks {
            assert!(err < TOL, "{name} seed {seed}: relative error {err:e}");
        }
    }
}

#[test]
fn attention_matches_central_differences_for_each_treatment() {
    for seed in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let (batch, seq, heads, dh) = (2, 5, 2, 4);
        let qkv = rand_tensor(&[batch * seq, 3 * heads * dh], &mut rng);
        let treatments = [
            AttentionPositions::None,
            AttentionPositions::Rotary(RotaryTable::new(seq, dh, ROTARY_THETA_BASE)),
            AttentionPositions::LinearBias(vec![0.5, 0.25]),
        ];
        for positions in treatments {
            let spec = AttentionSpec {
                batch,
                seq,
                heads,
                head_dim: dh,
                lens: vec![5, 3],
                positions,
            };
            let err = check_primitive(vec![qkv.clone()], seed, |t, v| {
                t.causal_attention(v[0], spec.clone()).unwrap()
            });
            assert!(err < TOL, "attention seed {seed}: {err:e}");
        }
    }
}

#[test]
fn full_model_loss_matches_central_differences() {
    for (i, scheme) in PosScheme::ALL.into_iter().enumerate() {
        for seed in 0..3u64 {
            let cfg = random_small_config(scheme, 1000 + 10 * i as u64 + seed);
            let err = model_gradcheck(&cfg, seed, 12);
            assert!(err < TOL, "{scheme} seed {seed}: relative error {err:e}");
        }
    }
}
