//! Dense tensors, reverse-mode autodiff, Adam and the warmup schedule.

pub mod adam;
pub mod kernels;
pub mod params;
pub mod schedule;
pub mod tape;
pub mod tensor;

pub use adam::{adam_update, adam_update_slice, AdamState};
pub use params::{Param, ParamStore};
pub use schedule::{lr_at, LrSchedule};
pub use tape::{AttentionPositions, AttentionSpec, Gradients, Tape, Var};
pub use tensor::{Scalar, Tensor};

/// Plain (non-recording) matrix product of two rank-2 tensors.
pub fn matmul<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>) -> crate::Result<Tensor<F>> {
    let mut tape = Tape::new();
    let (va, vb) = (tape.leaf(a.clone()), tape.leaf(b.clone()));
    let out = tape.matmul(va, vb)?;
    Ok(tape.value(out).clone())
}

/// Plain row-wise softmax of a rank-2 tensor.
pub fn softmax_rows<F: Scalar>(x: &Tensor<F>) -> crate::Result<Tensor<F>> {
    let (rows, cols) = x.dims2("softmax_rows")?;
    let mut data = x.data().to_vec();
    for r in 0..rows {
        kernels::softmax_in_place(&mut data[r * cols..(r + 1) * cols]);
    }
    Tensor::new(vec![rows, cols], data)
}

/// Plain layer normalisation over the last axis.
pub fn layer_norm<F: Scalar>(
    x: &Tensor<F>,
    gamma: &Tensor<F>,
    beta: &Tensor<F>,
    eps: F,
) -> crate::Result<Tensor<F>> {
    let mut tape = Tape::new();
    let (vx, vg, vb) = (
        tape.leaf(x.clone()),
        tape.leaf(gamma.clone()),
        tape.leaf(beta.clone()),
    );
    let out = tape.layer_norm(vx, vg, vb, eps)?;
    Ok(tape.value(out).clone())
}
