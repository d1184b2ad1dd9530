use super::params::ParamStore;
use super::tensor::Scalar;
use crate::error::{Error, Result};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

/// Adam moments over the flattened parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F> {
    pub m: Vec<F>,
    pub v: Vec<F>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub base_lr: f64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(n_params: usize, base_lr: f64) -> Self {
        AdamState {
            m: vec![F::zero(); n_params],
            v: vec![F::zero(); n_params],
            t: 0,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            eps: DEFAULT_EPS,
            base_lr,
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.m.len() != n || self.v.len() != n {
            return Err(Error::Dimension {
                op: "adam_update",
                detail: format!("optimizer state sized {} for {n} parameters", self.m.len()),
            });
        }
        Ok(())
    }

    fn apply(&mut self, offset: usize, params: &mut [F], grads: &[F], lr: f64) {
        let b1 = F::lit(self.beta1);
        let b2 = F::lit(self.beta2);
        let one = F::one();
        let c1 = F::lit(1.0 - self.beta1.powi(self.t as i32));
        let c2 = F::lit(1.0 - self.beta2.powi(self.t as i32));
        let lr = F::lit(lr);
        let eps = F::lit(self.eps);
        let m = &mut self.m[offset..offset + params.len()];
        let v = &mut self.v[offset..offset + params.len()];
        for (((p, &g), mi), vi) in params.iter_mut().zip(grads).zip(m).zip(v) {
            *mi = b1 * *mi + (one - b1) * g;
            *vi = b2 * *vi + (one - b2) * g * g;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// One bias-corrected Adam step on a flat parameter slice.
pub fn adam_update_slice<F: Scalar>(
    params: &mut [F],
    grads: &[F],
    state: &mut AdamState<F>,
    lr: f64,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Dimension {
            op: "adam_update",
            detail: format!("{} params, {} grads", params.len(), grads.len()),
        });
    }
    state.check_len(params.len())?;
    state.t += 1;
    state.apply(0, params, grads, lr);
    Ok(())
}

/// One Adam step over every tensor in the store. Tensors without a gradient
/// buffer are treated as having zero gradient.
pub fn adam_update<F: Scalar>(
    store: &mut ParamStore<F>,
    state: &mut AdamState<F>,
    lr: f64,
) -> Result<()> {
    state.check_len(store.num_params())?;
    state.t += 1;
    let mut offset = 0;
    for p in store.iter_mut() {
        let n = p.tensor.numel();
        let grad = p.tensor.grad.take().unwrap_or_else(|| vec![F::zero(); n]);
        state.apply(offset, p.tensor.data_mut(), &grad, lr);
        p.tensor.grad = Some(grad);
        offset += n;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent scalar Adam used as the reference.
    fn reference_adam(w0: f64, steps: usize, lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
        let (mut w, mut m, mut v) = (w0, 0.0, 0.0);
        for t in 1..=steps {
            let g = 2.0 * w;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            w -= lr * mh / (vh.sqrt() + eps);
        }
        w
    }

    #[test]
    fn ten_steps_on_square_match_reference() {
        let mut w = [1.0f64];
        let mut state = AdamState::new(1, 0.1);
        for _ in 0..10 {
            let g = [2.0 * w[0]];
            adam_update_slice(&mut w, &g, &mut state, 0.1).unwrap();
        }
        assert_eq!(state.t, 10);
        assert!((w[0] - reference_adam(1.0, 10, 0.1)).abs() < 1e-10);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = [0.5f64, -0.5, 2.0];
        let g = [3.0, -0.01, 1e-3];
        let mut state = AdamState::new(3, 1e-2);
        state.eps = 0.0;
        adam_update_slice(&mut p, &g, &mut state, 1e-2).unwrap();
        assert!((p[0] - (0.5 - 1e-2)).abs() < 1e-12);
        assert!((p[1] - (-0.5 + 1e-2)).abs() < 1e-12);
        assert!((p[2] - (2.0 - 1e-2)).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = [0.25f32, -3.0];
        let mut state = AdamState::new(2, 1e-3);
        adam_update_slice(&mut p, &[0.0, 0.0], &mut state, 1e-3).unwrap();
        assert_eq!(p, [0.25, -3.0]);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut state = AdamState::<f64>::new(2, 1e-3);
        assert!(adam_update_slice(&mut [0.0; 3], &[0.0; 3], &mut state, 1e-3).is_err());
        assert!(adam_update_slice(&mut [0.0; 2], &[0.0; 3], &mut state, 1e-3).is_err());
    }
}
