use super::tape::{Gradients, Tape, Var};
use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Param<F> {
    pub name: String,
    pub tensor: Tensor<F>,
}

/// Ordered collection of trainable tensors. The insertion order is the
/// traversal order used by the optimizer and by checkpoints.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<F> {
    params: Vec<Param<F>>,
    /// When false (default), absorbing gradients into buffers that were not
    /// reset is an error instead of a silent sum.
    pub accumulate: bool,
}

impl<F: Scalar> ParamStore<F> {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            accumulate: false,
        }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor<F>) -> usize {
        self.params.push(Param {
            name: name.into(),
            tensor,
        });
        self.params.len() - 1
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Tensor<F> {
        &self.params[idx].tensor
    }

    pub fn get_mut(&mut self, idx: usize) -> &mut Tensor<F> {
        &mut self.params[idx].tensor
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<F>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<F>> {
        self.params.iter_mut()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    /// Total number of scalar parameters.
    pub fn num_params(&self) -> usize {
        self.params.iter().map(|p| p.tensor.numel()).sum()
    }

    /// Register every parameter as a leaf of `tape`; returned vars follow store order.
    pub fn attach(&self, tape: &mut Tape<F>) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| tape.leaf(p.tensor.clone()))
            .collect()
    }

    /// Copy gradients for `vars` (as returned by [`attach`](Self::attach)) into the
    /// parameter grad buffers.
    pub fn absorb_grads(&mut self, vars: &[Var], grads: &Gradients<F>) -> Result<()> {
        if vars.len() != self.params.len() {
            return Err(Error::Dimension {
                op: "absorb_grads",
                detail: format!("{} vars for {} params", vars.len(), self.params.len()),
            });
        }
        if !self.accumulate && self.params.iter().any(|p| p.tensor.grad.is_some()) {
            return Err(Error::GradientNotReset);
        }
        for (p, &v) in self.params.iter_mut().zip(vars) {
            let n = p.tensor.numel();
            let g = grads.get_or_zeros(v, n);
            match &mut p.tensor.grad {
                Some(existing) => {
                    for (e, x) in existing.iter_mut().zip(g) {
                        *e += x;
                    }
                }
                slot @ None => *slot = Some(g),
            }
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.tensor.grad = None;
        }
    }

    /// Global L2 norm over all gradient buffers (f64 accumulation).
    pub fn grad_norm(&self) -> f64 {
        self.params
            .iter()
            .filter_map(|p| p.tensor.grad.as_ref())
            .flat_map(|g| g.iter())
            .map(|v| {
                let x = v.to_f64().unwrap_or(f64::NAN);
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Rescale gradients so the global norm is at most `max_norm`; returns the pre-clip norm.
    pub fn clip_grads(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm.is_finite() && norm > max_norm && max_norm > 0.0 {
            let factor = F::lit(max_norm / norm);
            for g in self.params.iter_mut().filter_map(|p| p.tensor.grad.as_mut()) {
                for v in g.iter_mut() {
                    *v *= factor;
                }
            }
        }
        norm
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.tensor.all_finite())
    }

    /// Same parameters converted to another precision (gradients dropped).
    pub fn cast<G: Scalar>(&self) -> ParamStore<G> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    tensor: p.tensor.cast(),
                })
                .collect(),
            accumulate: self.accumulate,
        }
    }
}
