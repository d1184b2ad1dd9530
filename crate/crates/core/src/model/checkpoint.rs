//! Binary checkpoint layout (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes  "SCRBENCH"
//! version      u32      1
//! dtype        u32      bytes per float (4 or 8)
//! config       8 × u64  n_layers, n_heads, d_model, d_ff, vocab_size,
//!                       max_seq_len, pos_scheme, seed
//! step         u64      optimizer steps taken
//! n_tensors    u64
//! tensors      n × (u64 numel, numel floats), parameter traversal order
//! has_adam     u8       0 or 1
//! adam         u64 t, f64 beta1, f64 beta2, f64 eps, f64 base_lr,
//!              m floats, v floats (num_params each)
//! ```
//!
//! pos_scheme codes: 0 learned, 1 rotary, 2 linear_bias, 3 none.

use std::fs;
use std::path::Path;

use super::positional::PosScheme;
use super::transformer::{param_shapes, ModelConfig, Transformer};
use crate::error::{Error, Result};
use crate::math::{AdamState, ParamStore, Scalar, Tensor};

pub const MAGIC: &[u8; 8] = b"SCRBENCH";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<F> {
    pub model: Transformer<F>,
    pub optimizer: Option<AdamState<F>>,
    pub step: u64,
}

impl<F: Scalar> Checkpoint<F> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(F::BYTES as u32).to_le_bytes());
        let c = &self.model.config;
        for v in [
            c.n_layers as u64,
            c.n_heads as u64,
            c.d_model as u64,
            c.d_ff as u64,
            c.vocab_size as u64,
            c.max_seq_len as u64,
            c.pos_scheme.code(),
            c.seed,
            self.step,
            self.model.params.len() as u64,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for p in self.model.params.iter() {
            out.extend_from_slice(&(p.tensor.numel() as u64).to_le_bytes());
            for &x in p.tensor.data() {
                x.write_le(&mut out);
            }
        }
        match &self.optimizer {
            None => out.push(0),
            Some(adam) => {
                out.push(1);
                out.extend_from_slice(&adam.t.to_le_bytes());
                for v in [adam.beta1, adam.beta2, adam.eps, adam.base_lr] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                for &x in adam.m.iter().chain(&adam.v) {
                    x.write_le(&mut out);
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dtype = r.u32()? as usize;
        if dtype != F::BYTES {
            return Err(Error::Format(format!(
                "checkpoint stores {dtype}-byte floats, expected {}",
                F::BYTES
            )));
        }
        let mut fields = [0u64; 8];
        for f in &mut fields {
            *f = r.u64()?;
        }
        let pos_scheme = PosScheme::from_code(fields[6])
            .ok_or_else(|| Error::Format(format!("unknown pos_scheme code {}", fields[6])))?;
        let config = ModelConfig {
            n_layers: fields[0] as usize,
            n_heads: fields[1] as usize,
            d_model: fields[2] as usize,
            d_ff: fields[3] as usize,
            vocab_size: fields[4] as usize,
            max_seq_len: fields[5] as usize,
            pos_scheme,
            seed: fields[7],
        };
        config
            .validate()
            .map_err(|e| Error::Format(format!("stored config invalid: {e}")))?;
        let step = r.u64()?;
        let shapes = param_shapes(&config);
        let n_tensors = r.u64()? as usize;
        if n_tensors != shapes.len() {
            return Err(Error::Format(format!(
                "{n_tensors} tensors stored, config implies {}",
                shapes.len()
            )));
        }
        let mut params = ParamStore::new();
        for (name, shape) in shapes {
            let numel = r.u64()? as usize;
            let expected: usize = shape.iter().product();
            if numel != expected {
                return Err(Error::Format(format!(
                    "tensor {name}: {numel} values stored, {expected} expected"
                )));
            }
            let data = r.floats::<F>(numel)?;
            params.push(name, Tensor::new(shape, data)?);
        }
        let optimizer = match r.take(1)?[0] {
            0 => None,
            1 => {
                let t = r.u64()?;
                let beta1 = r.f64()?;
                let beta2 = r.f64()?;
                let eps = r.f64()?;
                let base_lr = r.f64()?;
                let n = params.num_params();
                let m = r.floats::<F>(n)?;
                let v = r.floats::<F>(n)?;
                Some(AdamState {
                    m,
                    v,
                    t,
                    beta1,
                    beta2,
                    eps,
                    base_lr,
                })
            }
            other => return Err(Error::Format(format!("bad optimizer flag {other}"))),
        };
        if r.at != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                bytes.len() - r.at
            )));
        }
        Ok(Checkpoint {
            model: Transformer { config, params },
            optimizer,
            step,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.at)))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn floats<F: Scalar>(&mut self, n: usize) -> Result<Vec<F>> {
        let raw = self.take(n.checked_mul(F::BYTES).ok_or_else(|| {
            Error::Format("tensor size overflow".into())
        })?)?;
        Ok(raw.chunks_exact(F::BYTES).map(F::read_le).collect())
    }
}

pub fn save_checkpoint<F: Scalar>(path: &Path, ckpt: &Checkpoint<F>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, ckpt.to_bytes()).map_err(|e| Error::io(path, e))
}

/// Load a checkpoint; the file is fully validated before anything is returned.
pub fn load_checkpoint<F: Scalar>(path: &Path) -> Result<Checkpoint<F>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::transformer::init_model;

    fn sample() -> Checkpoint<f32> {
        let cfg = ModelConfig {
            n_layers: 1,
            n_heads: 2,
            d_model: 8,
            d_ff: 16,
            vocab_size: 10,
            max_seq_len: 12,
            pos_scheme: PosScheme::Learned,
            seed: 2,
        };
        let model = init_model::<f32>(&cfg).unwrap();
        let mut adam = AdamState::new(model.num_params(), 1e-3);
        adam.t = 7;
        adam.m.iter_mut().enumerate().for_each(|(i, v)| *v = i as f32 * 0.5);
        Checkpoint {
            model,
            optimizer: Some(adam),
            step: 7,
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let c = sample();
        let bytes = c.to_bytes();
        let back = Checkpoint::<f32>::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn truncation_and_bad_headers_are_format_errors() {
        let bytes = sample().to_bytes();
        for cut in [0, 5, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(
                Checkpoint::<f32>::from_bytes(&bytes[..cut]),
                Err(Error::Format(_))
            ));
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::<f32>::from_bytes(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(Checkpoint::<f32>::from_bytes(&bad), Err(Error::Format(_))));
        assert!(matches!(Checkpoint::<f64>::from_bytes(&bytes), Err(Error::Format(_))));
        let mut extra = bytes;
        extra.push(0);
        assert!(Checkpoint::<f32>::from_bytes(&extra).is_err());
    }
}
