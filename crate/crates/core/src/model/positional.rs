use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::math::Scalar;

pub const ROTARY_THETA_BASE: f64 = 10_000.0;

/// How token position enters the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PosScheme {
    /// Additive absolute embedding table (OPT-style). Hard ceiling at `max_seq_len`.
    Learned,
    /// Rotary query/key rotations (Pythia-style).
    Rotary,
    /// Per-head linear distance penalty on attention scores (ALiBi, BLOOM-style).
    LinearBias,
    /// No positional signal beyond the causal mask.
    None,
}

impl PosScheme {
    pub const ALL: [PosScheme; 4] = [
        PosScheme::Learned,
        PosScheme::Rotary,
        PosScheme::LinearBias,
        PosScheme::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosScheme::Learned => "learned",
            PosScheme::Rotary => "rotary",
            PosScheme::LinearBias => "linear_bias",
            PosScheme::None => "none",
        }
    }

    pub(crate) fn code(self) -> u64 {
        match self {
            PosScheme::Learned => 0,
            PosScheme::Rotary => 1,
            PosScheme::LinearBias => 2,
            PosScheme::None => 3,
        }
    }

    pub(crate) fn from_code(code: u64) -> Option<Self> {
        PosScheme::ALL.into_iter().find(|s| s.code() == code)
    }
}

impl fmt::Display for PosScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PosScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PosScheme::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown pos_scheme `{s}` (expected learned, rotary, linear_bias or none)"
                ))
            })
    }
}

/// Geometric head slopes `2^(-8h/n)` for `h = 1..=n`.
pub fn linear_bias_slopes(n_heads: usize) -> Vec<f64> {
    (1..=n_heads)
        .map(|h| 2f64.powf(-8.0 * h as f64 / n_heads as f64))
        .collect()
}

/// Score bias added at (query `i`, key `j`), `j <= i`.
pub fn linear_bias(slope: f64, query: usize, key: usize) -> f64 {
    -slope * (query as f64 - key as f64)
}

/// Cosine/sine table for rotary rotations: `[positions × dim/2]` each.
#[derive(Clone, Debug)]
pub struct RotaryTable<F> {
    half: usize,
    cos: Vec<F>,
    sin: Vec<F>,
}

impl<F: Scalar> RotaryTable<F> {
    pub fn new(positions: usize, head_dim: usize, theta_base: f64) -> Self {
        let half = head_dim / 2;
        let mut cos = Vec::with_capacity(positions * half);
        let mut sin = Vec::with_capacity(positions * half);
        for pos in 0..positions {
            for pair in 0..half {
                let freq = theta_base.powf(-2.0 * pair as f64 / head_dim as f64);
                let angle = pos as f64 * freq;
                cos.push(F::lit(angle.cos()));
                sin.push(F::lit(angle.sin()));
            }
        }
        RotaryTable { half, cos, sin }
    }

    pub fn positions(&self) -> usize {
        self.cos.len().checked_div(self.half).unwrap_or(0)
    }

    /// Rotate consecutive pairs of `v` by the angles for `position`.
    /// `inverse` applies the transpose rotation (used in backprop).
    pub fn rotate(&self, v: &mut [F], position: usize, inverse: bool) {
        let base = position * self.half;
        for pair in 0..self.half {
            let c = self.cos[base + pair];
            let s = if inverse {
                -self.sin[base + pair]
            } else {
                self.sin[base + pair]
            };
            let (x0, x1) = (v[2 * pair], v[2 * pair + 1]);
            v[2 * pair] = x0 * c - x1 * s;
            v[2 * pair + 1] = x0 * s + x1 * c;
        }
    }
}

/// Rotary embedding of a single head vector at `position`.
pub fn rotary_apply<F: Scalar>(v: &[F], position: usize, theta_base: f64) -> Result<Vec<F>> {
    if v.len() % 2 != 0 {
        return Err(Error::Config(format!(
            "rotary embedding needs an even head dimension, got {}",
            v.len()
        )));
    }
    let table = RotaryTable::<F>::new(position + 1, v.len(), theta_base);
    let mut out = v.to_vec();
    table.rotate(&mut out, position, false);
    Ok(out)
}
