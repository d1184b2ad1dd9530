use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::{MnemonicPool, TokenId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Parity,
    Addition,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Parity => "parity",
            TaskKind::Addition => "addition",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parity" => Ok(TaskKind::Parity),
            "addition" => Ok(TaskKind::Addition),
            _ => Err(Error::Config(format!("unknown task `{s}` (parity, addition)"))),
        }
    }
}

/// The mathematical content of an instance, independent of rendering.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    Parity(Vec<u8>),
    /// Operands as most-significant-first digit lists.
    Addition { a: Vec<u8>, b: Vec<u8> },
}

impl Problem {
    pub fn kind(&self) -> TaskKind {
        match self {
            Problem::Parity(_) => TaskKind::Parity,
            Problem::Addition { .. } => TaskKind::Addition,
        }
    }

    /// Bits for parity; the longer operand's digit count for addition.
    pub fn length(&self) -> usize {
        match self {
            Problem::Parity(bits) => bits.len(),
            Problem::Addition { a, b } => a.len().max(b.len()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Problem::Parity(bits) => {
                if bits.is_empty() {
                    return Err(Error::Domain("empty bit sequence".into()));
                }
                if let Some(b) = bits.iter().find(|&&b| b > 1) {
                    return Err(Error::Domain(format!("bit value {b}")));
                }
            }
            Problem::Addition { a, b } => {
                for op in [a, b] {
                    check_operand(op)?;
                }
            }
        }
        Ok(())
    }
}

fn check_operand(op: &[u8]) -> Result<()> {
    if op.is_empty() {
        return Err(Error::Domain("empty operand".into()));
    }
    if let Some(d) = op.iter().find(|&&d| d > 9) {
        return Err(Error::Domain(format!("digit value {d}")));
    }
    if op.len() > 1 && op[0] == 0 {
        return Err(Error::Domain("operand has a leading zero".into()));
    }
    Ok(())
}

/// A problem plus its mnemonic assignment (empty for formats without one).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaskInstance {
    pub problem: Problem,
    pub mnemonics: Vec<TokenId>,
    pub seed: u64,
}

/// Running parity: `p[0] = b[0]`, `p[i] = p[i-1] ^ b[i]`.
pub fn parity_oracle(bits: &[u8]) -> Result<Vec<u8>> {
    Problem::Parity(bits.to_vec()).validate()?;
    let mut acc = 0;
    Ok(bits
        .iter()
        .map(|&b| {
            acc ^= b;
            acc
        })
        .collect())
}

/// Returns `(reversed, final)`: the sum least-significant first over
/// `max(|a|, |b|) + 1` places (carry place included, zero padded), and its reversal.
pub fn addition_oracle(a: &[u8], b: &[u8]) -> Result<(Vec<u8>, Vec<u8>)> {
    check_operand(a)?;
    check_operand(b)?;
    let places = a.len().max(b.len()) + 1;
    let digit = |op: &[u8], p: usize| if p < op.len() { op[op.len() - 1 - p] } else { 0 };
    let mut carry = 0;
    let reversed: Vec<u8> = (0..places)
        .map(|p| {
            let s = digit(a, p) + digit(b, p) + carry;
            carry = s / 10;
            s % 10
        })
        .collect();
    let mut fin = reversed.clone();
    fin.reverse();
    Ok((reversed, fin))
}

/// `n` distinct pool tokens, uniformly without replacement, in sampled order.
pub fn sample_mnemonics(pool: &MnemonicPool, n: usize, rng: &mut impl Rng) -> Result<Vec<TokenId>> {
    if n > pool.len() {
        return Err(Error::PoolExhausted {
            pool: pool.name.clone(),
            requested: n,
            available: pool.len(),
        });
    }
    Ok(index::sample(rng, pool.len(), n)
        .into_iter()
        .map(|i| pool.tokens[i])
        .collect())
}

/// Seeded convenience wrapper around [`sample_mnemonics`].
pub fn sample_mnemonics_seeded(pool: &MnemonicPool, n: usize, seed: u64) -> Result<Vec<TokenId>> {
    sample_mnemonics(pool, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_bits(n: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2)).collect()
}

/// Uniform value with exactly `len` digits (`0..=9` when `len == 1`).
pub fn sample_operand(len: usize, rng: &mut impl Rng) -> Vec<u8> {
    let mut digits: Vec<u8> = (0..len).map(|_| rng.gen_range(0..10)).collect();
    if len > 1 {
        digits[0] = rng.gen_range(1..10);
    }
    digits
}

/// Addition problem whose longer operand has exactly `len` digits. The
/// other operand's digit count is uniform in `1..=len`, and which side is
/// longer is a fair coin.
pub fn sample_addition(len: usize, rng: &mut impl Rng) -> Problem {
    let long = sample_operand(len, rng);
    let short = sample_operand(rng.gen_range(1..=len), rng);
    if rng.gen_bool(0.5) {
        Problem::Addition { a: long, b: short }
    } else {
        Problem::Addition { a: short, b: long }
    }
}

pub fn sample_problem(kind: TaskKind, len: usize, rng: &mut impl Rng) -> Result<Problem> {
    if len == 0 {
        return Err(Error::Domain("problem length must be positive".into()));
    }
    Ok(match kind {
        TaskKind::Parity => Problem::Parity(sample_bits(len, rng)),
        TaskKind::Addition => sample_addition(len, rng),
    })
}

/// Number of distinct problems at a length, saturating at `u128::MAX`.
pub fn problem_count(kind: TaskKind, len: usize) -> u128 {
    match kind {
        TaskKind::Parity => 1u128.checked_shl(len as u32).filter(|_| len < 128).unwrap_or(u128::MAX),
        TaskKind::Addition => {
            if len == 1 {
                return 100;
            }
            let p = |e: usize| 10u128.checked_pow(e as u32);
            match (p(2 * len), p(2 * len - 2)) {
                (Some(hi), Some(lo)) => hi - lo,
                _ => u128::MAX,
            }
        }
    }
}

/// SplitMix64 finaliser, used to derive independent seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for example `index` of length `len` under `master`.
pub fn example_seed(master: u64, len: usize, index: usize) -> u64 {
    mix64(mix64(mix64(master) ^ len as u64) ^ index as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_examples() {
        assert_eq!(parity_oracle(&[1, 0, 1, 0, 0, 1, 1]).unwrap(), vec![1, 1, 0, 0, 0, 1, 0]);
        assert_eq!(parity_oracle(&[0]).unwrap(), vec![0]);
        assert!(matches!(parity_oracle(&[]), Err(Error::Domain(_))));
        assert!(parity_oracle(&[2]).is_err());
    }

    #[test]
    fn addition_examples() {
        let (r, f) = addition_oracle(&[1, 2], &[9]).unwrap();
        assert_eq!((r, f), (vec![1, 2, 0], vec![0, 2, 1]));
        let (r, f) = addition_oracle(&[0], &[0]).unwrap();
        assert_eq!((r, f), (vec![0, 0], vec![0, 0]));
        let (r, _) = addition_oracle(&[9, 9], &[1]).unwrap();
        assert_eq!(r, vec![0, 0, 1]);
        assert!(addition_oracle(&[1, 10], &[1]).is_err());
        assert!(addition_oracle(&[0, 1], &[1]).is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(problem_count(TaskKind::Parity, 10), 1024);
        assert_eq!(problem_count(TaskKind::Addition, 1), 100);
        assert_eq!(problem_count(TaskKind::Addition, 2), 9900);
        assert_eq!(problem_count(TaskKind::Parity, 200), u128::MAX);
    }

    #[test]
    fn addition_sampler_hits_the_bucket() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for len in 1..8 {
            for _ in 0..50 {
                let p = sample_addition(len, &mut rng);
                assert_eq!(p.length(), len);
                p.validate().unwrap();
            }
        }
    }

    #[test]
    fn pool_exhaustion() {
        let pool = MnemonicPool {
            name: "p".into(),
            kind: super::super::vocab::PoolKind::WordLike,
            tokens: (0..5).collect(),
        };
        let mut all = sample_mnemonics_seeded(&pool, 5, 1).unwrap();
        all.sort();
        assert_eq!(all, pool.tokens);
        assert!(matches!(
            sample_mnemonics_seeded(&pool, 6, 1),
            Err(Error::PoolExhausted { requested: 6, .. })
        ));
    }
}
