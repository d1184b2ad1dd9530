use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Role tags; a token may carry several (`1` is a bit, a digit and an integer).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Pad,
    Structural,
    Text,
    Bit,
    Digit,
    Integer,
    Color,
    Mnemonic,
}

impl Role {
    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

pub const PAD: &str = "<pad>";
pub const SOS: &str = ">>>";
pub const EOS: &str = "===";
pub const REVERSAL: &str = "###";
pub const PLUS: &str = "+";
pub const CONSTANT_MNEMONIC: &str = "#";
pub const SEPARATOR: &str = "<sep>";
pub const STATEMENT: &[&str] = &[
    "Calculate", "the", "running", "parity", "of", "the", "sequence", "after", "===",
];
pub const COLORS: [&str; 10] = [
    "red", "green", "yellow", "blue", "orange", "purple", "pink", "brown", "black", "white",
];

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Which optional token families exist in a vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VocabSpec {
    /// Synthetic word-like mnemonic tokens.
    pub word_pool: usize,
    /// Integer tokens `10, 11, …` beyond the digits (the digits double as 0–9).
    pub int_tokens: usize,
}

impl Default for VocabSpec {
    fn default() -> Self {
        VocabSpec {
            word_pool: 4096,
            int_tokens: 1024,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoolKind {
    WordLike,
    Integer,
    Color,
}

impl fmt::Display for PoolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolKind::WordLike => "word",
            PoolKind::Integer => "integer",
            PoolKind::Color => "color",
        })
    }
}

impl std::str::FromStr for PoolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(PoolKind::WordLike),
            "integer" => Ok(PoolKind::Integer),
            "color" => Ok(PoolKind::Color),
            _ => Err(Error::Config(format!("unknown mnemonic pool `{s}` (word, integer, color)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MnemonicPool {
    pub name: String,
    pub kind: PoolKind,
    pub tokens: Vec<TokenId>,
}

impl MnemonicPool {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Closed token table. Every surface symbol is exactly one token and ids
/// are dense in `[0, len)`.
#[derive(Clone, Debug)]
pub struct Vocab {
    spec: VocabSpec,
    tokens: Vec<String>,
    roles: Vec<u16>,
    index: HashMap<String, TokenId>,
    digits_start: TokenId,
    ab_start: TokenId,
    colors_start: TokenId,
    ints_start: TokenId,
    words_start: TokenId,
}

impl Vocab {
    pub fn new(spec: VocabSpec) -> Self {
        let mut v = Vocab {
            spec,
            tokens: Vec::new(),
            roles: Vec::new(),
            index: HashMap::new(),
            digits_start: 0,
            ab_start: 0,
            colors_start: 0,
            ints_start: 0,
            words_start: 0,
        };
        v.add(PAD, &[Role::Pad]);
        for s in [SOS, EOS, REVERSAL, PLUS, SEPARATOR] {
            v.add(s, &[Role::Structural]);
        }
        v.add(CONSTANT_MNEMONIC, &[Role::Structural, Role::Mnemonic]);
        for w in STATEMENT {
            if !v.index.contains_key(*w) {
                v.add(w, &[Role::Text]);
            }
        }
        v.digits_start = v.next_id();
        for d in 0..10 {
            let roles: &[Role] = match d {
                0 => &[Role::Digit, Role::Bit],
                1 => &[Role::Digit, Role::Bit, Role::Integer],
                _ => &[Role::Digit, Role::Integer],
            };
            v.add(&d.to_string(), roles);
        }
        v.ab_start = v.next_id();
        v.add("a", &[Role::Bit]);
        v.add("b", &[Role::Bit]);
        v.colors_start = v.next_id();
        for c in COLORS {
            v.add(c, &[Role::Color, Role::Mnemonic]);
        }
        v.ints_start = v.next_id();
        for n in 0..spec.int_tokens {
            v.add(&(10 + n).to_string(), &[Role::Integer, Role::Mnemonic]);
        }
        v.words_start = v.next_id();
        for w in synthetic_words(spec.word_pool) {
            v.add(&w, &[Role::Mnemonic]);
        }
        v
    }

    fn next_id(&self) -> TokenId {
        self.tokens.len() as TokenId
    }

    fn add(&mut self, s: &str, roles: &[Role]) {
        let id = self.next_id();
        let prev = self.index.insert(s.to_string(), id);
        assert!(prev.is_none(), "duplicate token `{s}`");
        self.tokens.push(s.to_string());
        self.roles.push(roles.iter().fold(0, |acc, r| acc | r.bit()));
    }

    pub fn spec(&self) -> VocabSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    fn fixed(&self, token: &str) -> TokenId {
        self.index[token]
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn has_role(&self, id: TokenId, role: Role) -> bool {
        self.roles
            .get(id as usize)
            .is_some_and(|r| r & role.bit() != 0)
    }

    pub fn pad(&self) -> TokenId {
        0
    }

    pub fn sos(&self) -> TokenId {
        self.fixed(SOS)
    }

    pub fn eos(&self) -> TokenId {
        self.fixed(EOS)
    }

    pub fn reversal(&self) -> TokenId {
        self.fixed(REVERSAL)
    }

    pub fn plus(&self) -> TokenId {
        self.fixed(PLUS)
    }

    pub fn separator(&self) -> TokenId {
        self.fixed(SEPARATOR)
    }

    pub fn constant_mnemonic(&self) -> TokenId {
        self.fixed(CONSTANT_MNEMONIC)
    }

    pub fn digit(&self, d: u8) -> TokenId {
        assert!(d < 10, "digit {d}");
        self.digits_start + d as TokenId
    }

    /// Bit token: `0`/`1`, or `a`/`b` for the numeric-mnemonic layout.
    pub fn bit(&self, b: u8, letters: bool) -> TokenId {
        assert!(b < 2, "bit {b}");
        if letters {
            self.ab_start + b as TokenId
        } else {
            self.digits_start + b as TokenId
        }
    }

    /// Inverse of [`bit`](Self::bit).
    pub fn bit_value(&self, id: TokenId, letters: bool) -> Option<u8> {
        let base = if letters { self.ab_start } else { self.digits_start };
        (id >= base && id < base + 2).then(|| (id - base) as u8)
    }

    pub fn digit_value(&self, id: TokenId) -> Option<u8> {
        (id >= self.digits_start && id < self.digits_start + 10).then(|| (id - self.digits_start) as u8)
    }

    /// Single token for the integer `n`, if the vocabulary has one.
    pub fn integer(&self, n: usize) -> Option<TokenId> {
        match n {
            0..=9 => Some(self.digit(n as u8)),
            _ if n - 10 < self.spec.int_tokens => Some(self.ints_start + (n - 10) as TokenId),
            _ => None,
        }
    }

    pub fn color_cycle(&self, len: usize) -> Result<Vec<TokenId>> {
        if len == 0 || len > COLORS.len() {
            return Err(Error::Config(format!(
                "cycle length must be 1..={}, got {len}",
                COLORS.len()
            )));
        }
        Ok((0..len as TokenId).map(|i| self.colors_start + i).collect())
    }

    pub fn word_pool(&self) -> MnemonicPool {
        MnemonicPool {
            name: format!("word{}", self.spec.word_pool),
            kind: PoolKind::WordLike,
            tokens: (0..self.spec.word_pool as TokenId)
                .map(|i| self.words_start + i)
                .collect(),
        }
    }

    /// Integer tokens from 10 upward (excludes the digits, which double as bits).
    pub fn integer_pool(&self) -> MnemonicPool {
        MnemonicPool {
            name: format!("int{}", self.spec.int_tokens),
            kind: PoolKind::Integer,
            tokens: (0..self.spec.int_tokens as TokenId)
                .map(|i| self.ints_start + i)
                .collect(),
        }
    }

    pub fn pool(&self, kind: PoolKind) -> MnemonicPool {
        match kind {
            PoolKind::WordLike => self.word_pool(),
            PoolKind::Integer => self.integer_pool(),
            PoolKind::Color => MnemonicPool {
                name: "colors".into(),
                kind,
                tokens: self.color_cycle(COLORS.len()).unwrap(),
            },
        }
    }

    pub fn render(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .map(|&i| self.token(i))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Whitespace-separated token strings to ids.
    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>> {
        text.split_whitespace()
            .map(|t| {
                self.id(t)
                    .ok_or_else(|| Error::Parse(format!("unknown token `{t}`")))
            })
            .collect()
    }
}

/// Deterministic consonant-vowel words: two syllables first, then three.
fn synthetic_words(n: usize) -> Vec<String> {
    let syllables: Vec<String> = CONSONANTS
        .iter()
        .flat_map(|&c| VOWELS.iter().map(move |&v| format!("{}{}", c as char, v as char)))
        .collect();
    let mut words = Vec::with_capacity(n);
    let mut stems = vec![String::new()];
    while words.len() < n {
        stems = stems
            .iter()
            .flat_map(|s| syllables.iter().map(move |y| format!("{s}{y}")))
            .collect();
        if stems[0].len() >= 4 {
            words.extend(stems.iter().take(n - words.len()).cloned());
        }
    }
    words
}
