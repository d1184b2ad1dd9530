//! Flat sectioned `key = value` experiment files.
//!
//! ```text
//! seed = 0
//!
//! [model]
//! pos_scheme = linear_bias
//!
//! [task]
//! variant = interleaved
//! train_lengths = 10..20
//! ```
//!
//! Unknown sections or keys are errors. Keys left out take the preset
//! defaults, and [`ExperimentConfig::to_text`] writes every resolved value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::tasks::{DatasetSpec, FormatVariant, TaskKind, Vocab, VocabSpec};
use crate::train::{Preset, TrainConfig, TrainJob};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub lengths: Vec<usize>,
    pub n_per_length: usize,
    pub threads: usize,
    /// Alternative layout for evaluation (e.g. another mnemonic pool).
    pub variant: Option<FormatVariant>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributionConfig {
    pub enabled: bool,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub vocab: VocabSpec,
    pub variant: FormatVariant,
    pub train_lengths: Vec<usize>,
    pub per_length: usize,
    pub holdout_per_length: usize,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub attribution: AttributionConfig,
}

impl ExperimentConfig {
    pub fn task(&self) -> TaskKind {
        self.variant.task()
    }

    pub fn desk(variant: FormatVariant) -> Self {
        let vocab = VocabSpec {
            word_pool: 512,
            int_tokens: 64,
        };
        let (train_lengths, eval_lengths, per_length, holdout) = match variant.task() {
            TaskKind::Parity => ((10..=20).collect(), (1..=60).collect(), 1000, 200),
            TaskKind::Addition => ((5..=10).collect(), (1..=14).collect(), 2000, 32),
        };
        let mut cfg = ExperimentConfig {
            seed: 0,
            model: ModelConfig::default(),
            vocab,
            variant,
            train_lengths,
            per_length,
            holdout_per_length: holdout,
            train: TrainConfig::desk(),
            eval: EvalConfig {
                lengths: eval_lengths,
                n_per_length: 50,
                threads: 1,
                variant: None,
            },
            attribution: AttributionConfig {
                enabled: false,
                length: 40,
            },
        };
        cfg.sync_vocab_size();
        cfg
    }

    /// Published optimisation protocol on the desk architecture.
    pub fn paper(variant: FormatVariant) -> Self {
        let mut cfg = ExperimentConfig::desk(variant);
        cfg.train = TrainConfig::paper(variant.task());
        cfg
    }

    pub fn sync_vocab_size(&mut self) {
        self.model.vocab_size = Vocab::new(self.vocab).len();
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            variant: self.variant,
            lengths: self.train_lengths.clone(),
            per_length: self.per_length,
            holdout_per_length: self.holdout_per_length,
            seed: self.seed,
        }
    }

    pub fn job(&self) -> TrainJob {
        let mut model = self.model;
        model.seed = self.seed;
        let mut train = self.train.clone();
        train.seed = self.seed;
        TrainJob {
            model,
            data: self.dataset_spec(),
            vocab: self.vocab,
            train,
        }
    }

    pub fn eval_variant(&self) -> FormatVariant {
        self.eval.variant.unwrap_or(self.variant)
    }

    pub fn validate(&self) -> Result<()> {
        self.variant.validate()?;
        if let Some(v) = &self.eval.variant {
            v.validate()?;
            if v.task() != self.task() {
                return Err(Error::Config("eval variant must be for the same task".into()));
            }
        }
        self.model.validate()?;
        self.train.validate()?;
        if self.train_lengths.is_empty() {
            return Err(Error::Config("task.train_lengths is empty".into()));
        }
        if self.eval.lengths.is_empty() {
            return Err(Error::Config("eval.lengths is empty".into()));
        }
        if self.eval.n_per_length == 0 {
            return Err(Error::Config("eval.n_per_length must be positive".into()));
        }
        let need = Vocab::new(self.vocab).len();
        if self.model.vocab_size < need {
            return Err(Error::Config(format!("model.vocab_size must be at least {need}")));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        Self::from_document(doc)
    }

    fn from_document(mut doc: Document) -> Result<Self> {
        let variant: FormatVariant = doc.take("task", "variant")?.ok_or_else(|| Error::Config("task.variant is required".into()))?;
        let preset: Preset = doc.take("train", "preset")?.unwrap_or(Preset::Desk);
        let mut cfg = match preset {
            Preset::Paper => ExperimentConfig::paper(variant),
            _ => ExperimentConfig::desk(variant),
        };
        cfg.train.preset = preset;
        let mut explicit_vocab_size = None;
        macro_rules! set {
            ($section:literal, $key:literal, $field:expr) => {
                if let Some(v) = doc.take($section, $key)? {
                    $field = v;
                }
            };
        }
        set!("", "seed", cfg.seed);
        set!("model", "n_layers", cfg.model.n_layers);
        set!("model", "n_heads", cfg.model.n_heads);
        set!("model", "d_model", cfg.model.d_model);
        set!("model", "d_ff", cfg.model.d_ff);
        set!("model", "max_seq_len", cfg.model.max_seq_len);
        set!("model", "pos_scheme", cfg.model.pos_scheme);
        if let Some(v) = doc.take("model", "vocab_size")? {
            explicit_vocab_size = Some(v);
        }
        set!("task", "word_pool", cfg.vocab.word_pool);
        set!("task", "int_tokens", cfg.vocab.int_tokens);
        if let Some(Lengths(l)) = doc.take("task", "train_lengths")? {
            cfg.train_lengths = l;
        }
        set!("task", "per_length", cfg.per_length);
        set!("task", "holdout_per_length", cfg.holdout_per_length);
        set!("train", "base_lr", cfg.train.base_lr);
        set!("train", "warmup_steps", cfg.train.warmup_steps);
        set!("train", "epochs", cfg.train.epochs);
        set!("train", "steps_per_epoch", cfg.train.steps_per_epoch);
        set!("train", "batch_size", cfg.train.batch_size);
        set!("train", "eval_every", cfg.train.eval_every);
        set!("train", "from_scratch", cfg.train.from_scratch);
        set!("train", "clip_norm", cfg.train.clip_norm);
        set!("train", "probe_size", cfg.train.probe_size);
        set!("train", "resample_mnemonics", cfg.train.resample_mnemonics);
        set!("train", "keep_checkpoints", cfg.train.keep_checkpoints);
        if let Some(Lengths(l)) = doc.take("eval", "lengths")? {
            cfg.eval.lengths = l;
        }
        set!("eval", "n_per_length", cfg.eval.n_per_length);
        set!("eval", "threads", cfg.eval.threads);
        if let Some(v) = doc.take::<String>("eval", "variant")? {
            cfg.eval.variant = if v == "same" { None } else { Some(v.parse()?) };
        }
        set!("attribution", "enabled", cfg.attribution.enabled);
        set!("attribution", "length", cfg.attribution.length);
        doc.finish()?;
        cfg.sync_vocab_size();
        if let Some(v) = explicit_vocab_size {
            cfg.model.vocab_size = v;
        }
        if !cfg.train.from_scratch {
            return Err(Error::Config("only from-scratch training is supported (train.from_scratch = true)".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fully resolved text form; parsing it yields the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let m = &self.model;
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "n_layers = {}", m.n_layers);
        let _ = writeln!(s, "n_heads = {}", m.n_heads);
        let _ = writeln!(s, "d_model = {}", m.d_model);
        let _ = writeln!(s, "d_ff = {}", m.d_ff);
        let _ = writeln!(s, "vocab_size = {}", m.vocab_size);
        let _ = writeln!(s, "max_seq_len = {}", m.max_seq_len);
        let _ = writeln!(s, "pos_scheme = {}", m.pos_scheme);
        let _ = writeln!(s, "\n[task]");
        let _ = writeln!(s, "variant = {}", self.variant);
        let _ = writeln!(s, "train_lengths = {}", format_lengths(&self.train_lengths));
        let _ = writeln!(s, "per_length = {}", self.per_length);
        let _ = writeln!(s, "holdout_per_length = {}", self.holdout_per_length);
        let _ = writeln!(s, "word_pool = {}", self.vocab.word_pool);
        let _ = writeln!(s, "int_tokens = {}", self.vocab.int_tokens);
        let t = &self.train;
        let _ = writeln!(s, "\n[train]");
        let _ = writeln!(s, "preset = {}", t.preset);
        let _ = writeln!(s, "base_lr = {:e}", t.base_lr);
        let _ = writeln!(s, "warmup_steps = {}", t.warmup_steps);
        let _ = writeln!(s, "epochs = {}", t.epochs);
        let _ = writeln!(s, "steps_per_epoch = {}", t.steps_per_epoch);
        let _ = writeln!(s, "batch_size = {}", t.batch_size);
        let _ = writeln!(s, "eval_every = {}", t.eval_every);
        let _ = writeln!(s, "from_scratch = {}", t.from_scratch);
        let _ = writeln!(s, "clip_norm = {}", t.clip_norm);
        let _ = writeln!(s, "probe_size = {}", t.probe_size);
        let _ = writeln!(s, "resample_mnemonics = {}", t.resample_mnemonics);
        let _ = writeln!(s, "keep_checkpoints = {}", t.keep_checkpoints);
        let _ = writeln!(s, "\n[eval]");
        let _ = writeln!(s, "lengths = {}", format_lengths(&self.eval.lengths));
        let _ = writeln!(s, "n_per_length = {}", self.eval.n_per_length);
        let _ = writeln!(s, "threads = {}", self.eval.threads);
        let _ = writeln!(s, "variant = {}", self.eval.variant.map_or("same".to_string(), |v| v.to_string()));
        let _ = writeln!(s, "\n[attribution]");
        let _ = writeln!(s, "enabled = {}", self.attribution.enabled);
        let _ = writeln!(s, "length = {}", self.attribution.length);
        s
    }
}

/// Length lists: `10..20` (inclusive), `1..60:5` (stepped), or comma-separated mixes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lengths(pub Vec<usize>);

impl FromStr for Lengths {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad length list `{s}`"));
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once("..") {
                Some((a, rest)) => {
                    let (b, step) = match rest.split_once(':') {
                        Some((b, st)) => (b, st.parse::<usize>().map_err(|_| bad())?),
                        None => (rest, 1),
                    };
                    let a: usize = a.trim().parse().map_err(|_| bad())?;
                    let b: usize = b.trim().parse().map_err(|_| bad())?;
                    if step == 0 || b < a {
                        return Err(bad());
                    }
                    out.extend((a..=b).step_by(step));
                }
                None => out.push(part.parse().map_err(|_| bad())?),
            }
        }
        if out.contains(&0) {
            return Err(Error::Config("lengths must be positive".into()));
        }
        out.sort_unstable();
        out.dedup();
        Ok(Lengths(out))
    }
}

pub fn format_lengths(l: &[usize]) -> String {
    let contiguous = l.windows(2).all(|w| w[1] == w[0] + 1);
    match (l.first(), l.last()) {
        (Some(a), Some(b)) if contiguous && l.len() > 2 => format!("{a}..{b}"),
        _ => l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
    }
}

struct Document {
    entries: BTreeMap<(String, String), (usize, String)>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !["model", "task", "train", "eval", "attribution"].contains(&name) {
                    return Err(Error::Config(format!("line {}: unknown section [{name}]", i + 1)));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = (section.clone(), k.trim().to_string());
            if entries.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{}`", i + 1, key.1)));
            }
        }
        Ok(Document { entries })
    }

    fn take<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("line {line}: `{key}`: {e}"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some(((section, key), (line, _))) => {
                let full = if section.is_empty() { key } else { format!("{section}.{key}") };
                Err(Error::Config(format!("line {line}: unknown key `{full}`")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_text_round_trips() {
        let mut cfg = ExperimentConfig::desk("mnemonic+forced".parse().unwrap());
        cfg.seed = 9;
        cfg.eval.variant = Some("mnemonic+forced@integer".parse().unwrap());
        cfg.eval.lengths = vec![1, 5, 9];
        let text = cfg.to_text();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let base = "[task]\nvariant = interleaved\n";
        assert!(ExperimentConfig::parse(base).is_ok());
        for bad in [
            format!("{base}colour = red\n"),
            format!("{base}[model]\nwidth = 3\n"),
            format!("{base}[nope]\n"),
            format!("{base}variant = standard\n"),
            "[task]\nvariant = wobbly\n".to_string(),
            "[model]\nn_layers = 2\n".to_string(),
        ] {
            assert!(matches!(ExperimentConfig::parse(&bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn length_lists() {
        assert_eq!("10..13".parse::<Lengths>().unwrap().0, vec![10, 11, 12, 13]);
        assert_eq!("1..10:4,20".parse::<Lengths>().unwrap().0, vec![1, 5, 9, 20]);
        assert!("".parse::<Lengths>().unwrap().0.is_empty());
        assert!("5..2".parse::<Lengths>().is_err());
        assert!("0..2".parse::<Lengths>().is_err());
        assert_eq!(format_lengths(&[10, 11, 12]), "10..12");
        assert_eq!(format_lengths(&[1, 5]), "1,5");
    }
}
