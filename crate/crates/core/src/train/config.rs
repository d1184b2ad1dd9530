use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tasks::TaskKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Paper,
    Desk,
    Custom,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
            Preset::Custom => "custom",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            "custom" => Ok(Preset::Custom),
            _ => Err(Error::Config(format!("unknown preset `{s}` (paper, desk, custom)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub preset: Preset,
    pub base_lr: f64,
    pub warmup_steps: usize,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub eval_every: usize,
    /// Runs here always start from random weights; kept for the record.
    pub from_scratch: bool,
    pub clip_norm: f64,
    pub probe_size: usize,
    /// Draw new mnemonics every time a training example is used.
    pub resample_mnemonics: bool,
    /// Most recent checkpoints kept on disk; 0 keeps all.
    pub keep_checkpoints: usize,
}

impl TrainConfig {
    /// Published protocol. Training from scratch doubles the epochs.
    pub fn paper(task: TaskKind) -> Self {
        let (lr, batch) = match task {
            TaskKind::Parity => (1e-6, 64),
            TaskKind::Addition => (2e-6, 32),
        };
        TrainConfig {
            preset: Preset::Paper,
            base_lr: lr,
            warmup_steps: 1000,
            epochs: 8,
            steps_per_epoch: 8000,
            batch_size: batch,
            seed: 0,
            eval_every: 1000,
            from_scratch: true,
            clip_norm: 1.0,
            probe_size: 200,
            resample_mnemonics: true,
            keep_checkpoints: 2,
        }
    }

    /// Frozen desk-scale budget.
    pub fn desk() -> Self {
        TrainConfig {
            preset: Preset::Desk,
            base_lr: 1e-3,
            warmup_steps: 100,
            epochs: 1,
            steps_per_epoch: 1500,
            batch_size: 32,
            seed: 0,
            eval_every: 250,
            from_scratch: true,
            clip_norm: 1.0,
            probe_size: 200,
            resample_mnemonics: true,
            keep_checkpoints: 2,
        }
    }

    pub fn total_steps(&self) -> usize {
        self.epochs * self.steps_per_epoch
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.base_lr.is_finite() && self.base_lr >= 0.0) {
            return Err(Error::Config(format!("bad base_lr {}", self.base_lr)));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        Ok(())
    }
}
