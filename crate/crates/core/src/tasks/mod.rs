//! Parity and addition: oracles, layouts, datasets and few-shot prompts.

pub mod dataset;
pub mod fewshot;
pub mod format;
pub mod instance;
pub mod vocab;

pub use dataset::{build_dataset, example_to_line, line_to_tokens, manifest, serialize_split, sha256_hex, Dataset, DatasetSpec};
pub use fewshot::render_fewshot_prompt;
pub use format::{assign_mnemonics, instantiate, parse, render, render_addition, render_parity, Family, FormatVariant, FormattedExample};
pub use instance::{
    addition_oracle, example_seed, parity_oracle, problem_count, sample_mnemonics, sample_mnemonics_seeded, sample_problem, Problem,
    TaskInstance, TaskKind,
};
pub use vocab::{MnemonicPool, PoolKind, Role, TokenId, Vocab, VocabSpec};
