//! Desk-scale bench for studying length generalization of small transformers
//! on parity and multi-digit addition with scratchpad and mnemonic formats.

pub mod error;
pub mod math;
pub mod attribution;
pub mod eval;
pub mod experiment;
pub mod model;
pub mod plot;
pub mod tasks;
pub mod train;

pub use error::{Error, Result};
