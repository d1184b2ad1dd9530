//! Config files, run directories and scripted figure recipes.

pub mod commands;
pub mod config;
pub mod recipes;

pub use commands::{
    cmd_attribute, cmd_eval, cmd_gen, cmd_train, cmd_verify, latest_checkpoint, load_config, load_snapshot, runs_root,
    AttributionReport, EvalOptions, GenReport, VerifyReport,
};
pub use config::{format_lengths, AttributionConfig, EvalConfig, ExperimentConfig, Lengths};
pub use recipes::{arm_config, cmd_figures, recipe, FigureReport, Recipe, Scale, RECIPES};

use crate::error::Error;

/// Process exit status for an error: 2 for usage and configuration
/// problems, 1 for everything that failed at run time.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse(_) => 2,
        _ => 1,
    }
}
