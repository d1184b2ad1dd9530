// Train the desk preset on interleaved parity (lengths 10 to 20) and score
// the held-out split. A few minutes on one core.
//
//     cargo run --release --example train_interleaved [run-dir]

use std::path::PathBuf;

use scratchbench::eval::score_examples;
use scratchbench::experiment::{cmd_train, ExperimentConfig};

fn main() -> scratchbench::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("runs/train_interleaved"), PathBuf::from);
    let cfg = ExperimentConfig::desk("interleaved".parse()?);
    let rec = cmd_train(&cfg, &dir, false)?;
    for row in rec.metrics.iter().filter(|r| r.length.is_none()) {
        println!("step {:>5} {:<5} accuracy {:.4} loss {:.4}", row.step, row.split, row.accuracy, row.loss);
    }
    let scores = score_examples(&rec.model, &rec.dataset.eval, 1)?;
    let exact = scores.iter().filter(|s| s.exact).count() as f64 / scores.len() as f64;
    println!("held-out exact match {exact:.4} over {} examples, {:.0}s of training", scores.len(), rec.wall_seconds);
    println!("run directory {}", dir.display());
    Ok(())
}
