// Train a small model on standard parity for a few hundred steps, then
// write gradient x input maps for a longer test instance.
//
//     cargo run --release --example attribution_map [out-dir] [steps]

use std::path::Path;

use scratchbench::experiment::commands::attribute_model;
use scratchbench::experiment::recipes::{arm_config, Arm, Scale};
use scratchbench::train::train_run;

pub fn run(out: &Path, steps: usize) -> scratchbench::Result<()> {
    let arm = Arm {
        variant: "standard".parse()?,
        step_factor: 1,
        scheme: None,
    };
    let mut cfg = arm_config(&arm, Scale::Smoke, 0);
    cfg.train.steps_per_epoch = steps;
    cfg.train.eval_every = steps.max(1);
    let rec = train_run(&cfg.job(), None)?;
    let rep = attribute_model(&cfg, &rec.model, out, 12, 0)?;
    println!("{} x {} map, decoded exactly: {}", rep.signed.rows(), rep.signed.cols(), rep.exact);
    print!("{}", rep.summary);
    for f in &rep.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> scratchbench::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "runs/attribution_map".into());
    let steps = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);
    run(Path::new(&out), steps)
}
