// Run one scripted figure end to end through the library API.
//
//     cargo run --release --example figure_recipe -- fig2 smoke
//     cargo run --release --example figure_recipe -- b4-ood desk

use std::path::Path;

use scratchbench::experiment::{cmd_figures, Scale};

pub fn run(recipe: &str, scale: Scale, root: &Path) -> scratchbench::Result<()> {
    let rep = cmd_figures(recipe, scale, root, 0, &mut |m| eprintln!("{m}"))?;
    print!("{}", rep.summary);
    println!("plot {}", rep.plot.display());
    Ok(())
}

fn main() -> scratchbench::Result<()> {
    let mut args = std::env::args().skip(1);
    let recipe = args.next().unwrap_or_else(|| "fig2".into());
    let scale: Scale = args.next().as_deref().unwrap_or("smoke").parse()?;
    run(&recipe, scale, &scratchbench::experiment::runs_root())
}
