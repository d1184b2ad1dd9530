use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scratchbench::experiment::{
    cmd_attribute, cmd_eval, cmd_figures, cmd_gen, cmd_train, cmd_verify, exit_code, load_config, runs_root, EvalOptions,
    ExperimentConfig, Lengths, Scale,
};
use scratchbench::tasks::PoolKind;
use scratchbench::Result;

#[derive(Parser)]
#[command(name = "scratchbench", version, about = "Length generalization bench for scratchpad and mnemonic formats")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the train/eval splits and a manifest for a config.
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to <runs>/data/<config stem>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model; the run directory receives metrics, logs and checkpoints.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to <runs>/<config stem>.
        #[arg(long)]
        run_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from the latest checkpoint in the run directory.
        #[arg(long)]
        resume: bool,
    },
    /// Length-accuracy curve of the latest checkpoint.
    Eval {
        run_dir: PathBuf,
        /// e.g. `1..60`, `1..60:5` or `8,16,32`.
        #[arg(long)]
        lengths: Option<Lengths>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        /// Score a stub that always answers correctly (pipeline self-test).
        #[arg(long)]
        oracle_stub: bool,
        /// Mnemonic pool at test time: word or integer.
        #[arg(long)]
        pool: Option<PoolKind>,
        #[arg(long)]
        stem: Option<String>,
    },
    /// Gradient x input maps for one held-out instance.
    Attribute {
        run_dir: PathBuf,
        #[arg(long)]
        length: Option<usize>,
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Scripted reproduction: fig2 fig3 fig4 fig5 fig6 fig7 b1-schemes b2-intervals b4-ood.
    Figures {
        recipe: String,
        #[arg(long, default_value = "desk")]
        scale: Scale,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to $SCRATCHBENCH_RUNS or ./runs.
        #[arg(long)]
        root: Option<PathBuf>,
    },
    /// Rebuild the dataset recorded in a run or data directory and compare hashes.
    Verify { dir: PathBuf },
}

fn stem_dir(base: PathBuf, config: &Path) -> PathBuf {
    base.join(config.file_stem().unwrap_or_default())
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Gen { config, out } => {
            let cfg = load_config(&config)?;
            let out = out.unwrap_or_else(|| stem_dir(runs_root().join("data"), &config));
            let rep = cmd_gen(&cfg, &out)?;
            print!("{}", rep.manifest);
            println!("wrote {}", out.display());
        }
        Cmd::Train { config, run_dir, seed, resume } => {
            let mut cfg: ExperimentConfig = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = run_dir.unwrap_or_else(|| stem_dir(runs_root(), &config));
            let rec = cmd_train(&cfg, &dir, resume)?;
            println!(
                "{} steps in {:.1}s, final probe exact match {:.4}",
                rec.steps,
                rec.wall_seconds,
                rec.final_probe_accuracy().unwrap_or(f64::NAN)
            );
            println!("run directory {}", dir.display());
        }
        Cmd::Eval { run_dir, lengths, n, threads, oracle_stub, pool, stem } => {
            let opts = EvalOptions {
                lengths: lengths.map(|l| l.0),
                n_per_length: n,
                threads,
                oracle_stub,
                pool,
                stem,
            };
            let curve = cmd_eval(&run_dir, &opts)?;
            print!("{}", curve.to_csv());
        }
        Cmd::Attribute { run_dir, length, index } => {
            let length = match length {
                Some(l) => l,
                None => scratchbench::experiment::load_snapshot(&run_dir)?.attribution.length,
            };
            let rep = cmd_attribute(&run_dir, length, index)?;
            print!("{}", rep.summary);
            for f in &rep.files {
                println!("wrote {}", f.display());
            }
        }
        Cmd::Figures { recipe, scale, seed, root } => {
            let root = root.unwrap_or_else(runs_root);
            let rep = cmd_figures(&recipe, scale, &root, seed, &mut |m| eprintln!("{m}"))?;
            print!("{}", rep.summary);
            println!("plot {}", rep.plot.display());
        }
        Cmd::Verify { dir } => {
            let rep = cmd_verify(&dir)?;
            println!("ok: {}", rep.checked.join(", "));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
