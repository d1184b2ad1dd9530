//! The operations behind each command-line verb. Every function takes
//! explicit paths and returns what it wrote, so tests and examples can
//! drive them without a process boundary.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::attribution::{export_heatmap, grad_x_input_maps, AttributionMap};
use crate::error::{Error, Result};
use crate::eval::{completed_context, env_forced_decode, eval_examples, length_curve, DecodeOutcome, Decoder, LengthAccuracyCurve, OracleStub};
use crate::model::{load_checkpoint, Transformer};
use crate::plot::{LinePlot, Series};
use crate::tasks::{build_dataset, manifest, serialize_split, PoolKind, TaskKind, Vocab};
use crate::train::{resume_run, train_run, RunRecord};

pub const SNAPSHOT: &str = "config.snapshot";
pub const DONE: &str = "done";

/// Run root: `$SCRATCHBENCH_RUNS`, else `./runs`.
pub fn runs_root() -> PathBuf {
    std::env::var_os("SCRATCHBENCH_RUNS").map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

pub(crate) fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::parse(&read(path)?)
}

/// The resolved config stored in a run or dataset directory.
pub fn load_snapshot(dir: &Path) -> Result<ExperimentConfig> {
    load_config(&dir.join(SNAPSHOT))
}

#[derive(Clone, Debug)]
pub struct GenReport {
    pub files: Vec<PathBuf>,
    pub manifest: String,
}

/// Write `train.txt`, `eval.txt`, `manifest.txt` and the config snapshot.
pub fn cmd_gen(cfg: &ExperimentConfig, out_dir: &Path) -> Result<GenReport> {
    cfg.validate()?;
    let vocab = Vocab::new(cfg.vocab);
    let spec = cfg.dataset_spec();
    let ds = build_dataset(&spec, &vocab)?;
    let man = manifest(&spec, &ds, &vocab);
    let files = [
        ("train.txt", serialize_split(&ds.train, &vocab)),
        ("eval.txt", serialize_split(&ds.eval, &vocab)),
        ("manifest.txt", man.clone()),
        (SNAPSHOT, cfg.to_text()),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let p = out_dir.join(name);
        write(&p, body)?;
        written.push(p);
    }
    Ok(GenReport { files: written, manifest: man })
}

/// Checkpoint with the highest step in `run_dir/checkpoints`.
pub fn latest_checkpoint(run_dir: &Path) -> Result<Option<PathBuf>> {
    let dir = run_dir.join("checkpoints");
    let entries = match fs::read_dir(&dir) {
        Ok(e) => e,
        Err(_) => return Ok(None),
    };
    let mut best: Option<(u64, PathBuf)> = None;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        let step = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("step-")?.strip_suffix(".ckpt")?.parse::<u64>().ok());
        if let Some(s) = step {
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, path));
            }
        }
    }
    Ok(best.map(|(_, p)| p))
}

/// Train into `run_dir`. With `resume`, continue from the latest checkpoint
/// when one exists; otherwise start over and discard old checkpoints.
pub fn cmd_train(cfg: &ExperimentConfig, run_dir: &Path, resume: bool) -> Result<RunRecord> {
    cfg.validate()?;
    let snap = run_dir.join(SNAPSHOT);
    let text = cfg.to_text();
    let job = cfg.job();
    let ckpt = if resume { latest_checkpoint(run_dir)? } else { None };
    if let Some(c) = &ckpt {
        if read(&snap).ok().as_deref() != Some(text.as_str()) {
            return Err(Error::Config(format!("{} was written by a different config; cannot resume", c.display())));
        }
    } else {
        let old = run_dir.join("checkpoints");
        if old.exists() {
            fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
        }
    }
    let _ = fs::remove_file(run_dir.join(DONE));
    // curves cached by `figures` belong to the previous model
    if let Ok(entries) = fs::read_dir(run_dir) {
        for e in entries.flatten() {
            if e.file_name().to_string_lossy().starts_with("figure-curve-") {
                let _ = fs::remove_file(e.path());
            }
        }
    }
    write(&snap, &text)?;
    let vocab = Vocab::new(cfg.vocab);
    let ds = build_dataset(&job.data, &vocab)?;
    write(&run_dir.join("dataset.manifest"), manifest(&job.data, &ds, &vocab))?;
    let rec = match ckpt {
        Some(c) => resume_run(&job, Some(run_dir), &c)?,
        None => train_run(&job, Some(run_dir))?,
    };
    write(&run_dir.join(DONE), format!("steps = {}\n", rec.steps))?;
    Ok(rec)
}

/// True when `run_dir` holds a finished run of exactly `cfg`.
pub fn run_is_complete(cfg: &ExperimentConfig, run_dir: &Path) -> bool {
    run_dir.join(DONE).exists() && read(&run_dir.join(SNAPSHOT)).ok().as_deref() == Some(cfg.to_text().as_str())
}

pub fn load_model(run_dir: &Path) -> Result<Transformer<f32>> {
    let path = latest_checkpoint(run_dir)?.ok_or_else(|| Error::Config(format!("no checkpoint under {}", run_dir.display())))?;
    Ok(load_checkpoint::<f32>(&path)?.model)
}

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    pub lengths: Option<Vec<usize>>,
    pub n_per_length: Option<usize>,
    pub threads: Option<usize>,
    /// Score the pipeline against a stub that always answers correctly.
    pub oracle_stub: bool,
    /// Evaluate with mnemonics from another pool.
    pub pool: Option<PoolKind>,
    /// File stem for the outputs (default `curve`).
    pub stem: Option<String>,
}

pub fn x_label(task: TaskKind) -> &'static str {
    match task {
        TaskKind::Parity => "number of bits",
        TaskKind::Addition => "number of digits",
    }
}

pub fn train_window(cfg: &ExperimentConfig) -> Option<(f64, f64)> {
    let lo = *cfg.train_lengths.iter().min()?;
    let hi = *cfg.train_lengths.iter().max()?;
    Some((lo as f64, hi as f64))
}

pub fn curve_series(label: &str, curve: &LengthAccuracyCurve) -> Series {
    Series {
        label: label.to_string(),
        points: curve.rows.iter().map(|r| (r.length as f64, r.exact_match)).collect(),
    }
}

/// Evaluate the latest checkpoint in `run_dir` and write `<stem>.csv` and
/// `<stem>.svg` there.
pub fn cmd_eval(run_dir: &Path, opts: &EvalOptions) -> Result<LengthAccuracyCurve> {
    let cfg = load_snapshot(run_dir)?;
    let lengths = opts.lengths.clone().unwrap_or_else(|| cfg.eval.lengths.clone());
    if lengths.is_empty() {
        return Err(Error::Config("no evaluation lengths".into()));
    }
    let n = opts.n_per_length.unwrap_or(cfg.eval.n_per_length);
    let threads = opts.threads.unwrap_or(cfg.eval.threads).max(1);
    let mut variant = cfg.eval_variant();
    if let Some(p) = opts.pool {
        variant = variant.with_pool(p);
        variant.validate()?;
    }
    let vocab = Vocab::new(cfg.vocab);
    let curve = if opts.oracle_stub {
        let examples = eval_examples(&variant, &lengths, n, cfg.seed, &vocab)?;
        let stub = OracleStub::new(&examples)?;
        length_curve(&stub, &variant, &lengths, n, cfg.seed, &vocab, threads, "oracle-stub")?
    } else {
        let model = load_model(run_dir)?;
        let id = run_dir.file_name().map_or("model".into(), |s| s.to_string_lossy().into_owned());
        length_curve(&model, &variant, &lengths, n, cfg.seed, &vocab, threads, &id)?
    };
    let stem = opts.stem.clone().unwrap_or_else(|| "curve".into());
    write(&run_dir.join(format!("{stem}.csv")), curve.to_csv())?;
    let mut plot = LinePlot::accuracy(&format!("{} / {}", variant.task(), variant), x_label(variant.task()));
    plot.shade = train_window(&cfg);
    plot.series.push(curve_series(&variant.to_string(), &curve));
    write(&run_dir.join(format!("{stem}.svg")), plot.to_svg())?;
    Ok(curve)
}

#[derive(Clone, Debug)]
pub struct AttributionReport {
    pub signed: AttributionMap,
    pub l2: AttributionMap,
    pub files: Vec<PathBuf>,
    /// Model output matched the ground truth on every target.
    pub exact: bool,
    pub summary: String,
}

/// Attribution maps for one eval instance of `length`, decoded with
/// environment forcing. Writes into `run_dir/attribution/`.
pub fn cmd_attribute(run_dir: &Path, length: usize, index: usize) -> Result<AttributionReport> {
    let cfg = load_snapshot(run_dir)?;
    let model = load_model(run_dir)?;
    attribute_model(&cfg, &model, &run_dir.join("attribution"), length, index)
}

pub fn attribute_model(
    cfg: &ExperimentConfig,
    model: &Transformer<f32>,
    out_dir: &Path,
    length: usize,
    index: usize,
) -> Result<AttributionReport> {
    if length == 0 {
        return Err(Error::Config("attribution length must be positive".into()));
    }
    let vocab = Vocab::new(cfg.vocab);
    let variant = cfg.eval_variant();
    let examples = eval_examples(&variant, &[length], index + 1, cfg.seed, &vocab)?;
    let ex = &examples[index];
    let preds = match env_forced_decode(model as &dyn Decoder, ex)? {
        DecodeOutcome::Completed(p) => p,
        DecodeOutcome::Overflow { position, max_seq_len } => return Err(Error::PositionOverflow { position, max_seq_len }),
    };
    let exact = ex.targets().zip(&preds).all(|(p, &t)| ex.tokens[p] == t);
    let context = completed_context(ex, &preds)?;
    let (signed, l2) = grad_x_input_maps(model, ex, &context, &vocab)?;
    let stem = format!("len{length}");
    let mut files = export_heatmap(&signed, out_dir, &format!("{stem}-signed"))?;
    files.extend(export_heatmap(&l2, out_dir, &format!("{stem}-l2"))?);
    let mut summary = format!("# {} rows x {} target columns, exact = {exact}\n", signed.rows(), signed.cols());
    summary.push_str("column,target_position,argmax_row,argmax_token\n");
    for (c, (p, arg)) in ex.targets().zip(signed.column_argmax()).enumerate() {
        let (row, tok) = match arg {
            Some(r) => (r.to_string(), signed.row_labels[r].clone()),
            None => ("-".into(), "-".into()),
        };
        summary.push_str(&format!("{},{p},{row},{tok}\n", c + 1));
    }
    let sp = out_dir.join(format!("{stem}-summary.csv"));
    write(&sp, &summary)?;
    files.push(sp);
    Ok(AttributionReport {
        signed,
        l2,
        files,
        exact,
        summary,
    })
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub checked: Vec<String>,
}

/// Rebuild the dataset described by the snapshot in `dir` and compare with
/// the recorded manifest (`manifest.txt` from gen or `dataset.manifest`
/// from train). Also checks `train.txt`/`eval.txt` when present.
pub fn cmd_verify(dir: &Path) -> Result<VerifyReport> {
    let cfg = load_snapshot(dir)?;
    let vocab = Vocab::new(cfg.vocab);
    let spec = cfg.dataset_spec();
    let ds = build_dataset(&spec, &vocab)?;
    let expected = manifest(&spec, &ds, &vocab);
    let mut checked = Vec::new();
    for name in ["manifest.txt", "dataset.manifest"] {
        let p = dir.join(name);
        if p.exists() {
            if read(&p)? != expected {
                return Err(Error::Verify(format!("{} does not match the rebuilt dataset", p.display())));
            }
            checked.push(name.to_string());
        }
    }
    for (name, split) in [("train.txt", &ds.train), ("eval.txt", &ds.eval)] {
        let p = dir.join(name);
        if p.exists() {
            if read(&p)? != serialize_split(split, &vocab) {
                return Err(Error::Verify(format!("{} differs from the rebuilt split", p.display())));
            }
            checked.push(name.to_string());
        }
    }
    if checked.is_empty() {
        return Err(Error::Verify(format!("nothing to verify in {}", dir.display())));
    }
    Ok(VerifyReport { checked })
}
