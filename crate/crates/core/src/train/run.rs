use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::batch::assemble_batch;
use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::{score_examples, Decoder};
use crate::math::{adam_update, AdamState, LrSchedule, Tape};
use crate::model::{init_model, load_checkpoint, save_checkpoint, Checkpoint, LossPath, ModelConfig, Transformer};
use crate::tasks::instance::mix64;
use crate::tasks::{build_dataset, instantiate, Dataset, DatasetSpec, FormattedExample, Vocab, VocabSpec};

const TRAIN_DOMAIN: u64 = 0x7472_6169_6e5f_7374;
pub const METRICS_HEADER: &str = "step,split,length,accuracy,loss";

/// Everything a training run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainJob {
    pub model: ModelConfig,
    pub data: DatasetSpec,
    pub vocab: VocabSpec,
    pub train: TrainConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub step: usize,
    pub split: String,
    /// `None` for the aggregate row.
    pub length: Option<usize>,
    pub accuracy: f64,
    pub loss: f64,
}

impl MetricRow {
    pub fn to_csv(&self) -> String {
        let len = self.length.map_or("all".to_string(), |l| l.to_string());
        format!("{},{},{},{:.6},{:.6}", self.step, self.split, len, self.accuracy, self.loss)
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse(format!("bad metrics row `{line}`"));
        if f.len() != 5 {
            return Err(bad());
        }
        Ok(MetricRow {
            step: f[0].parse().map_err(|_| bad())?,
            split: f[1].to_string(),
            length: match f[2] {
                "all" => None,
                l => Some(l.parse().map_err(|_| bad())?),
            },
            accuracy: f[3].parse().map_err(|_| bad())?,
            loss: f[4].parse().map_err(|_| bad())?,
        })
    }
}

pub struct RunRecord {
    pub job: TrainJob,
    pub metrics: Vec<MetricRow>,
    pub checkpoints: Vec<PathBuf>,
    pub wall_seconds: f64,
    pub steps: usize,
    pub model: Transformer<f32>,
    pub dataset: Dataset,
}

impl RunRecord {
    /// Final aggregate probe accuracy.
    pub fn final_probe_accuracy(&self) -> Option<f64> {
        self.metrics
            .iter()
            .rev()
            .find(|r| r.split == "probe" && r.length.is_none())
            .map(|r| r.accuracy)
    }
}

/// Fixed probe subset of the eval split: round-robin over lengths.
pub fn probe_set(eval: &[FormattedExample], size: usize) -> Vec<FormattedExample> {
    let mut by_len: BTreeMap<usize, Vec<&FormattedExample>> = BTreeMap::new();
    for ex in eval {
        by_len.entry(ex.length()).or_default().push(ex);
    }
    let mut out = Vec::with_capacity(size);
    let mut i = 0;
    while out.len() < size {
        let before = out.len();
        for list in by_len.values() {
            if out.len() < size {
                if let Some(ex) = list.get(i) {
                    out.push((*ex).clone());
                }
            }
        }
        if out.len() == before {
            break;
        }
        i += 1;
    }
    out.sort_by_key(|e| e.length());
    out
}

/// Mean teacher-forced loss and target accuracy per length.
pub fn teacher_forced_stats(
    model: &Transformer<f32>,
    examples: &[FormattedExample],
    pad: u32,
    batch_size: usize,
) -> Result<BTreeMap<usize, (f64, f64)>> {
    let mut by_len: BTreeMap<usize, Vec<&FormattedExample>> = BTreeMap::new();
    for ex in examples {
        by_len.entry(ex.length()).or_default().push(ex);
    }
    let mut out = BTreeMap::new();
    for (len, list) in by_len {
        let (mut loss_sum, mut targets, mut correct) = (0.0, 0usize, 0usize);
        for chunk in list.chunks(batch_size.max(1)) {
            let b = assemble_batch(chunk, pad, usize::MAX)?;
            let mut tape = Tape::new();
            let out = model.next_token_loss(&mut tape, &b.tokens, &b.target_mask, b.batch, b.width, &b.lens, LossPath::TargetRows)?;
            loss_sum += tape.value(out.loss).item()? as f64 * out.targets as f64;
            targets += out.targets;
            correct += out.correct;
        }
        out.insert(len, (loss_sum / targets.max(1) as f64, correct as f64 / targets.max(1) as f64));
    }
    Ok(out)
}

struct Outputs {
    dir: PathBuf,
    metrics: File,
    log: File,
}

impl Outputs {
    fn open(dir: &Path, resume_step: Option<usize>) -> Result<Self> {
        fs::create_dir_all(dir.join("checkpoints")).map_err(|e| Error::io(dir, e))?;
        let metrics_path = dir.join("metrics.csv");
        let mut kept = String::from(METRICS_HEADER);
        kept.push('\n');
        if let Some(step) = resume_step {
            // Rows past the checkpoint are re-derived by the resumed run.
            if let Ok(old) = fs::read_to_string(&metrics_path) {
                for line in old.lines().skip(1).filter(|l| !l.is_empty()) {
                    if MetricRow::parse(line)?.step <= step {
                        kept.push_str(line);
                        kept.push('\n');
                    }
                }
            }
        }
        fs::write(&metrics_path, kept).map_err(|e| Error::io(&metrics_path, e))?;
        let metrics = OpenOptions::new().append(true).open(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
        let log_path = dir.join("log.txt");
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| Error::io(&log_path, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            metrics,
            log,
        })
    }

    fn rows(&mut self, rows: &[MetricRow]) -> Result<()> {
        let mut text = String::new();
        for r in rows {
            text.push_str(&r.to_csv());
            text.push('\n');
        }
        self.metrics
            .write_all(text.as_bytes())
            .and_then(|_| self.metrics.flush())
            .map_err(|e| Error::io(self.dir.join("metrics.csv"), e))
    }

    fn log(&mut self, msg: &str) {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let _ = writeln!(self.log, "[{secs:.3}] {msg}");
    }
}

/// Train from scratch.
pub fn train_run(job: &TrainJob, run_dir: Option<&Path>) -> Result<RunRecord> {
    run(job, run_dir, None)
}

/// Continue a run from a saved checkpoint. With the same job this reproduces
/// the uninterrupted run bit for bit.
pub fn resume_run(job: &TrainJob, run_dir: Option<&Path>, checkpoint: &Path) -> Result<RunRecord> {
    let ckpt = load_checkpoint::<f32>(checkpoint)?;
    if ckpt.model.config != job.model {
        return Err(Error::Config("checkpoint model config differs from the job".into()));
    }
    run(job, run_dir, Some(ckpt))
}

fn step_rng(seed: u64, step: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(mix64(seed ^ TRAIN_DOMAIN) ^ step as u64))
}

fn run(job: &TrainJob, run_dir: Option<&Path>, resume: Option<Checkpoint<f32>>) -> Result<RunRecord> {
    let started = Instant::now();
    let cfg = &job.train;
    cfg.validate()?;
    job.model.validate()?;
    let vocab = Vocab::new(job.vocab);
    if vocab.len() > job.model.vocab_size {
        return Err(Error::Config(format!(
            "model vocab_size {} is smaller than the task vocabulary ({})",
            job.model.vocab_size,
            vocab.len()
        )));
    }
    let dataset = build_dataset(&job.data, &vocab)?;
    let mut by_len: BTreeMap<usize, Vec<&FormattedExample>> = BTreeMap::new();
    for ex in &dataset.train {
        by_len.entry(ex.length()).or_default().push(ex);
    }
    let buckets: Vec<Vec<&FormattedExample>> = by_len.into_values().collect();
    if buckets.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    let probe = probe_set(&dataset.eval, cfg.probe_size);
    let total = cfg.total_steps();
    let schedule = LrSchedule::new(cfg.base_lr, cfg.warmup_steps);
    let resample = cfg.resample_mnemonics && job.data.variant.family.samples_pool();

    let (mut model, mut adam, start) = match resume {
        Some(c) => {
            let adam = c.optimizer.ok_or_else(|| Error::Format("checkpoint has no optimizer state".into()))?;
            (c.model, adam, c.step as usize)
        }
        None => {
            let m = init_model::<f32>(&job.model)?;
            let a = AdamState::new(m.num_params(), cfg.base_lr);
            (m, a, 0)
        }
    };
    let mut out = match run_dir {
        Some(d) => Some(Outputs::open(d, (start > 0).then_some(start))?),
        None => None,
    };
    if let Some(o) = out.as_mut() {
        o.log(&format!(
            "{} steps from step {start}, {} params, {} train / {} eval examples",
            total,
            model.num_params(),
            dataset.train.len(),
            dataset.eval.len()
        ));
    }

    let mut metrics = Vec::new();
    let mut checkpoints: Vec<PathBuf> = Vec::new();
    let (mut loss_acc, mut tgt_acc, mut cor_acc, mut n_acc) = (0.0f64, 0usize, 0usize, 0usize);
    let pad = vocab.pad();

    let mut evaluate = |step: usize,
                        model: &Transformer<f32>,
                        adam: &AdamState<f32>,
                        train_stats: Option<(f64, f64)>,
                        out: &mut Option<Outputs>|
     -> Result<Vec<MetricRow>> {
        let mut rows = Vec::new();
        if let Some((loss, acc)) = train_stats {
            rows.push(MetricRow {
                step,
                split: "train".into(),
                length: None,
                accuracy: acc,
                loss,
            });
        }
        if !probe.is_empty() {
            let scores = score_examples(model as &dyn Decoder, &probe, 1)?;
            let tf = teacher_forced_stats(model, &probe, pad, cfg.batch_size)?;
            let mut per_len: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
            for s in &scores {
                let e = per_len.entry(s.length).or_default();
                e.0 += s.exact as usize;
                e.1 += 1;
            }
            let (mut all_loss, mut all_n) = (0.0, 0usize);
            for (&len, &(hit, n)) in &per_len {
                let loss = tf.get(&len).map_or(f64::NAN, |v| v.0);
                all_loss += loss * n as f64;
                all_n += n;
                rows.push(MetricRow {
                    step,
                    split: "probe".into(),
                    length: Some(len),
                    accuracy: hit as f64 / n as f64,
                    loss,
                });
            }
            rows.push(MetricRow {
                step,
                split: "probe".into(),
                length: None,
                accuracy: scores.iter().filter(|s| s.exact).count() as f64 / scores.len() as f64,
                loss: all_loss / all_n.max(1) as f64,
            });
        }
        if let Some(o) = out.as_mut() {
            o.rows(&rows)?;
            let path = o.dir.join("checkpoints").join(format!("step-{step}.ckpt"));
            save_checkpoint(
                &path,
                &Checkpoint {
                    model: model.clone(),
                    optimizer: Some(adam.clone()),
                    step: step as u64,
                },
            )?;
            if !checkpoints.contains(&path) {
                checkpoints.push(path);
            }
            if cfg.keep_checkpoints > 0 {
                while checkpoints.len() > cfg.keep_checkpoints {
                    let old = checkpoints.remove(0);
                    let _ = fs::remove_file(&old);
                }
            }
            if let Some(r) = rows.last() {
                o.log(&format!("eval step {step}: probe exact {:.4} loss {:.4}", r.accuracy, r.loss));
            }
        }
        Ok(rows)
    };

    if start == 0 {
        metrics.extend(evaluate(0, &model, &adam, None, &mut out)?);
    }
    for step in start..total {
        let mut rng = step_rng(cfg.seed, step);
        let mut owned = Vec::with_capacity(cfg.batch_size);
        for slot in 0..cfg.batch_size {
            let bucket = &buckets[rng.gen_range(0..buckets.len())];
            let ex = bucket[rng.gen_range(0..bucket.len())];
            if resample {
                let s = mix64(rng.gen::<u64>() ^ slot as u64);
                owned.push(instantiate(ex.instance.problem.clone(), &ex.variant, &vocab, s)?);
            } else {
                owned.push(ex.clone());
            }
        }
        let refs: Vec<&FormattedExample> = owned.iter().collect();
        let batch = assemble_batch(&refs, pad, job.model.max_seq_len)?;
        let mut tape = Tape::new();
        let lo = model.next_token_loss(&mut tape, &batch.tokens, &batch.target_mask, batch.batch, batch.width, &batch.lens, LossPath::TargetRows)?;
        let loss = tape.value(lo.loss).item()? as f64;
        let grads = tape.backward(lo.loss)?;
        model.params.zero_grads();
        model.params.absorb_grads(&lo.forward.params, &grads)?;
        let norm = model.params.clip_grads(cfg.clip_norm);
        let k = step + 1;
        let lr = schedule.lr_at(k);
        if !loss.is_finite() || !norm.is_finite() {
            if let Some(o) = out.as_mut() {
                o.log(&format!("non-finite at step {k}: loss {loss} grad-norm {norm} lr {lr}"));
            }
            return Err(Error::NonFinite { step: k, lr, grad_norm: norm });
        }
        adam_update(&mut model.params, &mut adam, lr)?;
        model.params.zero_grads();
        loss_acc += loss;
        tgt_acc += lo.targets;
        cor_acc += lo.correct;
        n_acc += 1;
        if k % cfg.eval_every == 0 || k == total {
            let stats = (loss_acc / n_acc as f64, cor_acc as f64 / tgt_acc.max(1) as f64);
            metrics.extend(evaluate(k, &model, &adam, Some(stats), &mut out)?);
            (loss_acc, tgt_acc, cor_acc, n_acc) = (0.0, 0, 0, 0);
        }
    }
    let wall = started.elapsed().as_secs_f64();
    if let Some(o) = out.as_mut() {
        o.log(&format!("done in {wall:.1}s"));
    }
    Ok(RunRecord {
        job: job.clone(),
        metrics,
        checkpoints,
        wall_seconds: wall,
        steps: total,
        model,
        dataset,
    })
}
