use std::fs;
use std::path::Path;

use scratchbench::experiment::recipes::Arm;
use scratchbench::experiment::{arm_config, cmd_eval, cmd_train, EvalOptions, ExperimentConfig, Scale};
use scratchbench::math::Tape;
use scratchbench::model::{init_model, LossPath};
use scratchbench::tasks::{build_dataset, Vocab};
use scratchbench::train::{assemble_batch, resume_run, train_run, MetricRow, METRICS_HEADER};
use scratchbench::Error;

fn smoke(variant: &str) -> ExperimentConfig {
    arm_config(
        &Arm {
            variant: variant.parse().unwrap(),
            step_factor: 1,
            scheme: None,
        },
        Scale::Smoke,
        0,
    )
}

fn read(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap()
}

#[test]
fn batches_pad_right_and_never_target_padding() {
    let cfg = smoke("mnemonic");
    let vocab = Vocab::new(cfg.vocab);
    let ds = build_dataset(&cfg.dataset_spec(), &vocab).unwrap();
    let exs: Vec<_> = [0, ds.train.len() - 1].iter().map(|&i| &ds.train[i]).collect();
    let b = assemble_batch(&exs, vocab.pad(), 512).unwrap();
    assert_eq!(b.width, exs.iter().map(|e| e.len()).max().unwrap());
    for (row, ex) in exs.iter().enumerate() {
        let toks = &b.tokens[row * b.width..(row + 1) * b.width];
        let mask = &b.target_mask[row * b.width..(row + 1) * b.width];
        assert_eq!(&toks[..ex.len()], &ex.tokens[..]);
        assert!(toks[ex.len()..].iter().all(|&t| t == vocab.pad()));
        assert!(!mask[ex.len()..].iter().any(|&m| m));
        assert_eq!(b.lens[row], ex.len());
    }
    assert_eq!(b.num_targets(), exs.iter().map(|e| e.num_targets()).sum::<usize>());
    assert!(matches!(assemble_batch(&exs, vocab.pad(), 10), Err(Error::Length { .. })));
    assert!(matches!(assemble_batch(&[], vocab.pad(), 10), Err(Error::Domain(_))));
}

#[test]
fn loss_gradient_is_exactly_zero_off_target() {
    for variant in ["standard", "mnemonic", "interleaved", "add_digit_aligned+forced"] {
        let cfg = smoke(variant);
        let vocab = Vocab::new(cfg.vocab);
        let ds = build_dataset(&cfg.dataset_spec(), &vocab).unwrap();
        let exs: Vec<_> = ds.train.iter().step_by(5).take(4).collect();
        let b = assemble_batch(&exs, vocab.pad(), 512).unwrap();
        let model = init_model::<f64>(&cfg.model).unwrap();
        let d = cfg.model.d_model;
        let v = cfg.model.vocab_size;
        let seq = b.width - 1;
        for path in [LossPath::Full, LossPath::TargetRows] {
            let mut tape = Tape::new();
            let out = model
                .next_token_loss(&mut tape, &b.tokens, &b.target_mask, b.batch, b.width, &b.lens, path)
                .unwrap();
            let grads = tape.backward(out.loss).unwrap();
            let hidden = grads.get_or_zeros(out.forward.hidden, b.batch * seq * d);
            let logits = (path == LossPath::Full).then(|| grads.get_or_zeros(out.logits, b.batch * seq * v));
            let mut nonzero_on_target = false;
            for row in 0..b.batch {
                for t in 0..seq {
                    let r = row * seq + t;
                    let target = b.target_mask[row * b.width + t + 1];
                    let h = &hidden[r * d..(r + 1) * d];
                    if target {
                        nonzero_on_target |= h.iter().any(|&g| g != 0.0);
                    } else {
                        assert!(h.iter().all(|&g| g == 0.0), "{variant} {path:?}: hidden row {r}");
                        if let Some(l) = &logits {
                            assert!(l[r * v..(r + 1) * v].iter().all(|&g| g == 0.0), "{variant}: logit row {r}");
                        }
                    }
                }
            }
            assert!(nonzero_on_target, "{variant}");
        }
    }
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let cfg = smoke("mnemonic");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        cmd_train(&cfg, d.path(), false).unwrap();
        cmd_eval(d.path(), &EvalOptions::default()).unwrap();
    }
    let [a, b] = [dirs[0].path(), dirs[1].path()];
    for f in ["metrics.csv", "curve.csv", "curve.svg", "config.snapshot", "dataset.manifest", "checkpoints/step-12.ckpt"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    // a different seed changes the metrics
    let mut other = cfg.clone();
    other.seed = 1;
    let c = tempfile::tempdir().unwrap();
    cmd_train(&other, c.path(), false).unwrap();
    assert_ne!(read(&a.join("metrics.csv")), read(&c.path().join("metrics.csv")));
}

#[test]
fn resumed_run_reproduces_the_uninterrupted_one() {
    let mut cfg = smoke("interleaved");
    cfg.train.keep_checkpoints = 0;
    cfg.train.eval_every = 4;
    let job = cfg.job();
    let full_dir = tempfile::tempdir().unwrap();
    let full = train_run(&job, Some(full_dir.path())).unwrap();
    let ckpt = full_dir.path().join("checkpoints/step-4.ckpt");
    assert!(ckpt.exists());

    let resumed_dir = tempfile::tempdir().unwrap();
    fs::copy(full_dir.path().join("metrics.csv"), resumed_dir.path().join("metrics.csv")).unwrap();
    let resumed = resume_run(&job, Some(resumed_dir.path()), &ckpt).unwrap();
    assert_eq!(resumed.model, full.model);
    assert_eq!(
        read(&full_dir.path().join("metrics.csv")),
        read(&resumed_dir.path().join("metrics.csv"))
    );
    assert_eq!(
        read(&full_dir.path().join("checkpoints/step-12.ckpt")),
        read(&resumed_dir.path().join("checkpoints/step-12.ckpt"))
    );
    // a job whose model differs from the checkpoint is refused
    let mut wrong = job.clone();
    wrong.model.d_ff += 1;
    assert!(matches!(resume_run(&wrong, None, &ckpt), Err(Error::Config(_))));
}

#[test]
fn zero_steps_only_evaluates_the_initial_model() {
    let mut cfg = smoke("standard");
    cfg.train.steps_per_epoch = 0;
    let dir = tempfile::tempdir().unwrap();
    let rec = cmd_train(&cfg, dir.path(), false).unwrap();
    assert_eq!(rec.steps, 0);
    assert_eq!(rec.model, init_model::<f32>(&cfg.job().model).unwrap());
    let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(METRICS_HEADER));
    let rows: Vec<MetricRow> = lines.map(|l| MetricRow::parse(l).unwrap()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.step == 0 && r.split == "probe"));
    assert!(dir.path().join("checkpoints/step-0.ckpt").exists());
}

#[test]
fn checkpoints_are_pruned_to_the_most_recent() {
    let cfg = smoke("none");
    let dir = tempfile::tempdir().unwrap();
    let rec = cmd_train(&cfg, dir.path(), false).unwrap();
    let mut names: Vec<String> = fs::read_dir(dir.path().join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, vec!["step-12.ckpt", "step-6.ckpt"]);
    assert_eq!(rec.checkpoints.len(), 2);
}
