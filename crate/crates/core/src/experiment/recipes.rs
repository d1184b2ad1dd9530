//! Scripted figure reproductions: train every arm, evaluate, overlay the
//! curves in one plot. Finished runs are cached by the hash of their
//! resolved config, so arms shared between recipes train once.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::commands::{attribute_model, write, cmd_train, curve_series, load_model, run_is_complete, train_window, x_label};
use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::eval::{length_curve, parse_curve_csv, LengthAccuracyCurve};
use crate::model::PosScheme;
use crate::plot::LinePlot;
use crate::tasks::{sha256_hex, FormatVariant, PoolKind, TaskKind, Vocab};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// Frozen desk budget (minutes per arm on one core).
    Desk,
    /// Tiny models and budgets that only exercise the plumbing.
    Smoke,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Smoke => "smoke",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "smoke" => Ok(Scale::Smoke),
            _ => Err(Error::Config(format!("unknown scale `{s}` (desk, smoke)"))),
        }
    }
}

/// One trained model.
#[derive(Clone, Debug, PartialEq)]
pub struct Arm {
    pub variant: FormatVariant,
    pub step_factor: usize,
    pub scheme: Option<PosScheme>,
}

/// One plotted curve: an arm evaluated with an optional pool override.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSpec {
    pub label: String,
    pub arm: Arm,
    pub eval_pool: Option<PoolKind>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recipe {
    pub name: &'static str,
    pub title: &'static str,
    pub curves: Vec<CurveSpec>,
    /// Attribution maps for every arm at this test length (parity only).
    pub attribution_length: Option<usize>,
}

pub const RECIPES: [&str; 9] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "b1-schemes", "b2-intervals", "b4-ood"];

fn v(s: &str) -> FormatVariant {
    s.parse().expect("built-in variant")
}

fn curve(label: &str, variant: &str) -> CurveSpec {
    CurveSpec {
        label: label.into(),
        arm: Arm {
            variant: v(variant),
            step_factor: 1,
            scheme: None,
        },
        eval_pool: None,
    }
}

pub fn recipe(name: &str) -> Result<Recipe> {
    let mnemonic_arms = || {
        vec![
            curve("standard", "standard"),
            curve("mnemonic", "mnemonic"),
            curve("mnemonic (forced)", "mnemonic+forced"),
        ]
    };
    let r = match name {
        "fig2" => Recipe {
            name: "fig2",
            title: "parity: scratchpad formats",
            curves: vec![curve("no scratchpad", "none"), curve("standard", "standard"), curve("interleaved", "interleaved")],
            attribution_length: None,
        },
        "fig3" => Recipe {
            name: "fig3",
            title: "parity: with and without mnemonics",
            curves: mnemonic_arms(),
            attribution_length: None,
        },
        "fig4" => Recipe {
            name: "fig4",
            title: "parity: mnemonics from random init, twice the steps",
            curves: mnemonic_arms()
                .into_iter()
                .map(|mut c| {
                    c.arm.step_factor = 2;
                    c
                })
                .collect(),
            attribution_length: None,
        },
        "fig5" => Recipe {
            name: "fig5",
            title: "parity: attribution with and without mnemonics",
            curves: vec![curve("standard", "standard"), curve("mnemonic", "mnemonic")],
            attribution_length: Some(40),
        },
        "fig6" => Recipe {
            name: "fig6",
            title: "parity: mnemonic variants",
            curves: vec![
                curve("mnemonic", "mnemonic"),
                curve("numeric", "numeric"),
                curve("constant", "constant"),
                curve("non-aligned", "non_aligned"),
                curve("cyclic", "cyclic"),
            ],
            attribution_length: None,
        },
        "fig7" => Recipe {
            name: "fig7",
            title: "addition: mnemonic formats",
            curves: vec![
                curve("no mnemonics", "add_plain"),
                curve("digit-aligned", "add_digit_aligned"),
                curve("zero-padded", "add_zero_padded"),
                curve("non-aligned", "add_non_aligned"),
            ],
            attribution_length: None,
        },
        "b1-schemes" => {
            let mut curves = Vec::new();
            for scheme in [PosScheme::Learned, PosScheme::Rotary] {
                for (label, variant) in [("standard", "standard"), ("interleaved", "interleaved"), ("mnemonic", "mnemonic")] {
                    let mut c = curve(&format!("{label} ({scheme})"), variant);
                    c.arm.scheme = Some(scheme);
                    curves.push(c);
                }
            }
            Recipe {
                name: "b1-schemes",
                title: "parity: learned and rotary positions",
                curves,
                attribution_length: None,
            }
        }
        "b2-intervals" => Recipe {
            name: "b2-intervals",
            title: "parity: mnemonic intervals",
            curves: [1, 2, 3, 5, 8]
                .iter()
                .map(|k| curve(&format!("interval {k}"), &format!("interval:{k}")))
                .collect(),
            attribution_length: None,
        },
        "b4-ood" => {
            let id = curve("ID mnemonics", "mnemonic");
            let mut ood = id.clone();
            ood.label = "OOD mnemonics".into();
            ood.eval_pool = Some(PoolKind::Integer);
            Recipe {
                name: "b4-ood",
                title: "parity: in- and out-of-distribution mnemonics",
                curves: vec![id, ood],
                attribution_length: None,
            }
        }
        _ => {
            return Err(Error::Config(format!("unknown recipe `{name}`; available: {}", RECIPES.join(", "))));
        }
    };
    Ok(r)
}

/// Resolved config for one arm.
pub fn arm_config(arm: &Arm, scale: Scale, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::desk(arm.variant);
    cfg.seed = seed;
    if scale == Scale::Smoke {
        cfg.model.n_layers = 1;
        cfg.model.n_heads = 2;
        cfg.model.d_model = 32;
        cfg.model.d_ff = 64;
        cfg.train.steps_per_epoch = 12;
        cfg.train.batch_size = 4;
        cfg.train.warmup_steps = 2;
        cfg.train.eval_every = 6;
        cfg.train.probe_size = 4;
        cfg.per_length = 12;
        cfg.holdout_per_length = 4;
        cfg.eval.n_per_length = 3;
        cfg.attribution.length = 8;
        match arm.variant.task() {
            TaskKind::Parity => {
                cfg.train_lengths = (4..=6).collect();
                cfg.eval.lengths = (1..=8).collect();
            }
            TaskKind::Addition => {
                cfg.train_lengths = (2..=3).collect();
                cfg.eval.lengths = (1..=4).collect();
            }
        }
    }
    cfg.train.steps_per_epoch *= arm.step_factor;
    if let Some(s) = arm.scheme {
        cfg.model.pos_scheme = s;
    }
    cfg
}

/// Cache directory for a config: readable variant slug plus a config hash.
pub fn run_dir_for(root: &Path, cfg: &ExperimentConfig) -> PathBuf {
    let slug: String = cfg
        .variant
        .to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '-' })
        .collect();
    let hash = sha256_hex(cfg.to_text().as_bytes());
    root.join("runs").join(format!("{slug}-{}", &hash[..12]))
}

#[derive(Clone, Debug)]
pub struct FigureReport {
    pub dir: PathBuf,
    pub plot: PathBuf,
    pub curves: Vec<(String, LengthAccuracyCurve)>,
    pub run_dirs: Vec<PathBuf>,
    pub summary: String,
}

/// Train (or reuse) every arm, evaluate and plot into `root/figures/<name>/`.
pub fn cmd_figures(name: &str, scale: Scale, root: &Path, seed: u64, log: &mut dyn FnMut(&str)) -> Result<FigureReport> {
    let r = recipe(name)?;
    let out = root.join("figures").join(format!("{}-{scale}", r.name));
    let mut curves = Vec::new();
    let mut run_dirs = Vec::new();
    let mut plot = LinePlot::accuracy(r.title, "");
    let mut summary = String::from("label,variant,eval_pool,run_dir,train_window_exact,longest_length,longest_exact\n");
    for spec in &r.curves {
        let cfg = arm_config(&spec.arm, scale, seed);
        let dir = run_dir_for(root, &cfg);
        if run_is_complete(&cfg, &dir) {
            log(&format!("{}: reusing {}", spec.label, dir.display()));
        } else {
            log(&format!("{}: training into {}", spec.label, dir.display()));
            let rec = cmd_train(&cfg, &dir, false)?;
            log(&format!("{}: trained in {:.1}s, probe exact {:.4}", spec.label, rec.wall_seconds, rec.final_probe_accuracy().unwrap_or(f64::NAN)));
        }
        let mut variant = cfg.eval_variant();
        if let Some(p) = spec.eval_pool {
            variant = variant.with_pool(p);
        }
        // the snapshot pins lengths, n and seed, so a finished run's curve can be kept
        let cached = dir.join(format!("figure-curve-{}.csv", spec.eval_pool.map_or("default".to_string(), |p| p.to_string())));
        let vocab = Vocab::new(cfg.vocab);
        let mut model = None;
        let c = match std::fs::read_to_string(&cached).ok().and_then(|t| parse_curve_csv(&t).ok()) {
            Some(rows) => LengthAccuracyCurve {
                task: variant.task(),
                variant,
                model_id: spec.label.clone(),
                rows,
            },
            None => {
                let m = load_model(&dir)?;
                let c = length_curve(&m, &variant, &cfg.eval.lengths, cfg.eval.n_per_length, cfg.seed, &vocab, cfg.eval.threads, &spec.label)?;
                write(&cached, c.to_csv())?;
                model = Some(m);
                c
            }
        };
        let (lo, hi) = train_window(&cfg).unwrap_or((0.0, 0.0));
        let longest = c.rows.last().map_or((0, f64::NAN), |row| (row.length, row.exact_match));
        let _ = writeln!(
            summary,
            "{},{},{},{},{:.6},{},{:.6}",
            spec.label,
            cfg.variant,
            spec.eval_pool.map_or("-".to_string(), |p| p.to_string()),
            dir.file_name().map_or(String::new(), |s| s.to_string_lossy().into_owned()),
            c.mean_exact(lo as usize, hi as usize),
            longest.0,
            longest.1
        );
        log(&format!("{}: window exact {:.4}, length {} exact {:.4}", spec.label, c.mean_exact(lo as usize, hi as usize), longest.0, longest.1));
        let slug: String = spec.label.chars().map(|ch| if ch.is_ascii_alphanumeric() { ch } else { '_' }).collect();
        write(&out.join("curves").join(format!("{slug}.csv")), c.to_csv())?;
        plot.x_label = x_label(variant.task()).into();
        plot.shade = train_window(&cfg);
        plot.series.push(curve_series(&spec.label, &c));
        if let Some(len) = r.attribution_length {
            let len = if scale == Scale::Smoke { cfg.attribution.length } else { len };
            let model = match model {
                Some(m) => m,
                None => load_model(&dir)?,
            };
            let rep = attribute_model(&cfg, &model, &out.join("attribution").join(&slug), len, 0)?;
            log(&format!("{}: attribution map {}x{} (exact {})", spec.label, rep.signed.rows(), rep.signed.cols(), rep.exact));
        }
        curves.push((spec.label.clone(), c));
        run_dirs.push(dir);
    }
    let plot_path = out.join(format!("{}.svg", r.name));
    write(&plot_path, plot.to_svg())?;
    write(&out.join("summary.csv"), &summary)?;
    Ok(FigureReport {
        dir: out,
        plot: plot_path,
        curves,
        run_dirs,
        summary,
    })
}
