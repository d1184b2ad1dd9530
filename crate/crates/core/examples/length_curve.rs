// Length-accuracy curves without a trained model: a stub that always
// answers correctly, and one that always says `0`.
//
//     cargo run --example length_curve [out.svg]

use scratchbench::eval::{eval_examples, length_curve, ConstantStub, OracleStub};
use scratchbench::plot::{LinePlot, Series};
use scratchbench::tasks::{FormatVariant, Vocab, VocabSpec};

pub fn run(svg_out: Option<&std::path::Path>) -> scratchbench::Result<()> {
    let vocab = Vocab::new(VocabSpec::default());
    let variant: FormatVariant = "standard".parse()?;
    let lengths: Vec<usize> = (1..=12).collect();
    let examples = eval_examples(&variant, &lengths, 64, 0, &vocab)?;
    let oracle = OracleStub::new(&examples)?;
    let mut plot = LinePlot::accuracy("stub decoders on standard parity", "number of bits");
    plot.shade = Some((4.0, 8.0));
    for (label, curve) in [
        ("oracle", length_curve(&oracle, &variant, &lengths, 64, 0, &vocab, 1, "oracle")?),
        ("always 0", length_curve(&ConstantStub(vocab.digit(0)), &variant, &lengths, 64, 0, &vocab, 1, "zero")?),
    ] {
        println!("{label}:\n{}", curve.to_csv());
        plot.series.push(Series {
            label: label.into(),
            points: curve.rows.iter().map(|r| (r.length as f64, r.exact_match)).collect(),
        });
    }
    if let Some(p) = svg_out {
        std::fs::write(p, plot.to_svg()).map_err(|e| scratchbench::Error::Io { path: p.into(), source: e })?;
    }
    Ok(())
}

fn main() -> scratchbench::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from);
    run(out.as_deref())
}
