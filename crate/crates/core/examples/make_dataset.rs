// Build a train/eval split for interleaved parity and print its manifest.
//
//     cargo run --example make_dataset

use scratchbench::tasks::{build_dataset, example_to_line, manifest, DatasetSpec, Vocab, VocabSpec};

pub fn run() -> scratchbench::Result<()> {
    let vocab = Vocab::new(VocabSpec::default());
    let spec = DatasetSpec {
        variant: "interleaved".parse()?,
        lengths: (10..=20).collect(),
        per_length: 1000,
        holdout_per_length: 200,
        seed: 0,
    };
    let ds = build_dataset(&spec, &vocab)?;
    print!("{}", manifest(&spec, &ds, &vocab));
    println!("first training line:\n{}", example_to_line(&ds.train[0], &vocab));
    Ok(())
}

fn main() -> scratchbench::Result<()> {
    run()
}
