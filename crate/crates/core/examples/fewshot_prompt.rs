// Assemble an in-context prompt: the task statement, three solved
// demonstrations per length, then the query prompt.
//
//     cargo run --example fewshot_prompt

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scratchbench::tasks::{assign_mnemonics, instantiate, render_fewshot_prompt, sample_problem, FormatVariant, TaskInstance, TaskKind, Vocab, VocabSpec};

pub fn run() -> scratchbench::Result<()> {
    let vocab = Vocab::new(VocabSpec::default());
    let variant: FormatVariant = "mnemonic".parse()?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut demos = Vec::new();
    for len in 2..=4 {
        for i in 0..3 {
            demos.push(instantiate(sample_problem(TaskKind::Parity, len, &mut rng)?, &variant, &vocab, (len * 10 + i) as u64)?);
        }
    }
    let problem = sample_problem(TaskKind::Parity, 6, &mut rng)?;
    let mnemonics = assign_mnemonics(&problem, &variant, &vocab, 99)?;
    let query = TaskInstance {
        problem,
        mnemonics,
        seed: 99,
    };
    let prompt = render_fewshot_prompt(&demos, &query, &variant, &vocab)?;
    println!("{}", vocab.render(&prompt).replace(" <sep> ", "\n<sep> "));
    Ok(())
}

fn main() -> scratchbench::Result<()> {
    run()
}
