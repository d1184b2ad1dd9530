// Print every layout for one parity and one addition problem, with the
// predicted tokens in brackets.
//
//     cargo run --example formats

use scratchbench::tasks::{instantiate, Family, FormatVariant, Problem, TaskKind, Vocab, VocabSpec};

pub fn run() -> scratchbench::Result<()> {
    let vocab = Vocab::new(VocabSpec::default());
    let parity = Problem::Parity(vec![1, 0, 1, 0, 0, 1, 1]);
    let addition = Problem::Addition { a: vec![1, 2], b: vec![9] };
    for family in Family::ALL {
        let problem = match family.task() {
            TaskKind::Parity => &parity,
            TaskKind::Addition => &addition,
        };
        let mut variants = vec![FormatVariant::new(family)];
        if family == Family::Interval {
            variants = vec![FormatVariant::interval(2)];
        }
        if family.has_mnemonics() {
            variants.push(variants[0].forced());
        }
        for variant in variants {
            let ex = instantiate(problem.clone(), &variant, &vocab, 7)?;
            let shown: Vec<String> = ex
                .tokens
                .iter()
                .zip(&ex.target_mask)
                .map(|(&t, &m)| if m { format!("[{}]", vocab.token(t)) } else { vocab.token(t).to_string() })
                .collect();
            println!("{:<26} {}", variant.to_string(), shown.join(" "));
        }
    }
    Ok(())
}

fn main() -> scratchbench::Result<()> {
    run()
}
