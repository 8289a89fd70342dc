//! Trains a commit message generator on the synthetic template corpus.
//!
//! cargo run --release --example train_generator -- [variant] [samples] [epochs] [learning-rate]

use std::time::Instant;

use changerep::harness::synthetic::template_corpus;
use changerep::harness::{evaluate, train_with, RunConfig, Task};
use changerep::queryback::Variant;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let variant: Variant = args.first().map_or(Ok(Variant::Hybrid), |s| s.parse()).map_err(anyhow::Error::msg)?;
    let n: usize = args.get(1).map_or(Ok(200), |s| s.parse())?;
    let epochs: usize = args.get(2).map_or(Ok(10), |s| s.parse())?;
    let learning_rate: f64 = args.get(3).map_or(Ok(5e-4), |s| s.parse())?;

    let corpus = template_corpus(n, 1);
    let (train, held_out) = corpus.split_at(n * 3 / 4);
    let config = RunConfig {
        task: Task::Generate,
        variant,
        epochs,
        learning_rate,
        ..Default::default()
    };
    let start = Instant::now();
    let outcome = train_with(train, None, &config, None, |e| {
        eprintln!("epoch {:>2}  loss {:.4}  ({:.1}s)", e.epoch, e.train_loss, start.elapsed().as_secs_f64());
    })?;
    for (name, records) in [("train", train), ("held-out", held_out)] {
        let eval = evaluate(&outcome.model, records, Task::Generate)?;
        println!("{name:<9} BLEU {:.2}", eval.report.bleu.unwrap_or(0.0));
        if name == "held-out" {
            for p in eval.predictions.iter().take(5) {
                println!("  {:<32} | {}", p.message.as_deref().unwrap_or(""), p.reference.as_deref().unwrap_or(""));
            }
        }
    }
    Ok(())
}
