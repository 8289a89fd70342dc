//! Trains a classifier on the synthetic marker corpus and reports held-out
//! metrics.
//!
//! cargo run --release --example train_classifier -- [variant] [samples] [epochs] [learning-rate]

use std::time::Instant;

use changerep::harness::synthetic::marker_corpus;
use changerep::harness::{evaluate, train_with, RunConfig, Task};
use changerep::queryback::Variant;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let variant: Variant = args.first().map_or(Ok(Variant::Hybrid), |s| s.parse()).map_err(anyhow::Error::msg)?;
    let n: usize = args.get(1).map_or(Ok(400), |s| s.parse())?;
    let epochs: usize = args.get(2).map_or(Ok(3), |s| s.parse())?;
    let learning_rate: f64 = args.get(3).map_or(Ok(3e-4), |s| s.parse())?;

    let corpus = marker_corpus(n, 1);
    let split = n * 3 / 4;
    let (train, held_out) = corpus.split_at(split);
    let config = RunConfig {
        task: Task::Classify,
        variant,
        epochs,
        learning_rate,
        ..Default::default()
    };
    let start = Instant::now();
    let outcome = train_with(train, None, &config, None, |e| {
        eprintln!("epoch {:>2}  loss {:.4}  ({:.1}s)", e.epoch, e.train_loss, start.elapsed().as_secs_f64());
    })?;
    let eval = evaluate(&outcome.model, held_out, Task::Classify)?;
    println!("{}", serde_json::to_string(&eval.report)?);
    Ok(())
}
