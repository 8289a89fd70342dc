//! Corpus BLEU, classification metrics and AUC on hand-made predictions.
//!
//! cargo run --example score_predictions

use changerep::metrics::{auc, bleu_bnorm, classification_metrics, MetricReport};

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn main() -> anyhow::Result<()> {
    let candidates = ["fix null check in cursor handling", "add logging", "update version"].map(words);
    let references = ["fix null check for cursor", "add debug logging to parser", "update version"].map(words);
    println!("B-Norm BLEU {:.2}", bleu_bnorm(&candidates, &references)?);

    let probabilities = [0.91, 0.72, 0.40, 0.66, 0.15, 0.08, 0.55, 0.30];
    let labels = [1, 1, 1, 0, 0, 0, 1, 0];
    let m = classification_metrics(&probabilities, &labels, 0.5)?;
    let report = MetricReport::from_classification(&m, Some(auc(&probabilities, &labels)?));
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
