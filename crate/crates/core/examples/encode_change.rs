//! Change vectors from each query-back variant of an untrained model.
//!
//! cargo run --release --example encode_change

use changerep::harness::model::learn_vocab;
use changerep::harness::{ChangeModel, CorpusRecord, RunConfig};
use changerep::queryback::Variant;

fn main() -> anyhow::Result<()> {
    let record = CorpusRecord::from_texts(
        "example",
        "let total = 0;\nfor x in items {\n    total += x;\n}\n",
        "let mut total = 0;\nfor x in items.iter() {\n    total += x;\n}\nprintln!(\"{}\", total);\n",
    );
    for variant in [Variant::Token, Variant::Line, Variant::Hybrid, Variant::Pooled] {
        let config = RunConfig {
            variant,
            ..Default::default()
        };
        let vocab = learn_vocab(std::slice::from_ref(&record), &config)?;
        let model = ChangeModel::new(config, vocab)?;
        let sample = model.prepare(&record)?;
        let (v, diag) = model.represent(&sample, None)?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        println!("{:<7} dim {:>3}  |v| {:.3}  {}", variant.name(), v.len(), norm, serde_json::to_string(&diag)?);
    }
    Ok(())
}
