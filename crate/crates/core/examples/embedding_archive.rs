//! Writes contextual embeddings to an archive and uses them in place of the
//! encoder.
//!
//! cargo run --release --example embedding_archive

use changerep::encoder::EmbeddingArchive;
use changerep::harness::model::learn_vocab;
use changerep::harness::synthetic::marker_corpus;
use changerep::harness::{ChangeModel, RunConfig};

fn main() -> anyhow::Result<()> {
    let corpus = marker_corpus(6, 3);
    let config = RunConfig::default();
    let model = ChangeModel::new(config.clone(), learn_vocab(&corpus, &config)?)?;

    let mut archive = EmbeddingArchive::new(config.model_dim);
    for r in &corpus {
        let sample = model.prepare(r)?;
        archive.insert(r.id.clone(), model.contextual_embeddings(&sample.prepared)?)?;
    }
    let mut bytes = Vec::new();
    archive.write_to(&mut bytes)?;
    println!("archive: {} records, {} bytes", corpus.len(), bytes.len());

    let archive = EmbeddingArchive::read_from(&bytes[..])?;
    for r in &corpus {
        let sample = model.prepare(r)?;
        let imported = model.imported_for(Some(&archive), &sample)?;
        let (from_archive, _) = model.represent(&sample, imported.as_ref())?;
        let (from_encoder, _) = model.represent(&sample, None)?;
        println!("{:<12} identical: {}", r.id, from_archive == from_encoder);
    }
    Ok(())
}
