use changerep::encoder::EmbeddingArchive;
use changerep::harness::synthetic::{marker_corpus, template_corpus};
use changerep::harness::{evaluate, evaluate_with, train, train_with, Checkpoint, ChangeModel, CorpusRecord, RunConfig, Task};
use changerep::harness::model::learn_vocab;
use changerep::queryback::Variant;
use changerep::Error;

fn small(task: Task, variant: Variant) -> RunConfig {
    RunConfig {
        task,
        variant,
        model_dim: 16,
        num_heads: 2,
        encoder_layers: 1,
        decoder_layers: 1,
        line_rows: 16,
        line_width: 16,
        epochs: 2,
        seed: 4,
        ..Default::default()
    }
}

#[test]
fn identical_seeds_give_identical_checkpoints() {
    let corpus = marker_corpus(24, 2);
    let config = small(Task::Classify, Variant::Hybrid);
    let a = train(&corpus, Some(&corpus[..6]), &config).unwrap();
    let b = train(&corpus, Some(&corpus[..6]), &config).unwrap();
    let bytes = |o: &changerep::harness::TrainOutcome| Checkpoint::from_model(&o.model, Some(&o.optimizer)).to_bytes().unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    assert_eq!(a.log, b.log);
    let other = train(&corpus, None, &RunConfig { seed: 5, ..config }).unwrap();
    assert_ne!(bytes(&a), bytes(&other));
}

#[test]
fn zero_learning_rate_leaves_parameters() {
    let corpus = marker_corpus(16, 3);
    let config = RunConfig {
        learning_rate: 0.0,
        epochs: 3,
        ..small(Task::Classify, Variant::Token)
    };
    let trained = train(&corpus, None, &config).unwrap();
    let fresh = ChangeModel::new(config.clone(), learn_vocab(&corpus, &config).unwrap()).unwrap();
    assert_eq!(trained.model.store, fresh.store);
    assert_eq!(trained.optimizer.step, 6);
}

#[test]
fn classifier_memorizes_sixteen_samples() {
    let corpus = marker_corpus(16, 5);
    let config = RunConfig {
        epochs: 250,
        max_steps: Some(500),
        ..small(Task::Classify, Variant::Hybrid)
    };
    let out = train(&corpus, None, &config).unwrap();
    let first = out.log[0].train_loss;
    let last = out.log.last().unwrap().train_loss;
    assert!(last < 0.05, "final loss {last}");
    assert!(last <= 0.1 * first, "{first} -> {last}");
    let eval = evaluate(&out.model, &corpus, Task::Classify).unwrap();
    assert_eq!(eval.report.accuracy, Some(1.0));
}

#[test]
fn generator_memorizes_sixteen_samples() {
    let corpus = template_corpus(16, 6);
    let config = RunConfig {
        epochs: 250,
        max_steps: Some(500),
        model_dim: 32,
        num_heads: 4,
        ..small(Task::Generate, Variant::Token)
    };
    let out = train(&corpus, None, &config).unwrap();
    let first = out.log[0].train_loss;
    let last = out.log.last().unwrap().train_loss;
    assert!(last <= 0.1 * first, "{first} -> {last}");
    let eval = evaluate(&out.model, &corpus, Task::Generate).unwrap();
    assert_eq!(eval.report.bleu, Some(100.0), "{:?}", eval.predictions);
}

#[test]
fn single_pair_is_reproduced_by_greedy_decoding() {
    let corpus = template_corpus(1, 8);
    let config = RunConfig {
        epochs: 150,
        ..small(Task::Generate, Variant::Line)
    };
    let out = train(&corpus, None, &config).unwrap();
    let sample = out.model.prepare(&corpus[0]).unwrap();
    let ids = out.model.generate(&sample, None).unwrap();
    assert_eq!(out.model.detokenize(&ids), corpus[0].message.clone().unwrap());
}

#[test]
fn evaluation_edge_cases() {
    let corpus = marker_corpus(8, 9);
    let config = RunConfig {
        epochs: 1,
        ..small(Task::Classify, Variant::Token)
    };
    let out = train(&corpus, None, &config).unwrap();
    let negatives: Vec<CorpusRecord> = corpus.iter().filter(|r| r.label == Some(0)).cloned().collect();
    let eval = evaluate(&out.model, &negatives, Task::Classify).unwrap();
    assert_eq!(eval.report.auc, None);
    assert!(eval.warnings.iter().any(|w| w.contains("AUC")));
    assert!(eval.report.accuracy.is_some());
    assert!(evaluate(&out.model, &[], Task::Classify).is_err());
    assert!(matches!(evaluate(&out.model, &corpus, Task::Generate), Err(Error::TaskMismatch { .. })));
    let json = serde_json::to_value(eval.report).unwrap();
    assert!(json["bleu"].is_null() && json["auc"].is_null());
}

#[test]
fn divergent_training_aborts() {
    let corpus = marker_corpus(16, 10);
    let config = RunConfig {
        learning_rate: 1e300,
        epochs: 5,
        ..small(Task::Classify, Variant::Token)
    };
    let err = train(&corpus, None, &config).unwrap_err();
    assert!(matches!(err, Error::NonFiniteLoss { .. } | Error::NonFiniteGradient(_)), "{err}");
}

#[test]
fn training_rejects_unusable_corpora() {
    let config = small(Task::Classify, Variant::Token);
    assert!(train(&[], None, &config).is_err());
    let unlabeled = vec![CorpusRecord::from_texts("x", "a\n", "b\n")];
    assert!(train(&unlabeled, None, &config).is_err());
}

#[test]
fn checkpoint_round_trip_and_corruption() {
    let corpus = template_corpus(6, 11);
    let out = train(&corpus, None, &small(Task::Generate, Variant::Hybrid)).unwrap();
    let ckpt = Checkpoint::from_model(&out.model, Some(&out.optimizer));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    ckpt.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded, ckpt);
    let path2 = dir.path().join("again.ckpt");
    loaded.save(&path2).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes, std::fs::read(&path2).unwrap());

    let model = loaded.to_model().unwrap();
    assert_eq!(model.store, out.model.store);
    let sample = model.prepare(&corpus[0]).unwrap();
    assert_eq!(model.generate(&sample, None).unwrap(), out.model.generate(&sample, None).unwrap());

    for cut in [0, 7, 12, 20, bytes.len() / 2, bytes.len() - 1] {
        let err = Checkpoint::from_bytes(&bytes[..cut]).unwrap_err();
        assert!(matches!(err, Error::Corrupted { .. }), "cut {cut}: {err}");
    }
    let mut bad = bytes.clone();
    bad[8..12].copy_from_slice(&7u32.to_le_bytes());
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Version { found: 7, .. })));
    // Claim an absurd metadata length.
    let mut bad = bytes.clone();
    bad[12..20].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::Corrupted { .. })));

    let wider = RunConfig {
        model_dim: 24,
        ..loaded.config.clone()
    };
    assert!(matches!(loaded.load_into(&wider), Err(Error::DimensionMismatch(_))));
}

#[test]
fn mixed_imported_and_encoded_embeddings() {
    let corpus = marker_corpus(12, 12);
    let config = small(Task::Classify, Variant::Hybrid);
    let out = train(&corpus, None, &config).unwrap();
    let model = &out.model;
    let mut archive = EmbeddingArchive::new(config.model_dim);
    for r in corpus.iter().step_by(2) {
        let s = model.prepare(r).unwrap();
        archive.insert(r.id.clone(), model.contextual_embeddings(&s.prepared).unwrap()).unwrap();
    }
    for r in &corpus {
        let s = model.prepare(r).unwrap();
        let imported = model.imported_for(Some(&archive), &s).unwrap();
        let (v, _) = model.represent(&s, imported.as_ref()).unwrap();
        let (w, _) = model.represent(&s, None).unwrap();
        assert_eq!(v.len(), config.model_dim);
        // Archive rows are the encoder's own output, so results coincide.
        assert_eq!(v, w);
    }
    let a = evaluate_with(model, &corpus, Task::Classify, Some(&archive)).unwrap();
    let b = evaluate(model, &corpus, Task::Classify).unwrap();
    assert_eq!(a.report, b.report);
    let retrained = train_with(&corpus, None, &config, Some(&archive), |_| {}).unwrap();
    assert_eq!(retrained.log.len(), config.epochs);
}
