use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::corpus::CorpusRecord;
use super::model::{learn_vocab, ChangeModel, Sample};
use crate::encoder::EmbeddingArchive;
use crate::error::{Error, Result};
use crate::nn::{adam_step, GradBuffer, Graph, OptimizerState};

/// Seed offset separating the data-order/dropout stream from initialization.
const STREAM_SALT: u64 = 0x5eed_da7a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: usize,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ChangeModel,
    pub optimizer: OptimizerState,
    pub log: Vec<EpochLog>,
    /// Epoch whose parameters were kept (best validation loss, else last).
    pub kept_epoch: usize,
}

/// Mean loss over samples without dropout.
pub fn mean_loss(model: &ChangeModel, samples: &[Sample], archive: Option<&EmbeddingArchive>) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        let imported = model.imported_for(archive, s)?;
        let mut g = Graph::new(&model.store);
        let l = model.loss::<ChaCha8Rng>(&mut g, s, imported.as_ref(), None)?;
        total += g.value(l).data()[0];
    }
    Ok(total / samples.len().max(1) as f64)
}

pub fn train(records: &[CorpusRecord], valid: Option<&[CorpusRecord]>, config: &RunConfig) -> Result<TrainOutcome> {
    train_with(records, valid, config, None, |_| {})
}

/// Seeded mini-batch Adam training. Samples are visited in a per-epoch
/// shuffled order and gradients are summed in that order, so a fixed seed
/// gives identical results. Records whose id is in `archive` use the
/// archived embeddings instead of the encoder. `on_epoch` sees each
/// epoch's log entry.
pub fn train_with(
    records: &[CorpusRecord],
    valid: Option<&[CorpusRecord]>,
    config: &RunConfig,
    archive: Option<&EmbeddingArchive>,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::Config("training corpus is empty".into()));
    }
    for r in records.iter().chain(valid.into_iter().flatten()) {
        let problems = r.problems(Some(config.task));
        if !problems.is_empty() {
            return Err(Error::Config(format!("record `{}`: {}", r.id, problems.join("; "))));
        }
    }
    let vocab = learn_vocab(records, config)?;
    let mut model = ChangeModel::new(config.clone(), vocab)?;
    let samples = records.iter().map(|r| model.prepare(r)).collect::<Result<Vec<_>>>()?;
    let imported = samples
        .iter()
        .map(|s| model.imported_for(archive, s))
        .collect::<Result<Vec<_>>>()?;
    let valid_samples = match valid {
        Some(v) if !v.is_empty() => Some(v.iter().map(|r| model.prepare(r)).collect::<Result<Vec<_>>>()?),
        _ => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ STREAM_SALT);
    let mut optimizer = OptimizerState::new(&model.store, config.learning_rate, config.beta1, config.beta2, config.epsilon);
    let mut grads = GradBuffer::zeros_like(&model.store);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, crate::nn::ParamStore, OptimizerState)> = None;
    let mut steps = 0;

    'epochs: for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut seen = 0;
        for batch in order.chunks(config.batch_size) {
            if config.max_steps.is_some_and(|m| steps >= m) {
                break;
            }
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let mut g = Graph::new(&model.store);
                let loss = model.loss(&mut g, &samples[i], imported[i].as_ref(), Some(&mut rng))?;
                let value = g.value(loss).data()[0];
                if !value.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, step: steps + 1 });
                }
                total += value;
                seen += 1;
                g.backward(loss).accumulate(&mut grads, scale);
            }
            adam_step(&mut model.store, &grads, &mut optimizer)?;
            steps += 1;
        }
        if seen == 0 {
            break 'epochs;
        }
        let valid_loss = match &valid_samples {
            Some(v) => Some(mean_loss(&model, v, archive)?),
            None => None,
        };
        let entry = EpochLog {
            epoch,
            steps,
            train_loss: total / seen as f64,
            valid_loss,
        };
        on_epoch(&entry);
        log.push(entry);
        if let Some(vl) = valid_loss {
            if best.as_ref().is_none_or(|b| vl < b.0) {
                best = Some((vl, epoch, model.store.clone(), optimizer.clone()));
            }
        }
    }
    let kept_epoch = match best {
        Some((_, epoch, store, opt)) => {
            model.store = store;
            optimizer = opt;
            epoch
        }
        None => log.last().map_or(0, |e| e.epoch),
    };
    Ok(TrainOutcome {
        model,
        optimizer,
        log,
        kept_epoch,
    })
}
