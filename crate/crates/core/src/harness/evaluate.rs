use serde::{Deserialize, Serialize};

use super::config::Task;
use super::corpus::CorpusRecord;
use super::model::ChangeModel;
use crate::encoder::EmbeddingArchive;
use crate::error::{Error, Result};
use crate::metrics::{auc, bleu_bnorm, classification_metrics, MetricReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricReport,
    pub warnings: Vec<String>,
    pub predictions: Vec<Prediction>,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Runs the whole pipeline on every record and scores it for `task`.
pub fn evaluate(model: &ChangeModel, records: &[CorpusRecord], task: Task) -> Result<Evaluation> {
    evaluate_with(model, records, task, None)
}

/// As [`evaluate`], taking embeddings from `archive` for the ids it holds.
pub fn evaluate_with(model: &ChangeModel, records: &[CorpusRecord], task: Task, archive: Option<&EmbeddingArchive>) -> Result<Evaluation> {
    if task != model.task() {
        return Err(Error::TaskMismatch {
            checkpoint: model.task().name().into(),
            requested: task.name().into(),
        });
    }
    if records.is_empty() {
        return Err(Error::Metric("evaluation corpus is empty".into()));
    }
    let mut warnings = Vec::new();
    let mut predictions = Vec::with_capacity(records.len());
    for r in records {
        let problems = r.problems(Some(task));
        if !problems.is_empty() {
            return Err(Error::Config(format!("record `{}`: {}", r.id, problems.join("; "))));
        }
        let sample = model.prepare(r)?;
        let imported = model.imported_for(archive, &sample)?;
        let mut p = Prediction {
            id: r.id.clone(),
            probability: None,
            label: r.label,
            message: None,
            reference: r.message.clone(),
        };
        match task {
            Task::Classify => p.probability = Some(model.predict(&sample, imported.as_ref())?),
            Task::Generate => p.message = Some(model.detokenize(&model.generate(&sample, imported.as_ref())?)),
        }
        predictions.push(p);
    }
    let report = match task {
        Task::Classify => {
            let probs: Vec<f64> = predictions.iter().map(|p| p.probability.unwrap_or(0.0)).collect();
            let labels: Vec<u8> = predictions.iter().map(|p| p.label.unwrap_or(0)).collect();
            let m = classification_metrics(&probs, &labels, 0.5)?;
            if m.degenerate {
                warnings.push("precision, recall or F1 had a zero denominator and is reported as 0".into());
            }
            let a = match auc(&probs, &labels) {
                Ok(a) => Some(a),
                Err(e) => {
                    warnings.push(format!("AUC not reported: {e}"));
                    None
                }
            };
            MetricReport::from_classification(&m, a)
        }
        Task::Generate => {
            let cands: Vec<Vec<String>> = predictions.iter().map(|p| words(p.message.as_deref().unwrap_or(""))).collect();
            let refs: Vec<Vec<String>> = predictions.iter().map(|p| words(p.reference.as_deref().unwrap_or(""))).collect();
            MetricReport::from_bleu(bleu_bnorm(&cands, &refs)?)
        }
    };
    Ok(Evaluation {
        report,
        warnings,
        predictions,
    })
}
