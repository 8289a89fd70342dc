//! Evaluation metrics: B-Norm BLEU for generated messages, confusion-based
//! scores and rank AUC for classification.
//!
//! B-Norm BLEU as computed here: tokens are lower-cased; each sentence gets
//! BLEU-4 with add-one smoothing on every n-gram precision `(m_n + 1) /
//! (c_n + 1)`, uniform geometric mean, and brevity penalty `exp(1 - r/c)`
//! when the candidate is shorter than the reference. An empty candidate
//! scores 0 (100 if the reference is empty too). The corpus score is the
//! mean sentence score times 100. Other toolkits smooth slightly
//! differently, so absolute numbers are only comparable within this crate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_N: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Smoothed BLEU-4 of one sentence, in `[0, 1]`.
pub fn sentence_bleu<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> f64 {
    let lower = |t: &[S]| t.iter().map(|s| s.as_ref().to_lowercase()).collect::<Vec<_>>();
    let (cand, refr) = (lower(candidate), lower(reference));
    if cand.is_empty() {
        return if refr.is_empty() { 1.0 } else { 0.0 };
    }
    let mut log_sum = 0.0;
    for n in 1..=MAX_N {
        let c = ngram_counts(&cand, n);
        let r = ngram_counts(&refr, n);
        let matched: usize = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
        let total = cand.len().saturating_sub(n - 1);
        log_sum += ((matched as f64 + 1.0) / (total as f64 + 1.0)).ln();
    }
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * (log_sum / MAX_N as f64).exp()
}

/// Corpus B-Norm BLEU in `[0, 100]`.
pub fn bleu_bnorm<S: AsRef<str>>(candidates: &[Vec<S>], references: &[Vec<S>]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::Metric("BLEU needs at least one candidate".into()));
    }
    if candidates.len() != references.len() {
        return Err(Error::Metric(format!(
            "{} candidates but {} references",
            candidates.len(),
            references.len()
        )));
    }
    let total: f64 = candidates.iter().zip(references).map(|(c, r)| sentence_bleu(c, r)).sum();
    Ok((100.0 * total / candidates.len() as f64).clamp(0.0, 100.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    /// Set when a zero denominator forced precision, recall or F1 to 0.
    pub degenerate: bool,
}

/// Predicts positive when `p >= threshold`.
pub fn classification_metrics(probabilities: &[f64], labels: &[u8], threshold: f64) -> Result<ClassificationMetrics> {
    check_inputs(probabilities, labels)?;
    let mut c = ConfusionCounts::default();
    for (&p, &y) in probabilities.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        degenerate = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ClassificationMetrics {
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        precision,
        recall,
        f1,
        counts: c,
        degenerate,
    })
}

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::Metric("no samples".into()));
    }
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Metric(format!("label {bad} is not 0 or 1")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    Ok(())
}

/// Rank-sum AUC with ties counted one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("AUC needs both positive and negative labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Midranks (1-based) over tie groups.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Serialized as `{bleu, accuracy, precision, recall, f1, auc}`; absent
/// metrics are null.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
}

impl MetricReport {
    pub fn from_classification(m: &ClassificationMetrics, auc: Option<f64>) -> Self {
        Self {
            bleu: None,
            accuracy: Some(m.accuracy),
            precision: Some(m.precision),
            recall: Some(m.recall),
            f1: Some(m.f1),
            auc,
        }
    }

    pub fn from_bleu(bleu: f64) -> Self {
        Self {
            bleu: Some(bleu),
            ..Default::default()
        }
    }
}
