use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diff::{Limits, VocabConfig};
use crate::error::{Error, Result};
use crate::nn::AttentionConfig;
use crate::queryback::{QueryBackConfig, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classify,
    Generate,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Classify => "classify",
            Task::Generate => "generate",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "classify" => Ok(Task::Classify),
            "generate" => Ok(Task::Generate),
            other => Err(format!("unknown task `{other}` (classify, generate)")),
        }
    }
}

/// Everything needed to rebuild and retrain a model. Missing fields in a
/// config file take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub variant: Variant,
    pub seed: u64,

    pub model_dim: usize,
    pub num_heads: usize,
    pub encoder_layers: usize,
    pub query_layers: usize,
    /// Line matrix height `L` and width `W`.
    pub line_rows: usize,
    pub line_width: usize,
    /// Hybrid output width; defaults to `model_dim`.
    pub hybrid_dim: Option<usize>,

    /// Classifier hidden width; defaults to the representation width.
    pub classifier_hidden: Option<usize>,
    pub classifier_dropout: f64,
    /// Concatenate a CNN feature of the commit message to the classifier input.
    pub use_message: bool,
    pub message_filters: usize,
    pub message_kernel_widths: Vec<usize>,
    pub decoder_layers: usize,
    pub max_message_len: usize,

    pub limits: Limits,
    pub vocab: VocabConfig,

    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop once this many optimizer steps have run.
    pub max_steps: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Classify,
            variant: Variant::Hybrid,
            seed: 0,
            model_dim: 64,
            num_heads: 4,
            encoder_layers: 2,
            query_layers: 1,
            line_rows: 64,
            line_width: 32,
            hybrid_dim: None,
            classifier_hidden: None,
            classifier_dropout: 0.1,
            use_message: false,
            message_filters: crate::heads::DEFAULT_FILTERS,
            message_kernel_widths: crate::heads::DEFAULT_KERNEL_WIDTHS.to_vec(),
            decoder_layers: 2,
            max_message_len: 32,
            limits: Limits::default(),
            vocab: VocabConfig::default(),
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 8,
            epochs: 20,
            max_steps: None,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn attention(&self) -> Result<AttentionConfig> {
        AttentionConfig::new(self.model_dim, self.num_heads)
    }

    pub fn query_back(&self) -> Result<QueryBackConfig> {
        Ok(QueryBackConfig {
            attention: self.attention()?,
            token_layers: self.query_layers,
            line_layers: self.query_layers,
            line_rows: self.line_rows,
            line_width: self.line_width,
            hybrid_dim: self.hybrid_dim.unwrap_or(self.model_dim),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.attention()?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.line_rows == 0 || self.line_width == 0 {
            return bad("line_rows and line_width must be at least 1");
        }
        if self.limits.max_tokens == 0 {
            return bad("limits.max_tokens must be at least 1");
        }
        if !(0.0..1.0).contains(&self.classifier_dropout) {
            return bad("classifier_dropout must be in [0, 1)");
        }
        if self.max_message_len == 0 {
            return bad("max_message_len must be at least 1");
        }
        if self.use_message && (self.message_filters == 0 || self.message_kernel_widths.is_empty()) {
            return bad("message encoder needs filters and kernel widths");
        }
        if self.message_kernel_widths.contains(&0) {
            return bad("kernel widths must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.hybrid_dim == Some(0) || self.classifier_hidden == Some(0) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_partial_files() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), c);
        let partial: RunConfig = serde_json::from_str(r#"{"task":"generate","variant":"line","model_dim":16}"#).unwrap();
        assert_eq!((partial.task, partial.variant, partial.model_dim, partial.num_heads), (Task::Generate, Variant::Line, 16, 4));
        assert!(serde_json::from_str::<RunConfig>(r#"{"modle_dim":16}"#).is_err());
    }

    #[test]
    fn rejects_inconsistent_dims() {
        let c = RunConfig {
            model_dim: 10,
            num_heads: 4,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
