//! Code change preprocessing: hunks, line aligning, tokenizing, flattening
//! and token aligning.

mod align;
pub(crate) mod hunks;
pub mod lcs;
mod prepare;
mod tokenizer;
mod unified;

use serde::{Deserialize, Serialize};

pub use align::{align_lines, align_tokens};
pub use hunks::compute_hunks;
pub use prepare::{
    alignment_json, preprocess_change, preprocess_hunks, validate_alignment_json, Limits,
    PreparedChange, Side,
};
pub use tokenizer::{build_vocab, normalize_whitespace, tokenize, Vocab, VocabConfig, BOS, EOS, PAD};
pub use unified::{parse_unified_diff, render_unified_diff};

/// The two versions of a piece of code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeChange {
    pub before_text: String,
    pub after_text: String,
}

impl CodeChange {
    /// Builds a change, normalizing `\r\n` and lone `\r` terminators to `\n`.
    pub fn new(before: &str, after: &str) -> Self {
        Self {
            before_text: normalize_newlines(before),
            after_text: normalize_newlines(after),
        }
    }
}

pub(crate) fn normalize_newlines(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Splits text into lines. A trailing newline does not open an extra empty line.
pub(crate) fn split_lines(text: &str) -> Vec<&str> {
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n').collect()
}

/// A contiguous diff region: the pre-change side (deleted + context lines)
/// and the post-change side (added + context lines).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    /// 1-based line number of the first before-side line (0 when the side is empty).
    pub before_start: usize,
    /// 1-based line number of the first after-side line (0 when the side is empty).
    pub after_start: usize,
    pub before_lines: Vec<String>,
    pub after_lines: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChangeType {
    Keep,
    Add,
    Delete,
    Replace,
}

impl ChangeType {
    pub fn is_change(self) -> bool {
        self != ChangeType::Keep
    }
}

/// One row of the line alignment of a hunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedLinePair {
    pub before_line: Option<String>,
    pub after_line: Option<String>,
    pub change_type: ChangeType,
    pub line_index_before: Option<usize>,
    pub line_index_after: Option<usize>,
}
