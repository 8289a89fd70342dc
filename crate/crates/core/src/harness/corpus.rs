use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Task;
use crate::diff::{compute_hunks, parse_unified_diff, CodeChange, Hunk};
use crate::error::{Error, Result};

/// One JSON line of a corpus file. A change is given either as full
/// `before`/`after` texts or as a unified `diff`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub before: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub after: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl CorpusRecord {
    pub fn from_texts(id: impl Into<String>, before: &str, after: &str) -> Self {
        Self {
            id: id.into(),
            before: Some(before.to_string()),
            after: Some(after.to_string()),
            diff: None,
            label: None,
            message: None,
        }
    }

    /// Problems with this record for `task` (if given); empty when valid.
    pub fn problems(&self, task: Option<Task>) -> Vec<String> {
        let mut out = Vec::new();
        match (&self.before, &self.after, &self.diff) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            (_, _, Some(_)) => out.push("has both before/after and diff".to_string()),
            (None, None, None) => out.push("needs before/after or diff".to_string()),
            _ => out.push("before and after must both be present".to_string()),
        }
        if let Some(label) = self.label {
            if label > 1 {
                out.push(format!("label {label} is not 0 or 1"));
            }
        }
        match task {
            Some(Task::Classify) if self.label.is_none() => out.push("classify task needs `label`".into()),
            Some(Task::Generate) if self.message.is_none() => out.push("generate task needs `message`".into()),
            _ => {}
        }
        out
    }

    /// Hunks of the change with the given context radius.
    pub fn hunks(&self, radius: usize) -> Result<Vec<Hunk>> {
        match (&self.before, &self.after, &self.diff) {
            (Some(b), Some(a), None) => Ok(compute_hunks(&CodeChange::new(b, a), radius)),
            (None, None, Some(d)) => parse_unified_diff(d),
            _ => Err(Error::Config(format!("record `{}` has no usable change", self.id))),
        }
    }
}

/// Reads a JSON-lines corpus. Blank lines are skipped. All invalid lines
/// are reported together.
pub fn load_corpus(path: &Path, task: Option<Task>) -> Result<Vec<CorpusRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Corpus {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut records = Vec::new();
    let mut problems = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CorpusRecord>(&line) {
            Ok(r) => {
                let p = r.problems(task);
                if p.is_empty() {
                    records.push(r);
                } else {
                    problems.push(format!("line {}: {}", i + 1, p.join("; ")));
                }
            }
            Err(e) => problems.push(format!("line {}: {e}", i + 1)),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Corpus {
            path: path.to_path_buf(),
            message: problems.join("\n"),
        });
    }
    Ok(records)
}

pub fn write_corpus(path: &Path, records: &[CorpusRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
