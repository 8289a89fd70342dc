use std::ops::Range;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::hunks::compute_hunks_with;
use super::{align_lines, align_tokens, tokenize, AlignedLinePair, ChangeType, CodeChange, Hunk, Vocab};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Token cap per side.
    pub max_tokens: usize,
    /// Context lines kept around each changed region.
    pub context_radius: usize,
    /// Ignore trailing whitespace when diffing lines.
    pub strip_trailing_whitespace: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_tokens: 512,
            context_radius: 3,
            strip_trailing_whitespace: false,
        }
    }
}

/// One side (before or after) of a flattened change.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Side {
    pub tokens: Vec<u32>,
    pub line_index: Vec<usize>,
    pub change_flag: Vec<u8>,
}

impl Side {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn changed_count(&self) -> usize {
        self.change_flag.iter().filter(|&&f| f == 1).count()
    }

    fn truncate(&mut self, n: usize) {
        self.tokens.truncate(n);
        self.line_index.truncate(n);
        self.change_flag.truncate(n);
    }
}

/// A fully preprocessed code change.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreparedChange {
    pub before: Side,
    pub after: Side,
    pub hunks: Vec<Hunk>,
    pub pairs: Vec<AlignedLinePair>,
    /// Per hunk: token ranges on the before and after sides.
    pub hunk_boundaries: Vec<(Range<usize>, Range<usize>)>,
    /// Hunks dropped from the tail to respect the token cap.
    pub dropped_hunks: usize,
    /// Tokens cut by hard truncation, per side.
    pub truncated_before: usize,
    pub truncated_after: usize,
}

impl PreparedChange {
    /// Placeholder for a change without hunks: no tokens on either side.
    pub fn empty() -> Self {
        Self::default()
    }
}

/// Diffs the two versions and preprocesses the resulting hunks.
pub fn preprocess_change(change: &CodeChange, vocab: &Vocab, limits: &Limits) -> Result<PreparedChange> {
    let hunks = compute_hunks_with(change, limits.context_radius, limits.strip_trailing_whitespace);
    preprocess_hunks(&hunks, vocab, limits)
}

/// Line aligning (counter threaded across hunks), tokenizing, flattening,
/// truncation and token aligning.
pub fn preprocess_hunks(hunks: &[Hunk], vocab: &Vocab, limits: &Limits) -> Result<PreparedChange> {
    if hunks.is_empty() {
        return Err(Error::EmptyChange);
    }
    struct HunkTokens {
        pairs: Vec<AlignedLinePair>,
        before: (Vec<u32>, Vec<usize>),
        after: (Vec<u32>, Vec<usize>),
    }
    let mut per_hunk = Vec::with_capacity(hunks.len());
    let mut next = 1;
    for hunk in hunks {
        let (pairs, n) = align_lines(hunk, next);
        next = n;
        let mut before = (Vec::new(), Vec::new());
        let mut after = (Vec::new(), Vec::new());
        for pair in &pairs {
            if let (Some(line), Some(li)) = (&pair.before_line, pair.line_index_before) {
                let ids = tokenize(line, vocab);
                before.1.extend(std::iter::repeat_n(li, ids.len()));
                before.0.extend(ids);
            }
            if let (Some(line), Some(li)) = (&pair.after_line, pair.line_index_after) {
                let ids = tokenize(line, vocab);
                after.1.extend(std::iter::repeat_n(li, ids.len()));
                after.0.extend(ids);
            }
        }
        per_hunk.push(HunkTokens { pairs, before, after });
    }

    // drop whole hunks from the tail while a side is over the cap
    let cap = limits.max_tokens;
    let mut keep = per_hunk.len();
    let totals = |k: usize| -> (usize, usize) {
        per_hunk[..k].iter().fold((0, 0), |(b, a), h| (b + h.before.0.len(), a + h.after.0.len()))
    };
    while keep > 1 {
        let (b, a) = totals(keep);
        if b <= cap && a <= cap {
            break;
        }
        keep -= 1;
    }

    let mut out = PreparedChange {
        dropped_hunks: per_hunk.len() - keep,
        hunks: hunks[..keep].to_vec(),
        ..Default::default()
    };
    for h in per_hunk.into_iter().take(keep) {
        let (b0, a0) = (out.before.tokens.len(), out.after.tokens.len());
        out.before.tokens.extend(h.before.0);
        out.before.line_index.extend(h.before.1);
        out.after.tokens.extend(h.after.0);
        out.after.line_index.extend(h.after.1);
        out.pairs.extend(h.pairs);
        out.hunk_boundaries
            .push((b0..out.before.tokens.len(), a0..out.after.tokens.len()));
    }
    out.truncated_before = out.before.tokens.len().saturating_sub(cap);
    out.truncated_after = out.after.tokens.len().saturating_sub(cap);
    out.before.line_index.truncate(cap);
    out.before.tokens.truncate(cap);
    out.after.line_index.truncate(cap);
    out.after.tokens.truncate(cap);
    for (b, a) in &mut out.hunk_boundaries {
        *b = b.start.min(cap)..b.end.min(cap);
        *a = a.start.min(cap)..a.end.min(cap);
    }

    let (fb, fa) = align_tokens(&out.before.tokens, &out.after.tokens);
    out.before.change_flag = fb;
    out.after.change_flag = fa;
    // keep all three per-side sequences in lockstep
    let (nb, na) = (out.before.tokens.len(), out.after.tokens.len());
    out.before.truncate(nb);
    out.after.truncate(na);
    Ok(out)
}

fn change_type_name(t: ChangeType) -> &'static str {
    match t {
        ChangeType::Keep => "Keep",
        ChangeType::Add => "Add",
        ChangeType::Delete => "Delete",
        ChangeType::Replace => "Replace",
    }
}

/// The alignment record of a prepared change.
pub fn alignment_json(prepared: &PreparedChange) -> Value {
    let hunks: Vec<Value> = prepared
        .hunks
        .iter()
        .map(|h| json!({"before_lines": h.before_lines, "after_lines": h.after_lines}))
        .collect();
    let pairs: Vec<Value> = prepared
        .pairs
        .iter()
        .map(|p| {
            json!({
                "type": change_type_name(p.change_type),
                "li_b": p.line_index_before,
                "li_a": p.line_index_after,
                "before": p.before_line,
                "after": p.after_line,
            })
        })
        .collect();
    json!({
        "hunks": hunks,
        "pairs": pairs,
        "tokens_b": prepared.before.tokens,
        "tokens_a": prepared.after.tokens,
        "line_idx_b": prepared.before.line_index,
        "line_idx_a": prepared.after.line_index,
        "flags_b": prepared.before.change_flag,
        "flags_a": prepared.after.change_flag,
    })
}

/// Checks a value against the alignment record schema: exact field set,
/// field types, per-side length agreement, 0/1 flags, and the pair
/// type/index rules.
pub fn validate_alignment_json(value: &Value) -> std::result::Result<(), String> {
    const FIELDS: [&str; 8] = [
        "hunks", "pairs", "tokens_b", "tokens_a", "line_idx_b", "line_idx_a", "flags_b", "flags_a",
    ];
    let obj = value.as_object().ok_or("record is not an object")?;
    for key in obj.keys() {
        if !FIELDS.contains(&key.as_str()) {
            return Err(format!("unexpected field `{key}`"));
        }
    }
    let uint_array = |name: &str| -> std::result::Result<Vec<u64>, String> {
        obj.get(name)
            .and_then(Value::as_array)
            .ok_or(format!("`{name}` missing or not an array"))?
            .iter()
            .map(|v| v.as_u64().ok_or(format!("`{name}` holds a non-integer")))
            .collect()
    };
    for (tokens, lines, flags) in [("tokens_b", "line_idx_b", "flags_b"), ("tokens_a", "line_idx_a", "flags_a")] {
        let (t, l, f) = (uint_array(tokens)?, uint_array(lines)?, uint_array(flags)?);
        if t.len() != l.len() || t.len() != f.len() {
            return Err(format!("length mismatch among `{tokens}`, `{lines}`, `{flags}`"));
        }
        if f.iter().any(|&x| x > 1) {
            return Err(format!("`{flags}` holds a value other than 0/1"));
        }
    }
    let hunks = obj.get("hunks").and_then(Value::as_array).ok_or("`hunks` missing or not an array")?;
    for h in hunks {
        for side in ["before_lines", "after_lines"] {
            let lines = h.get(side).and_then(Value::as_array).ok_or(format!("hunk `{side}` missing"))?;
            if lines.iter().any(|l| !l.is_string()) {
                return Err(format!("hunk `{side}` holds a non-string"));
            }
        }
    }
    let pairs = obj.get("pairs").and_then(Value::as_array).ok_or("`pairs` missing or not an array")?;
    for (k, p) in pairs.iter().enumerate() {
        let p = p.as_object().ok_or(format!("pair {k} is not an object"))?;
        if p.len() != 5 {
            return Err(format!("pair {k} must have exactly type, li_b, li_a, before, after"));
        }
        let ty = p.get("type").and_then(Value::as_str).ok_or(format!("pair {k} lacks `type`"))?;
        let idx = |name: &str| -> std::result::Result<Option<u64>, String> {
            match p.get(name) {
                Some(Value::Null) => Ok(None),
                Some(v) => v.as_u64().map(Some).ok_or(format!("pair {k} `{name}` is not an integer")),
                None => Err(format!("pair {k} lacks `{name}`")),
            }
        };
        let text = |name: &str| -> std::result::Result<Option<&str>, String> {
            match p.get(name) {
                Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(s)),
                _ => Err(format!("pair {k} `{name}` is not a string or null")),
            }
        };
        let (lb, la, b, a) = (idx("li_b")?, idx("li_a")?, text("before")?, text("after")?);
        let ok = match ty {
            "Keep" => lb == Some(0) && la == Some(0) && b.is_some() && b == a,
            "Delete" => a.is_none() && la.is_none() && b.is_some() && lb.is_some_and(|x| x >= 1),
            "Add" => b.is_none() && lb.is_none() && a.is_some() && la.is_some_and(|x| x >= 1),
            "Replace" => {
                b.is_some() && a.is_some() && lb.is_some_and(|x| x >= 1) && la.is_some_and(|x| x >= 1)
            }
            other => return Err(format!("pair {k} has unknown type `{other}`")),
        };
        if !ok {
            return Err(format!("pair {k} violates the `{ty}` rules"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{build_vocab, VocabConfig};

    #[test]
    fn identical_texts_are_an_empty_change() {
        let v = Vocab::bytes_only();
        let c = CodeChange::new("a\n", "a\n");
        assert!(matches!(preprocess_change(&c, &v, &Limits::default()), Err(Error::EmptyChange)));
    }

    #[test]
    fn counter_threads_across_hunks() {
        let before: Vec<String> = (0..20).map(|i| format!("line{i}")).collect();
        let mut after = before.clone();
        after[2] = "changed2".into();
        after[15] = "changed15".into();
        let c = CodeChange::new(&before.join("\n"), &after.join("\n"));
        let v = build_vocab(before.iter().chain(&after).map(String::as_str), &VocabConfig::default());
        let p = preprocess_change(&c, &v, &Limits { context_radius: 1, ..Default::default() }).unwrap();
        assert_eq!(p.hunks.len(), 2);
        // hunk 1: keep, replace(2), keep -> next 4; hunk 2: keep, replace(5), keep
        let changed: Vec<usize> = p.pairs.iter().filter_map(|q| q.line_index_before).filter(|&i| i > 0).collect();
        assert_eq!(changed, vec![2, 5]);
        assert_eq!(p.before.line_index.iter().filter(|&&i| i == 5).count(), 1);
    }

    #[test]
    fn tail_hunks_dropped_before_hard_truncation() {
        let before: Vec<String> = (0..30).map(|i| format!("w{i} w{i} w{i}")).collect();
        let mut after = before.clone();
        after[1] = "x".into();
        after[25] = "y".into();
        let c = CodeChange::new(&before.join("\n"), &after.join("\n"));
        let v = build_vocab(before.iter().chain(&after).map(String::as_str), &VocabConfig::default());
        let limits = Limits { max_tokens: 12, context_radius: 1, ..Default::default() };
        let p = preprocess_change(&c, &v, &limits).unwrap();
        assert_eq!(p.dropped_hunks, 1);
        assert_eq!(p.hunks.len(), 1);
        assert!(p.before.len() <= 12 && p.after.len() <= 12);
        assert_eq!(p.before.line_index.len(), p.before.len());
        assert_eq!(p.before.change_flag.len(), p.before.len());
    }

    #[test]
    fn alignment_json_validates() {
        let c = CodeChange::new("a = 1;\nb;\n", "a = 2;\nb;\nc;\n");
        let v = build_vocab(["a = 1;", "a = 2;", "b;", "c;"], &VocabConfig::default());
        let p = preprocess_change(&c, &v, &Limits::default()).unwrap();
        let j = alignment_json(&p);
        validate_alignment_json(&j).unwrap();
        let mut bad = j.clone();
        bad["flags_b"] = json!([2]);
        assert!(validate_alignment_json(&bad).is_err());
    }
}
