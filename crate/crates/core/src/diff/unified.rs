use super::{align_lines, ChangeType, Hunk};
use crate::error::{Error, Result};

/// Parses unified-diff text into hunks. File headers (`diff`, `index`,
/// `---`, `+++`, mode lines) and any other text outside hunks is skipped.
/// Inside a hunk an empty line is read as an empty context line.
pub fn parse_unified_diff(text: &str) -> Result<Vec<Hunk>> {
    let text = super::normalize_newlines(text);
    let lines = super::split_lines(&text);
    let mut hunks = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if !line.starts_with("@@") {
            i += 1;
            continue;
        }
        let header_line = i + 1;
        let (before_start, mut before_left, after_start, mut after_left) =
            parse_header(line).ok_or_else(|| Error::DiffParse {
                line: header_line,
                message: format!("malformed hunk header `{line}`"),
            })?;
        let mut hunk = Hunk {
            before_start,
            after_start,
            before_lines: Vec::new(),
            after_lines: Vec::new(),
        };
        i += 1;
        while before_left > 0 || after_left > 0 {
            let Some(&body) = lines.get(i) else {
                return Err(Error::DiffParse {
                    line: i + 1,
                    message: format!(
                        "hunk starting at line {header_line} truncated: \
                         {before_left} before-side and {after_left} after-side lines missing"
                    ),
                });
            };
            let (tag, content) = match body.chars().next() {
                None => (' ', ""),
                Some(c) => (c, &body[c.len_utf8()..]),
            };
            match tag {
                ' ' if before_left > 0 && after_left > 0 => {
                    hunk.before_lines.push(content.to_string());
                    hunk.after_lines.push(content.to_string());
                    before_left -= 1;
                    after_left -= 1;
                }
                '-' if before_left > 0 => {
                    hunk.before_lines.push(content.to_string());
                    before_left -= 1;
                }
                '+' if after_left > 0 => {
                    hunk.after_lines.push(content.to_string());
                    after_left -= 1;
                }
                '\\' => {}
                _ => {
                    return Err(Error::DiffParse {
                        line: i + 1,
                        message: format!("unexpected line `{body}` in hunk body"),
                    })
                }
            }
            i += 1;
        }
        // a "\ No newline at end of file" marker may trail the body
        while lines.get(i).is_some_and(|l| l.starts_with('\\')) {
            i += 1;
        }
        if hunk.before_lines.len() + hunk.after_lines.len() > 0 {
            hunks.push(hunk);
        }
    }
    Ok(hunks)
}

fn parse_header(line: &str) -> Option<(usize, usize, usize, usize)> {
    let rest = line.strip_prefix("@@ ")?;
    let end = rest.find(" @@")?;
    let mut parts = rest[..end].split_whitespace();
    let before = parts.next()?.strip_prefix('-')?;
    let after = parts.next()?.strip_prefix('+')?;
    if parts.next().is_some() {
        return None;
    }
    let range = |s: &str| -> Option<(usize, usize)> {
        match s.split_once(',') {
            Some((start, len)) => Some((start.parse().ok()?, len.parse().ok()?)),
            None => Some((s.parse().ok()?, 1)),
        }
    };
    let (bs, bl) = range(before)?;
    let (as_, al) = range(after)?;
    Some((bs, bl, as_, al))
}

/// Writes hunks as unified-diff text. The interleaving of context, deleted
/// and added lines is recovered from the line alignment of each hunk.
pub fn render_unified_diff(hunks: &[Hunk]) -> String {
    let mut out = String::new();
    for hunk in hunks {
        out.push_str(&format!(
            "@@ -{},{} +{},{} @@\n",
            hunk.before_start,
            hunk.before_lines.len(),
            hunk.after_start,
            hunk.after_lines.len()
        ));
        let (pairs, _) = align_lines(hunk, 1);
        let mut deleted: Vec<&str> = Vec::new();
        let mut added: Vec<&str> = Vec::new();
        let flush = |out: &mut String, deleted: &mut Vec<&str>, added: &mut Vec<&str>| {
            for l in deleted.drain(..) {
                out.push('-');
                out.push_str(l);
                out.push('\n');
            }
            for l in added.drain(..) {
                out.push('+');
                out.push_str(l);
                out.push('\n');
            }
        };
        for pair in &pairs {
            if pair.change_type == ChangeType::Keep {
                flush(&mut out, &mut deleted, &mut added);
                out.push(' ');
                out.push_str(pair.before_line.as_deref().unwrap_or_default());
                out.push('\n');
                continue;
            }
            if let Some(l) = pair.before_line.as_deref() {
                deleted.push(l);
            }
            if let Some(l) = pair.after_line.as_deref() {
                added.push(l);
            }
        }
        flush(&mut out, &mut deleted, &mut added);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_has_no_hunks() {
        assert!(parse_unified_diff("").unwrap().is_empty());
    }

    #[test]
    fn two_hunks_each_with_one_added_line() {
        let diff = "\
--- a/x.c
+++ b/x.c
@@ -1,2 +1,3 @@
 a
+b
 c
@@ -10,2 +11,3 @@
 p
+q
 r
";
        let hunks = parse_unified_diff(diff).unwrap();
        assert_eq!(hunks.len(), 2);
        assert_eq!(hunks[0].before_lines, vec!["a", "c"]);
        assert_eq!(hunks[0].after_lines, vec!["a", "b", "c"]);
        assert_eq!(hunks[1].after_lines, vec!["p", "q", "r"]);
        assert_eq!((hunks[1].before_start, hunks[1].after_start), (10, 11));
    }

    #[test]
    fn malformed_header_reports_line() {
        let err = parse_unified_diff("junk\n@@ -1,x +1 @@\n a\n").unwrap_err();
        match err {
            Error::DiffParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_body_is_an_error() {
        let err = parse_unified_diff("@@ -1,3 +1,3 @@\n a\n-b\n").unwrap_err();
        assert!(matches!(err, Error::DiffParse { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn counts_default_to_one_and_no_newline_marker_is_skipped() {
        let hunks = parse_unified_diff("@@ -3 +3 @@\n-x\n\\ No newline at end of file\n+y\n").unwrap();
        assert_eq!(hunks[0].before_lines, vec!["x"]);
        assert_eq!(hunks[0].after_lines, vec!["y"]);
    }
}
