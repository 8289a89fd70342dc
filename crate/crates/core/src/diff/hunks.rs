use super::lcs::{diff_ops, DiffOp};
use super::{split_lines, CodeChange, Hunk};

/// Line-level LCS diff of the two versions, grouped into hunks carrying up to
/// `context_radius` unchanged lines on each side. Changed regions separated
/// by at most `2 * context_radius` unchanged lines share one hunk.
pub fn compute_hunks(change: &CodeChange, context_radius: usize) -> Vec<Hunk> {
    compute_hunks_with(change, context_radius, false)
}

pub(crate) fn compute_hunks_with(
    change: &CodeChange,
    context_radius: usize,
    strip_trailing_whitespace: bool,
) -> Vec<Hunk> {
    let clean = |line: &str| -> String {
        if strip_trailing_whitespace {
            line.trim_end().to_string()
        } else {
            line.to_string()
        }
    };
    let before: Vec<String> = split_lines(&change.before_text).into_iter().map(clean).collect();
    let after: Vec<String> = split_lines(&change.after_text).into_iter().map(clean).collect();
    let ops = diff_ops(&before, &after);

    // maximal runs of non-equal ops, as half-open ranges into `ops`
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < ops.len() {
        if matches!(ops[k], DiffOp::Equal { .. }) {
            k += 1;
            continue;
        }
        let start = k;
        while k < ops.len() && !matches!(ops[k], DiffOp::Equal { .. }) {
            k += 1;
        }
        runs.push((start, k));
    }

    // merge runs whose gap fits inside both context windows
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match groups.last_mut() {
            Some(last) if run.0 - last.1 <= 2 * context_radius => last.1 = run.1,
            _ => groups.push(run),
        }
    }

    groups
        .into_iter()
        .map(|(start, end)| {
            let lo = start.saturating_sub(context_radius);
            let hi = (end + context_radius).min(ops.len());
            let mut hunk = Hunk {
                before_start: 0,
                after_start: 0,
                before_lines: Vec::new(),
                after_lines: Vec::new(),
            };
            for op in &ops[lo..hi] {
                match *op {
                    DiffOp::Equal { a, b } => {
                        push_line(&mut hunk.before_lines, &mut hunk.before_start, &before, a);
                        push_line(&mut hunk.after_lines, &mut hunk.after_start, &after, b);
                    }
                    DiffOp::Delete { a } => {
                        push_line(&mut hunk.before_lines, &mut hunk.before_start, &before, a)
                    }
                    DiffOp::Insert { b } => {
                        push_line(&mut hunk.after_lines, &mut hunk.after_start, &after, b)
                    }
                }
            }
            hunk
        })
        .collect()
}

fn push_line(lines: &mut Vec<String>, start: &mut usize, source: &[String], index: usize) {
    if lines.is_empty() {
        *start = index + 1;
    }
    lines.push(source[index].clone());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(lines: &[&str]) -> String {
        lines.iter().map(|l| format!("{l}\n")).collect()
    }

    #[test]
    fn identical_texts_yield_no_hunks() {
        let c = CodeChange::new("a\nb\n", "a\nb\n");
        assert!(compute_hunks(&c, 3).is_empty());
    }

    #[test]
    fn single_replacement_with_radius_one() {
        let c = CodeChange::new(&text(&["a", "b", "c", "d", "e"]), &text(&["a", "b", "X", "d", "e"]));
        let hunks = compute_hunks(&c, 1);
        assert_eq!(hunks.len(), 1);
        assert_eq!(hunks[0].before_lines, vec!["b", "c", "d"]);
        assert_eq!(hunks[0].after_lines, vec!["b", "X", "d"]);
        assert_eq!((hunks[0].before_start, hunks[0].after_start), (2, 2));
    }

    #[test]
    fn context_clipped_at_file_start() {
        let c = CodeChange::new("a\nb\n", "A\nb\n");
        let hunks = compute_hunks(&c, 1);
        assert_eq!(hunks[0].before_lines, vec!["a", "b"]);
        assert_eq!(hunks[0].after_lines, vec!["A", "b"]);
    }

    #[test]
    fn distant_edits_split_and_near_edits_merge() {
        let base: Vec<String> = (0..12).map(|i| format!("l{i}")).collect();
        let mut edited = base.clone();
        edited[1] = "x".into();
        edited[8] = "y".into();
        let c = CodeChange::new(&base.join("\n"), &edited.join("\n"));
        // gap of 6 unchanged lines: > 2*2 splits, <= 2*3 merges
        assert_eq!(compute_hunks(&c, 2).len(), 2);
        assert_eq!(compute_hunks(&c, 3).len(), 1);
    }

    #[test]
    fn file_creation_is_one_all_add_hunk() {
        let c = CodeChange::new("", "a\nb\n");
        let hunks = compute_hunks(&c, 3);
        assert_eq!(hunks.len(), 1);
        assert!(hunks[0].before_lines.is_empty());
        assert_eq!(hunks[0].after_lines, vec!["a", "b"]);
    }

    #[test]
    fn trailing_whitespace_switch() {
        let c = CodeChange::new("a  \nb\n", "a\nb\n");
        assert_eq!(compute_hunks_with(&c, 3, false).len(), 1);
        assert!(compute_hunks_with(&c, 3, true).is_empty());
    }
}
