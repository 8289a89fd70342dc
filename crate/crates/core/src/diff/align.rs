use super::lcs::{diff_ops, DiffOp};
use super::{AlignedLinePair, ChangeType, Hunk};

/// Aligns the two sides of a hunk line by line and assigns line indices.
///
/// Changed pairs carry the running counter, unchanged pairs carry 0, and the
/// counter advances after every pair. The returned index is the counter
/// value after the last pair, which seeds the next hunk.
pub fn align_lines(hunk: &Hunk, start_index: usize) -> (Vec<AlignedLinePair>, usize) {
    let ops = diff_ops(&hunk.before_lines, &hunk.after_lines);
    let mut pairs = Vec::with_capacity(ops.len());
    let mut counter = start_index;

    let mut deleted: Vec<usize> = Vec::new();
    let mut inserted: Vec<usize> = Vec::new();
    let flush = |pairs: &mut Vec<AlignedLinePair>,
                     counter: &mut usize,
                     deleted: &mut Vec<usize>,
                     inserted: &mut Vec<usize>| {
        let n = deleted.len().max(inserted.len());
        for k in 0..n {
            let before = deleted.get(k).map(|&i| hunk.before_lines[i].clone());
            let after = inserted.get(k).map(|&j| hunk.after_lines[j].clone());
            let change_type = match (&before, &after) {
                (Some(_), Some(_)) => ChangeType::Replace,
                (Some(_), None) => ChangeType::Delete,
                _ => ChangeType::Add,
            };
            pairs.push(AlignedLinePair {
                line_index_before: before.as_ref().map(|_| *counter),
                line_index_after: after.as_ref().map(|_| *counter),
                before_line: before,
                after_line: after,
                change_type,
            });
            *counter += 1;
        }
        deleted.clear();
        inserted.clear();
    };

    for op in ops {
        match op {
            DiffOp::Equal { a, b } => {
                flush(&mut pairs, &mut counter, &mut deleted, &mut inserted);
                pairs.push(AlignedLinePair {
                    before_line: Some(hunk.before_lines[a].clone()),
                    after_line: Some(hunk.after_lines[b].clone()),
                    change_type: ChangeType::Keep,
                    line_index_before: Some(0),
                    line_index_after: Some(0),
                });
                counter += 1;
            }
            DiffOp::Delete { a } => deleted.push(a),
            DiffOp::Insert { b } => inserted.push(b),
        }
    }
    flush(&mut pairs, &mut counter, &mut deleted, &mut inserted);
    (pairs, counter)
}

/// Token change flags from an LCS match of the flattened sequences:
/// 0 for matched tokens, 1 for the rest.
pub fn align_tokens(tokens_before: &[u32], tokens_after: &[u32]) -> (Vec<u8>, Vec<u8>) {
    let mut flags_before = vec![1u8; tokens_before.len()];
    let mut flags_after = vec![1u8; tokens_after.len()];
    for op in diff_ops(tokens_before, tokens_after) {
        if let DiffOp::Equal { a, b } = op {
            flags_before[a] = 0;
            flags_after[b] = 0;
        }
    }
    (flags_before, flags_after)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hunk(before: &[&str], after: &[&str]) -> Hunk {
        Hunk {
            before_start: 1,
            after_start: 1,
            before_lines: before.iter().map(|s| s.to_string()).collect(),
            after_lines: after.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn summary(pairs: &[AlignedLinePair]) -> Vec<(ChangeType, Option<usize>, Option<usize>)> {
        pairs
            .iter()
            .map(|p| (p.change_type, p.line_index_before, p.line_index_after))
            .collect()
    }

    #[test]
    fn identical_sides_are_all_keep() {
        let (pairs, next) = align_lines(&hunk(&["a", "b"], &["a", "b"]), 5);
        assert!(pairs.iter().all(|p| p.change_type == ChangeType::Keep));
        assert!(pairs.iter().all(|p| p.line_index_before == Some(0)));
        assert_eq!(next, 7);
    }

    #[test]
    fn pure_additions_from_seven() {
        let (pairs, next) = align_lines(&hunk(&[], &["x", "y", "z"]), 7);
        assert_eq!(
            summary(&pairs),
            vec![
                (ChangeType::Add, None, Some(7)),
                (ChangeType::Add, None, Some(8)),
                (ChangeType::Add, None, Some(9)),
            ]
        );
        assert_eq!(next, 10);
    }

    #[test]
    fn token_flags_examples() {
        assert_eq!(align_tokens(&[1, 2, 3], &[1, 2, 3]), (vec![0; 3], vec![0; 3]));
        assert_eq!(align_tokens(&[1, 2], &[3, 4, 5]), (vec![1; 2], vec![1; 3]));
        assert_eq!(
            align_tokens(&[1, 2, 3, 4], &[1, 9, 3, 4]),
            (vec![0, 1, 0, 0], vec![0, 1, 0, 0])
        );
        assert_eq!(align_tokens(&[], &[]), (vec![], vec![]));
    }
}
