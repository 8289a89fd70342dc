//! Longest-common-subsequence matching shared by line and token alignment.
//!
//! Ties are broken deterministically: an element of `a` is dropped before an
//! element of `b` is inserted whenever both choices keep the LCS length.

/// One step of an edit script turning `a` into `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOp {
    Equal { a: usize, b: usize },
    Delete { a: usize },
    Insert { b: usize },
}

/// Edit script over the full input sequences, in order.
pub fn diff_ops<T: PartialEq>(a: &[T], b: &[T]) -> Vec<DiffOp> {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();

    let mid_a = &a[prefix..a.len() - suffix];
    let mid_b = &b[prefix..b.len() - suffix];

    let mut ops = Vec::with_capacity(a.len() + b.len());
    ops.extend((0..prefix).map(|i| DiffOp::Equal { a: i, b: i }));
    middle_ops(mid_a, mid_b, prefix, &mut ops);
    let (ta, tb) = (a.len() - suffix, b.len() - suffix);
    ops.extend((0..suffix).map(|k| DiffOp::Equal { a: ta + k, b: tb + k }));
    ops
}

fn middle_ops<T: PartialEq>(a: &[T], b: &[T], offset: usize, ops: &mut Vec<DiffOp>) {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        ops.extend((0..n).map(|i| DiffOp::Delete { a: offset + i }));
        ops.extend((0..m).map(|j| DiffOp::Insert { b: offset + j }));
        return;
    }
    // suffix table: dp[i][j] = LCS(a[i..], b[j..])
    let width = m + 1;
    let mut dp = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[i * width + j] = if a[i] == b[j] {
                dp[(i + 1) * width + j + 1] + 1
            } else {
                dp[(i + 1) * width + j].max(dp[i * width + j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            ops.push(DiffOp::Equal {
                a: offset + i,
                b: offset + j,
            });
            i += 1;
            j += 1;
        } else if dp[(i + 1) * width + j] >= dp[i * width + j + 1] {
            ops.push(DiffOp::Delete { a: offset + i });
            i += 1;
        } else {
            ops.push(DiffOp::Insert { b: offset + j });
            j += 1;
        }
    }
    ops.extend((i..n).map(|i| DiffOp::Delete { a: offset + i }));
    ops.extend((j..m).map(|j| DiffOp::Insert { b: offset + j }));
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    diff_ops(a, b)
        .iter()
        .filter(|op| matches!(op, DiffOp::Equal { .. }))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_inputs() {
        assert!(diff_ops::<u8>(&[], &[]).is_empty());
        assert_eq!(diff_ops(&[1], &[]), vec![DiffOp::Delete { a: 0 }]);
        assert_eq!(diff_ops(&[], &[1]), vec![DiffOp::Insert { b: 0 }]);
    }

    #[test]
    fn script_replays_both_sides() {
        let a = b"abcabba";
        let b = b"cbabac";
        let ops = diff_ops(a, b);
        let mut ra = Vec::new();
        let mut rb = Vec::new();
        for op in &ops {
            match *op {
                DiffOp::Equal { a: i, b: j } => {
                    assert_eq!(a[i], b[j]);
                    ra.push(a[i]);
                    rb.push(b[j]);
                }
                DiffOp::Delete { a: i } => ra.push(a[i]),
                DiffOp::Insert { b: j } => rb.push(b[j]),
            }
        }
        assert_eq!(ra, a);
        assert_eq!(rb, b);
        assert_eq!(lcs_len(a, b), 4);
    }

    #[test]
    fn deletes_precede_inserts_on_ties() {
        let ops = diff_ops(&['x'], &['y']);
        assert_eq!(ops, vec![DiffOp::Delete { a: 0 }, DiffOp::Insert { b: 0 }]);
    }
}
