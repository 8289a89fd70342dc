//! Synthetic corpora with known ground truth for learnability checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::CorpusRecord;

/// Token whose presence in added lines decides the label.
pub const MARKER: &str = "taint";

const NAMES: [&str; 16] = [
    "count", "total", "index", "limit", "buffer", "offset", "result", "value", "width", "height", "cursor", "depth", "score",
    "weight", "size", "flag",
];

fn name<R: Rng>(rng: &mut R) -> &'static str {
    NAMES.choose(rng).copied().expect("names")
}

fn plain_statement<R: Rng>(rng: &mut R) -> String {
    let (a, b, c) = (name(rng), name(rng), name(rng));
    let n = rng.gen_range(0..10);
    match rng.gen_range(0..5) {
        0 => format!("let {a} = {b} + {n};"),
        1 => format!("{a} = {b} * {c};"),
        2 => format!("log({a}, {b});"),
        3 => format!("if ({a} > {n}) {b} = {c};"),
        _ => format!("return {a} - {b};"),
    }
}

fn marker_statement<R: Rng>(rng: &mut R) -> String {
    let (a, b) = (name(rng), name(rng));
    match rng.gen_range(0..3) {
        0 => format!("{a} = {MARKER}({b});"),
        1 => format!("{MARKER}({a}, {b});"),
        _ => format!("let {a} = {b} + {MARKER};"),
    }
}

fn join(lines: &[String]) -> String {
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

/// Binary corpus: label 1 iff an added or replacing line contains
/// [`MARKER`]. Negatives are plain edits; half of them carry the marker in
/// an unchanged line, so its mere presence in the file is not enough.
pub fn marker_corpus(n: usize, seed: u64) -> Vec<CorpusRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let positive = i % 2 == 0;
            let len = rng.gen_range(3..=5);
            let mut before: Vec<String> = (0..len).map(|_| plain_statement(&mut rng)).collect();
            let mut after = before.clone();
            if positive {
                let line = marker_statement(&mut rng);
                if rng.gen_bool(0.5) {
                    after.insert(rng.gen_range(0..=len), line);
                } else {
                    after[rng.gen_range(0..len)] = line;
                }
            } else {
                let edit = rng.gen_range(0..len);
                if rng.gen_bool(0.5) {
                    let ctx = (edit + rng.gen_range(1..len)) % len;
                    before[ctx] = marker_statement(&mut rng);
                    after[ctx] = before[ctx].clone();
                }
                match rng.gen_range(0..3) {
                    0 => after.insert(edit, plain_statement(&mut rng)),
                    1 if before[edit].contains(MARKER) => after.insert(edit, plain_statement(&mut rng)),
                    1 => {
                        after.remove(edit);
                    }
                    _ if before[edit].contains(MARKER) => after.insert(edit, plain_statement(&mut rng)),
                    _ => loop {
                        let s = plain_statement(&mut rng);
                        if s != before[edit] {
                            after[edit] = s;
                            break;
                        }
                    },
                }
            }
            let mut r = CorpusRecord::from_texts(format!("marker-{seed}-{i}"), &join(&before), &join(&after));
            r.label = Some(positive as u8);
            r
        })
        .collect()
}

/// Generation corpus: every change adds, removes or rewrites one
/// assignment, and the message is `"<verb> assignment to <name>"` with
/// verb add/remove/update.
pub fn template_corpus(n: usize, seed: u64) -> Vec<CorpusRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let expr = |rng: &mut ChaCha8Rng| {
        let (b, k) = (name(rng), rng.gen_range(1..10));
        match rng.gen_range(0..3) {
            0 => format!("{b} + {k}"),
            1 => format!("{b} * {k}"),
            _ => format!("max({b}, {k})"),
        }
    };
    (0..n)
        .map(|i| {
            let mut names = NAMES.to_vec();
            names.shuffle(&mut rng);
            let len = rng.gen_range(2..=4);
            let before: Vec<String> = names[..len].iter().map(|a| format!("{a} = {};", expr(&mut rng))).collect();
            let mut after = before.clone();
            let (verb, target) = match i % 3 {
                0 => {
                    let a = names[len];
                    after.insert(rng.gen_range(0..=len), format!("{a} = {};", expr(&mut rng)));
                    ("add", a)
                }
                1 => {
                    let k = rng.gen_range(0..len);
                    after.remove(k);
                    ("remove", names[k])
                }
                _ => {
                    let k = rng.gen_range(0..len);
                    loop {
                        let line = format!("{} = {};", names[k], expr(&mut rng));
                        if line != before[k] {
                            after[k] = line;
                            break;
                        }
                    }
                    ("update", names[k])
                }
            };
            let mut r = CorpusRecord::from_texts(format!("template-{seed}-{i}"), &join(&before), &join(&after));
            r.message = Some(format!("{verb} assignment to {target}"));
            r
        })
        .collect()
}
