//! Line and token alignment of a unified diff, printed as alignment JSON.
//!
//! cargo run --example align_hunks

use changerep::diff::{align_lines, alignment_json, build_vocab, parse_unified_diff, preprocess_hunks, Limits, VocabConfig};

const DIFF: &str = "@@ -1,4 +1,4 @@
-if (cursor != null) {
-cursor.moveToFirst();
+if (cursor != null && cursor.moveToFirst()) {
 int idx = cursor.getColumnIndex();
+if (idx != -1)
 result = cursor.getString(idx);}
";

fn main() -> anyhow::Result<()> {
    let hunks = parse_unified_diff(DIFF)?;
    let (pairs, next) = align_lines(&hunks[0], 1);
    for p in &pairs {
        println!(
            "{:<8} {:>4} {:>4}  {:<36} | {}",
            format!("{:?}", p.change_type),
            p.line_index_before.map_or("-".into(), |i| i.to_string()),
            p.line_index_after.map_or("-".into(), |i| i.to_string()),
            p.before_line.as_deref().unwrap_or(""),
            p.after_line.as_deref().unwrap_or(""),
        );
    }
    println!("next line index: {next}\n");

    let lines = hunks.iter().flat_map(|h| h.before_lines.iter().chain(&h.after_lines)).map(String::as_str);
    let vocab = build_vocab(lines, &VocabConfig::default());
    let prepared = preprocess_hunks(&hunks, &vocab, &Limits::default())?;
    println!("{}", serde_json::to_string(&alignment_json(&prepared))?);
    Ok(())
}
