//! Token-level, line-level and hybrid query-back mechanisms.
//!
//! Changed fragments of a change are encoded into a single query vector,
//! which then attends over the full before/after embeddings; the two
//! retrieved vectors are summed into the change representation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diff::PreparedChange;
use crate::encoder::ContextualEmbeddings;
use crate::error::Result;
use crate::nn::{
    positional_rows, AttentionConfig, AttnMask, EncoderLayer, Graph, LayerNorm, MultiHeadAttention,
    ParamId, ParamStore, Tensor, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Token,
    Line,
    Hybrid,
    /// Ablation without query-back: `mean(H^b) + mean(H^a)`.
    Pooled,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Token => "token",
            Variant::Line => "line",
            Variant::Hybrid => "hybrid",
            Variant::Pooled => "pooled",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "token" => Ok(Variant::Token),
            "line" => Ok(Variant::Line),
            "hybrid" => Ok(Variant::Hybrid),
            "pooled" => Ok(Variant::Pooled),
            other => Err(format!("unknown variant `{other}` (token, line, hybrid, pooled)")),
        }
    }
}

/// Final change vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeRepresentation {
    pub vector: Vec<f64>,
    pub variant: Variant,
}

/// Per-change bookkeeping of degenerate paths and truncation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_b: usize,
    pub n_a: usize,
    pub changed_lines: usize,
    /// Changed tokens whose line index exceeds the line matrix height.
    pub tokens_beyond_rows: usize,
    /// Changed-line tokens past the line matrix width.
    pub tokens_beyond_width: usize,
    pub empty_token_query: bool,
    pub empty_line_query: bool,
    pub empty_before: bool,
    pub empty_after: bool,
}

impl Diagnostics {
    fn absorb(&mut self, layout: &LineLayout) {
        self.tokens_beyond_rows += layout.beyond_rows;
        self.tokens_beyond_width += layout.beyond_width;
    }
}

/// Changed-token embeddings `H'`: before-side rows first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangedTokenSet {
    pub rows: Tensor,
    pub n_b: usize,
    pub n_a: usize,
}

fn flagged(flags: &[u8]) -> Vec<usize> {
    flags.iter().enumerate().filter(|(_, &f)| f == 1).map(|(i, _)| i).collect()
}

/// Masked select of flagged rows, before side then after side, order kept.
pub fn select_changed(h: &ContextualEmbeddings, flags_before: &[u8], flags_after: &[u8]) -> ChangedTokenSet {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let (hb, ha) = (g.input(h.before.clone()), g.input(h.after.clone()));
    let v = select_changed_var(&mut g, hb, ha, flags_before, flags_after);
    ChangedTokenSet {
        rows: g.value(v).clone(),
        n_b: flagged(flags_before).len(),
        n_a: flagged(flags_after).len(),
    }
}

pub fn select_changed_var(g: &mut Graph, hb: Var, ha: Var, flags_before: &[u8], flags_after: &[u8]) -> Var {
    assert_eq!(flags_before.len(), g.value(hb).rows(), "before flag count");
    assert_eq!(flags_after.len(), g.value(ha).rows(), "after flag count");
    let b = g.gather_rows(hb, &flagged(flags_before));
    let a = g.gather_rows(ha, &flagged(flags_after));
    g.concat_rows(&[b, a])
}

/// Placement of a side's tokens into a line matrix of `rows × width`
/// slots. Matrix row `r` holds line index `r + 1`; index 0 is dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineLayout {
    /// Token positions per row, in sequence order.
    pub slots: Vec<Vec<usize>>,
    pub beyond_rows: usize,
    pub beyond_width: usize,
}

impl LineLayout {
    pub fn new(line_indices: &[usize], rows: usize, width: usize) -> Self {
        let mut slots = vec![Vec::new(); rows];
        let (mut beyond_rows, mut beyond_width) = (0, 0);
        for (pos, &li) in line_indices.iter().enumerate() {
            if li == 0 {
                continue;
            }
            if li > rows {
                beyond_rows += 1;
                continue;
            }
            let row = &mut slots[li - 1];
            if row.len() < width {
                row.push(pos);
            } else {
                beyond_width += 1;
            }
        }
        Self {
            slots,
            beyond_rows,
            beyond_width,
        }
    }
}

/// Scattered line structure of one side: data `[L × W × d]`, slot
/// occupancy `[L × W]`, and the per-row changed-line mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LineMatrix {
    pub data: Tensor,
    pub occupancy: Vec<bool>,
    pub changed_line_mask: Vec<bool>,
    pub rows: usize,
    pub width: usize,
}

impl LineMatrix {
    pub fn occupied(&self, row: usize, slot: usize) -> bool {
        self.occupancy[row * self.width + slot]
    }

    pub fn cell(&self, row: usize, slot: usize) -> &[f64] {
        let d = self.data.shape()[2];
        let start = (row * self.width + slot) * d;
        &self.data.data()[start..start + d]
    }
}

/// Scattering-reshaping of one side's embeddings by line index.
pub fn scatter_lines(h: &Tensor, line_indices: &[usize], rows: usize, width: usize) -> LineMatrix {
    assert_eq!(h.rows(), line_indices.len());
    let d = h.cols();
    let layout = LineLayout::new(line_indices, rows, width);
    let mut data = vec![0.0; rows * width * d];
    let mut occupancy = vec![false; rows * width];
    for (r, row) in layout.slots.iter().enumerate() {
        for (s, &pos) in row.iter().enumerate() {
            occupancy[r * width + s] = true;
            data[(r * width + s) * d..(r * width + s + 1) * d].copy_from_slice(h.row(pos));
        }
    }
    LineMatrix {
        data: Tensor::new(vec![rows, width, d], data),
        occupancy,
        changed_line_mask: layout.slots.iter().map(|s| !s.is_empty()).collect(),
        rows,
        width,
    }
}

/// Paired lines `[CLS, before row, SEP, after row]`, shape `[L × (2W+2) × d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedLines {
    pub data: Tensor,
    pub occupancy: Vec<bool>,
    pub row_mask: Vec<bool>,
    pub rows: usize,
    pub slots: usize,
}

/// Token-level query: transformer over `H'` (no positional encoding).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenPath {
    pub layers: Vec<EncoderLayer>,
    pub attention: MultiHeadAttention,
}

/// Line-level query: transformer over paired lines with positional encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinePath {
    pub layers: Vec<EncoderLayer>,
    pub cls: ParamId,
    pub sep: ParamId,
    pub attention: MultiHeadAttention,
    pub rows: usize,
    pub width: usize,
}

/// `LayerNorm(v^t W_t) + LayerNorm(v^l W_l)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridMerge {
    pub w_token: ParamId,
    pub w_line: ParamId,
    pub norm_token: LayerNorm,
    pub norm_line: LayerNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryBackConfig {
    pub attention: AttentionConfig,
    pub token_layers: usize,
    pub line_layers: usize,
    pub line_rows: usize,
    pub line_width: usize,
    pub hybrid_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBackParams {
    pub variant: Variant,
    pub config: QueryBackConfig,
    pub token: Option<TokenPath>,
    pub line: Option<LinePath>,
    pub hybrid: Option<HybridMerge>,
}

impl QueryBackParams {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, variant: Variant, config: QueryBackConfig, rng: &mut R) -> Self {
        let att = config.attention;
        let d = att.model_dim;
        let token = matches!(variant, Variant::Token | Variant::Hybrid).then(|| TokenPath {
            layers: (0..config.token_layers)
                .map(|i| EncoderLayer::new(store, &format!("{name}.token.layer{i}"), att, rng))
                .collect(),
            attention: MultiHeadAttention::new(store, &format!("{name}.token.query_back"), att, d, rng),
        });
        let line = matches!(variant, Variant::Line | Variant::Hybrid).then(|| LinePath {
            layers: (0..config.line_layers)
                .map(|i| EncoderLayer::new(store, &format!("{name}.line.layer{i}"), att, rng))
                .collect(),
            cls: store.add_xavier(format!("{name}.line.cls"), 1, d, rng),
            sep: store.add_xavier(format!("{name}.line.sep"), 1, d, rng),
            attention: MultiHeadAttention::new(store, &format!("{name}.line.query_back"), att, d, rng),
            rows: config.line_rows,
            width: config.line_width,
        });
        let hybrid = (variant == Variant::Hybrid).then(|| HybridMerge {
            w_token: store.add_xavier(format!("{name}.hybrid.w_token"), d, config.hybrid_dim, rng),
            w_line: store.add_xavier(format!("{name}.hybrid.w_line"), d, config.hybrid_dim, rng),
            norm_token: LayerNorm::new(store, &format!("{name}.hybrid.norm_token"), config.hybrid_dim),
            norm_line: LayerNorm::new(store, &format!("{name}.hybrid.norm_line"), config.hybrid_dim),
        });
        Self {
            variant,
            config,
            token,
            line,
            hybrid,
        }
    }

    /// Width of the representation this variant produces.
    pub fn output_dim(&self) -> usize {
        match self.variant {
            Variant::Hybrid => self.config.hybrid_dim,
            _ => self.config.attention.model_dim,
        }
    }
}

/// Token query `q^t`: transformer over `H'`, then mean pooling; zero when
/// `H'` is empty.
pub fn build_token_query(g: &mut Graph, changed: Var, path: &TokenPath) -> Result<Var> {
    let mut x = changed;
    for layer in &path.layers {
        x = layer.forward(g, x, None)?;
    }
    Ok(g.mean_all_rows(x))
}

/// Builds the dense paired-line tensor from two line matrices.
pub fn build_paired_lines(before: &LineMatrix, after: &LineMatrix, cls: &[f64], sep: &[f64]) -> PairedLines {
    assert_eq!((before.rows, before.width), (after.rows, after.width), "line matrix shapes");
    let (rows, width) = (before.rows, before.width);
    let d = before.data.shape()[2];
    let slots = 2 * width + 2;
    let mut data = vec![0.0; rows * slots * d];
    let mut occupancy = vec![false; rows * slots];
    for r in 0..rows {
        let mut put = |slot: usize, v: &[f64], occ: bool| {
            data[(r * slots + slot) * d..(r * slots + slot + 1) * d].copy_from_slice(v);
            occupancy[r * slots + slot] = occ;
        };
        put(0, cls, true);
        put(width + 1, sep, true);
        for s in 0..width {
            put(1 + s, before.cell(r, s), before.occupied(r, s));
            put(width + 2 + s, after.cell(r, s), after.occupied(r, s));
        }
    }
    PairedLines {
        data: Tensor::new(vec![rows, slots, d], data),
        occupancy,
        row_mask: before
            .changed_line_mask
            .iter()
            .zip(&after.changed_line_mask)
            .map(|(b, a)| *b || *a)
            .collect(),
        rows,
        slots,
    }
}

/// One paired line as a sequence of occupied slots and their slot positions.
struct PairedRow {
    seq: Var,
    positions: Vec<usize>,
}

/// Runs each paired line through the line transformer, takes the CLS
/// state, and mean-pools over changed rows. Zero when there are none.
fn line_query_from_rows(g: &mut Graph, rows: Vec<PairedRow>, path: &LinePath, d: usize) -> Result<Var> {
    let mut cls_states = Vec::with_capacity(rows.len());
    for row in rows {
        let pe = g.input(positional_rows(&row.positions, d));
        let mut x = g.add(row.seq, pe);
        for layer in &path.layers {
            x = layer.forward(g, x, None)?;
        }
        cls_states.push(g.slice_rows(x, 0, 1));
    }
    if cls_states.is_empty() {
        return Ok(g.input(Tensor::zeros(&[1, d])));
    }
    let stacked = g.concat_rows(&cls_states);
    Ok(g.mean_all_rows(stacked))
}

/// Line query `q^l` from a dense paired-line tensor. Unoccupied slots are
/// excluded from attention, so their contents never reach the output.
pub fn build_line_query(g: &mut Graph, paired: &PairedLines, path: &LinePath) -> Result<Var> {
    let d = paired.data.shape()[2];
    let flat = paired.data.clone().reshape(vec![paired.rows * paired.slots, d]);
    let all = g.input(flat);
    let mut rows = Vec::new();
    for r in (0..paired.rows).filter(|&r| paired.row_mask[r]) {
        let positions: Vec<usize> = (0..paired.slots).filter(|&s| paired.occupancy[r * paired.slots + s]).collect();
        let index: Vec<usize> = positions.iter().map(|s| r * paired.slots + s).collect();
        let seq = g.gather_rows(all, &index);
        rows.push(PairedRow { seq, positions });
    }
    line_query_from_rows(g, rows, path, d)
}

/// Line query straight from the side embeddings, without materializing
/// the dense tensor.
fn line_query_var(
    g: &mut Graph,
    hb: Var,
    ha: Var,
    prepared: &PreparedChange,
    path: &LinePath,
    diag: &mut Diagnostics,
) -> Result<Var> {
    let d = g.value(hb).cols();
    let lb = LineLayout::new(&prepared.before.line_index, path.rows, path.width);
    let la = LineLayout::new(&prepared.after.line_index, path.rows, path.width);
    diag.absorb(&lb);
    diag.absorb(&la);
    let (cls, sep) = (g.param(path.cls), g.param(path.sep));
    let mut rows = Vec::new();
    for r in 0..path.rows {
        let (sb, sa) = (&lb.slots[r], &la.slots[r]);
        if sb.is_empty() && sa.is_empty() {
            continue;
        }
        let mut parts = vec![cls];
        let mut positions = vec![0];
        if !sb.is_empty() {
            parts.push(g.gather_rows(hb, sb));
            positions.extend(1..=sb.len());
        }
        parts.push(sep);
        positions.push(path.width + 1);
        if !sa.is_empty() {
            parts.push(g.gather_rows(ha, sa));
            positions.extend(path.width + 2..path.width + 2 + sa.len());
        }
        let seq = g.concat_rows(&parts);
        rows.push(PairedRow { seq, positions });
    }
    diag.changed_lines = rows.len();
    diag.empty_line_query = rows.is_empty();
    line_query_from_rows(g, rows, path, d)
}

/// `(MultiHead(q, H^b, H^b), MultiHead(q, H^a, H^a))`; a side without rows
/// yields the zero vector.
pub fn query_back(g: &mut Graph, q: Var, hb: Var, ha: Var, attention: &MultiHeadAttention) -> Result<(Var, Var)> {
    let d = attention.config.model_dim;
    let side = |g: &mut Graph, h: Var| -> Result<Var> {
        if g.value(h).rows() == 0 {
            return Ok(g.input(Tensor::zeros(&[1, d])));
        }
        attention.forward(g, q, h, AttnMask::None)
    };
    let vb = side(g, hb)?;
    let va = side(g, ha)?;
    Ok((vb, va))
}

/// Query-back attention weights per head over each side (empty sides give
/// no weights).
pub fn query_back_weights(
    g: &mut Graph,
    q: Var,
    hb: Var,
    ha: Var,
    attention: &MultiHeadAttention,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let side = |g: &mut Graph, h: Var| -> Result<Vec<Vec<f64>>> {
        if g.value(h).rows() == 0 {
            return Ok(Vec::new());
        }
        let (_, w) = attention.forward_with_weights(g, q, h, AttnMask::None)?;
        Ok(w.iter().map(|&w| g.value(w).row(0).to_vec()).collect())
    };
    Ok((side(g, hb)?, side(g, ha)?))
}

pub fn merge_token(g: &mut Graph, vb: Var, va: Var) -> Var {
    g.add(vb, va)
}

pub fn merge_hybrid(g: &mut Graph, vt: Var, vl: Var, merge: &HybridMerge) -> Var {
    let (wt, wl) = (g.param(merge.w_token), g.param(merge.w_line));
    let pt = g.matmul(vt, wt);
    let pl = g.matmul(vl, wl);
    let nt = merge.norm_token.forward(g, pt);
    let nl = merge.norm_line.forward(g, pl);
    g.add(nt, nl)
}

/// Token-level query `q^t` for a change (exposed for inspection).
pub fn token_query_var(g: &mut Graph, hb: Var, ha: Var, prepared: &PreparedChange, path: &TokenPath) -> Result<Var> {
    let changed = select_changed_var(g, hb, ha, &prepared.before.change_flag, &prepared.after.change_flag);
    build_token_query(g, changed, path)
}

/// The representation `[1 × output_dim]` of a change on the graph.
pub fn represent_var(
    g: &mut Graph,
    prepared: &PreparedChange,
    hb: Var,
    ha: Var,
    params: &QueryBackParams,
) -> Result<(Var, Diagnostics)> {
    let mut diag = Diagnostics {
        n_b: prepared.before.changed_count(),
        n_a: prepared.after.changed_count(),
        empty_before: g.value(hb).rows() == 0,
        empty_after: g.value(ha).rows() == 0,
        ..Default::default()
    };
    let token = |g: &mut Graph, diag: &mut Diagnostics| -> Result<Var> {
        let path = params.token.as_ref().expect("token path present");
        diag.empty_token_query = diag.n_b + diag.n_a == 0;
        let q = token_query_var(g, hb, ha, prepared, path)?;
        let (vb, va) = query_back(g, q, hb, ha, &path.attention)?;
        Ok(merge_token(g, vb, va))
    };
    let line = |g: &mut Graph, diag: &mut Diagnostics| -> Result<Var> {
        let path = params.line.as_ref().expect("line path present");
        let q = line_query_var(g, hb, ha, prepared, path, diag)?;
        let (vb, va) = query_back(g, q, hb, ha, &path.attention)?;
        Ok(merge_token(g, vb, va))
    };
    let v = match params.variant {
        Variant::Token => token(g, &mut diag)?,
        Variant::Line => line(g, &mut diag)?,
        Variant::Hybrid => {
            let vt = token(g, &mut diag)?;
            let vl = line(g, &mut diag)?;
            merge_hybrid(g, vt, vl, params.hybrid.as_ref().expect("hybrid merge present"))
        }
        Variant::Pooled => {
            let pb = g.mean_all_rows(hb);
            let pa = g.mean_all_rows(ha);
            g.add(pb, pa)
        }
    };
    Ok((v, diag))
}

/// Forward-only representation from precomputed embeddings.
pub fn represent(
    prepared: &PreparedChange,
    h: &ContextualEmbeddings,
    params: &QueryBackParams,
    store: &ParamStore,
) -> Result<(ChangeRepresentation, Diagnostics)> {
    let mut g = Graph::new(store);
    let (hb, ha) = (g.input(h.before.clone()), g.input(h.after.clone()));
    let (v, diag) = represent_var(&mut g, prepared, hb, ha, params)?;
    Ok((
        ChangeRepresentation {
            vector: g.value(v).data().to_vec(),
            variant: params.variant,
        },
        diag,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::Side;
    use crate::nn::gradcheck::check_gradients;
    use crate::nn::AttentionConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const D: usize = 8;

    fn config() -> QueryBackConfig {
        QueryBackConfig {
            attention: AttentionConfig::new(D, 2).unwrap(),
            token_layers: 1,
            line_layers: 1,
            line_rows: 4,
            line_width: 3,
            hybrid_dim: 6,
        }
    }

    fn random(rows: usize, rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::matrix(rows, D, (0..rows * D).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn sample() -> (PreparedChange, ContextualEmbeddings) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = PreparedChange::empty();
        p.before = Side {
            tokens: vec![3; 6],
            line_index: vec![0, 0, 1, 1, 2, 5],
            change_flag: vec![0, 0, 1, 1, 1, 1],
        };
        p.after = Side {
            tokens: vec![3; 7],
            line_index: vec![0, 1, 1, 1, 1, 3, 0],
            change_flag: vec![0, 1, 1, 1, 1, 1, 0],
        };
        let h = ContextualEmbeddings {
            before: random(6, &mut rng),
            after: random(7, &mut rng),
        };
        (p, h)
    }

    fn params(variant: Variant) -> (ParamStore, QueryBackParams) {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let qb = QueryBackParams::new(&mut store, "qb", variant, config(), &mut rng);
        (store, qb)
    }

    #[test]
    fn select_changed_matches_loop() {
        let (p, h) = sample();
        let set = select_changed(&h, &p.before.change_flag, &p.after.change_flag);
        let mut want = Vec::new();
        for (i, &f) in p.before.change_flag.iter().enumerate() {
            if f == 1 {
                want.extend_from_slice(h.before.row(i));
            }
        }
        for (i, &f) in p.after.change_flag.iter().enumerate() {
            if f == 1 {
                want.extend_from_slice(h.after.row(i));
            }
        }
        assert_eq!((set.n_b, set.n_a), (4, 5));
        assert_eq!(set.rows.data(), &want[..]);
    }

    #[test]
    fn scatter_matches_loop_and_counts_overflow() {
        let (p, h) = sample();
        let m = scatter_lines(&h.after, &p.after.line_index, 4, 3);
        // Line 1 has four tokens; the fourth overflows width 3.
        for r in 0..4 {
            let mut slot = 0;
            for (pos, &li) in p.after.line_index.iter().enumerate() {
                if li == r + 1 && slot < 3 {
                    assert!(m.occupied(r, slot));
                    assert_eq!(m.cell(r, slot), h.after.row(pos));
                    slot += 1;
                }
            }
            for s in slot..3 {
                assert!(!m.occupied(r, s));
                assert!(m.cell(r, s).iter().all(|&v| v == 0.0));
            }
        }
        assert_eq!(m.changed_line_mask, vec![true, false, true, false]);
        let layout = LineLayout::new(&p.after.line_index, 4, 3);
        assert_eq!((layout.beyond_rows, layout.beyond_width), (0, 1));
        let layout = LineLayout::new(&p.before.line_index, 4, 3);
        assert_eq!((layout.beyond_rows, layout.beyond_width), (1, 0));
    }

    #[test]
    fn dense_and_gathered_line_queries_agree() {
        let (p, h) = sample();
        let (store, qb) = params(Variant::Line);
        let path = qb.line.as_ref().unwrap();
        let mut g = Graph::new(&store);
        let (hb, ha) = (g.input(h.before.clone()), g.input(h.after.clone()));
        let mut diag = Diagnostics::default();
        let q1 = line_query_var(&mut g, hb, ha, &p, path, &mut diag).unwrap();
        let mb = scatter_lines(&h.before, &p.before.line_index, 4, 3);
        let ma = scatter_lines(&h.after, &p.after.line_index, 4, 3);
        let paired = build_paired_lines(&mb, &ma, store.get(path.cls).data(), store.get(path.sep).data());
        assert_eq!(paired.data.shape(), &[4, 8, D]);
        let q2 = build_line_query(&mut g, &paired, path).unwrap();
        assert!(g.value(q1).max_abs_diff(g.value(q2)) < 1e-12);
        assert_eq!(diag.changed_lines, 3);
        assert_eq!((diag.tokens_beyond_rows, diag.tokens_beyond_width), (1, 1));
    }

    #[test]
    fn unoccupied_slot_contents_do_not_matter() {
        let (p, h) = sample();
        let (store, qb) = params(Variant::Line);
        let path = qb.line.as_ref().unwrap();
        let mb = scatter_lines(&h.before, &p.before.line_index, 4, 3);
        let ma = scatter_lines(&h.after, &p.after.line_index, 4, 3);
        let paired = build_paired_lines(&mb, &ma, store.get(path.cls).data(), store.get(path.sep).data());
        let mut noisy = paired.clone();
        for (i, occ) in paired.occupancy.iter().enumerate() {
            if !occ {
                noisy.data.data_mut()[i * D..(i + 1) * D].fill(123.0);
            }
        }
        let mut g = Graph::new(&store);
        let a = build_line_query(&mut g, &paired, path).unwrap();
        let b = build_line_query(&mut g, &noisy, path).unwrap();
        assert_eq!(g.value(a), g.value(b));
    }

    #[test]
    fn empty_paths_give_zero_vectors() {
        let (mut p, h) = sample();
        p.before.change_flag.fill(0);
        p.after.change_flag.fill(0);
        p.before.line_index.fill(0);
        p.after.line_index.fill(0);
        let (store, qb) = params(Variant::Hybrid);
        let mut g = Graph::new(&store);
        let (hb, ha) = (g.input(h.before.clone()), g.input(h.after.clone()));
        let q = token_query_var(&mut g, hb, ha, &p, qb.token.as_ref().unwrap()).unwrap();
        assert!(g.value(q).data().iter().all(|&v| v == 0.0));
        let mut diag = Diagnostics::default();
        let q = line_query_var(&mut g, hb, ha, &p, qb.line.as_ref().unwrap(), &mut diag).unwrap();
        assert!(g.value(q).data().iter().all(|&v| v == 0.0));
        assert!(diag.empty_line_query);
        let (r, diag) = represent(&p, &h, &qb, &store).unwrap();
        assert!(diag.empty_token_query && diag.empty_line_query);
        assert!(r.vector.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn query_back_on_empty_side_is_zero() {
        let (store, qb) = params(Variant::Token);
        let att = &qb.token.as_ref().unwrap().attention;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut g = Graph::new(&store);
        let q = g.input(random(1, &mut rng));
        let hb = g.input(Tensor::zeros(&[0, D]));
        let ha = g.input(random(3, &mut rng));
        let (vb, va) = query_back(&mut g, q, hb, ha, att).unwrap();
        assert!(g.value(vb).data().iter().all(|&v| v == 0.0));
        assert!(g.value(va).data().iter().any(|&v| v != 0.0));
        let (wb, wa) = query_back_weights(&mut g, q, hb, ha, att).unwrap();
        assert!(wb.is_empty());
        assert_eq!(wa.len(), 2);
        for head in wa {
            assert!((head.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn token_variant_is_symmetric_in_sides() {
        let (p, h) = sample();
        let (store, qb) = params(Variant::Token);
        let mut swapped = p.clone();
        std::mem::swap(&mut swapped.before, &mut swapped.after);
        let hs = ContextualEmbeddings {
            before: h.after.clone(),
            after: h.before.clone(),
        };
        let (a, _) = represent(&p, &h, &qb, &store).unwrap();
        let (b, _) = represent(&swapped, &hs, &qb, &store).unwrap();
        // Changed rows are reordered, and mean pooling over a
        // permutation-equivariant stack is order-free.
        for (x, y) in a.vector.iter().zip(&b.vector) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn output_dims_and_pooled_formula() {
        let (p, h) = sample();
        for (variant, dim) in [(Variant::Token, D), (Variant::Line, D), (Variant::Hybrid, 6), (Variant::Pooled, D)] {
            let (store, qb) = params(variant);
            assert_eq!(qb.output_dim(), dim);
            let (r, _) = represent(&p, &h, &qb, &store).unwrap();
            assert_eq!(r.vector.len(), dim);
            if variant == Variant::Pooled {
                for j in 0..D {
                    let mb: f64 = (0..6).map(|i| h.before.row(i)[j]).sum::<f64>() / 6.0;
                    let ma: f64 = (0..7).map(|i| h.after.row(i)[j]).sum::<f64>() / 7.0;
                    assert!((r.vector[j] - (mb + ma)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hybrid_gradients_match_finite_differences() {
        let (p, h) = sample();
        let (store, qb) = params(Variant::Hybrid);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let weights = Tensor::matrix(6, 1, (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let report = check_gradients(&store, &[h.before.clone(), h.after.clone()], 1e-5, |g, x| {
            let (v, _) = represent_var(g, &p, x[0], x[1], &qb).unwrap();
            let w = g.input(weights.clone());
            let s = g.matmul(v, w);
            g.sum(s)
        });
        assert!(report.max_rel_error() < 1e-4, "{:?}", report.worst());
        assert!(report.any_signal());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in [Variant::Token, Variant::Line, Variant::Hybrid, Variant::Pooled] {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("tokens".parse::<Variant>().is_err());
    }
}
