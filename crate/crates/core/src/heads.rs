//! Downstream heads over a change vector: a binary classifier, a
//! convolutional commit-message encoder, and a message generator whose
//! decoder memory is enhanced with the change vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{BOS, EOS, PAD};
use crate::error::{Error, Result};
use crate::nn::{
    dropout, positional_encoding, AttentionConfig, DecoderLayer, Graph, Linear, ParamId, ParamStore, Tensor, Var,
};

/// Two-layer MLP producing a single logit.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub hidden: Linear,
    pub output: Linear,
    pub dropout: f64,
    pub input_dim: usize,
}

impl ClassifierParams {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input_dim: usize, hidden_dim: usize, dropout: f64, rng: &mut R) -> Self {
        Self {
            hidden: Linear::new(store, &format!("{name}.hidden"), input_dim, hidden_dim, true, rng),
            output: Linear::new(store, &format!("{name}.output"), hidden_dim, 1, true, rng),
            dropout,
            input_dim,
        }
    }

    /// Logit `[1×1]` over `[v]` or `[v ; msg]`. Dropout is applied only when
    /// an RNG is supplied (training).
    pub fn logit<R: Rng>(&self, g: &mut Graph, v: Var, msg: Option<Var>, rng: Option<&mut R>) -> Result<Var> {
        let x = match msg {
            Some(m) => g.concat_cols(&[v, m]),
            None => v,
        };
        let width = g.value(x).cols();
        if width != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "classifier expects input width {}, got {width}",
                self.input_dim
            )));
        }
        let h = self.hidden.forward(g, x);
        let mut h = g.relu(h);
        if let Some(rng) = rng {
            h = dropout(g, h, self.dropout, rng);
        }
        Ok(self.output.forward(g, h))
    }
}

/// Probability that the change belongs to the positive class.
pub fn classify(v: &[f64], msg: Option<&MessageFeature>, params: &ClassifierParams, store: &ParamStore) -> Result<f64> {
    let mut g = Graph::new(store);
    let v = g.input(Tensor::row_vector(v.to_vec()));
    let m = msg.map(|m| g.input(Tensor::row_vector(m.0.clone())));
    let z = params.logit::<rand::rngs::ThreadRng>(&mut g, v, m, None)?;
    Ok(crate::nn::sigmoid(g.value(z).data()[0]))
}

/// Fixed-width commit-message feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageFeature(pub Vec<f64>);

/// Text CNN: token embedding, one convolution per kernel width with ReLU,
/// max-over-time pooling, concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageEncoder {
    pub embedding: ParamId,
    pub embed_dim: usize,
    pub vocab_size: usize,
    /// `(width, weight [width·e × filters], bias [1 × filters])`.
    pub convolutions: Vec<(usize, ParamId, ParamId)>,
    pub filters: usize,
}

pub const DEFAULT_KERNEL_WIDTHS: [usize; 3] = [1, 2, 3];
pub const DEFAULT_FILTERS: usize = 32;

impl MessageEncoder {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        vocab_size: usize,
        embed_dim: usize,
        widths: &[usize],
        filters: usize,
        rng: &mut R,
    ) -> Self {
        let embedding = store.add_xavier(format!("{name}.embedding"), vocab_size, embed_dim, rng);
        let convolutions = widths
            .iter()
            .map(|&k| {
                let w = store.add_xavier(format!("{name}.conv{k}.weight"), k * embed_dim, filters, rng);
                let b = store.add_zeros(format!("{name}.conv{k}.bias"), 1, filters);
                (k, w, b)
            })
            .collect();
        Self {
            embedding,
            embed_dim,
            vocab_size,
            convolutions,
            filters,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.convolutions.len() * self.filters
    }

    /// Sequences shorter than the widest kernel (including the empty
    /// message) are right-padded with the padding token.
    pub fn forward(&self, g: &mut Graph, tokens: &[u32]) -> Result<Var> {
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= self.vocab_size) {
            return Err(Error::TokenOutOfRange {
                id: bad,
                vocab_size: self.vocab_size,
            });
        }
        let widest = self.convolutions.iter().map(|c| c.0).max().unwrap_or(1);
        let mut ids: Vec<usize> = tokens.iter().map(|&t| t as usize).collect();
        ids.resize(ids.len().max(widest), PAD as usize);
        let n = ids.len();
        let table = g.param(self.embedding);
        let x = g.gather_rows(table, &ids);
        let mut pooled = Vec::with_capacity(self.convolutions.len());
        for &(k, w, b) in &self.convolutions {
            let shifted: Vec<Var> = (0..k).map(|s| g.slice_rows(x, s, n - k + 1 + s)).collect();
            let windows = g.concat_cols(&shifted);
            let (w, b) = (g.param(w), g.param(b));
            let y = g.matmul(windows, w);
            let y = g.add_row(y, b);
            let y = g.relu(y);
            pooled.push(g.max_rows(y));
        }
        Ok(g.concat_cols(&pooled))
    }
}

pub fn encode_message(tokens: &[u32], params: &MessageEncoder, store: &ParamStore) -> Result<MessageFeature> {
    let mut g = Graph::new(store);
    let f = params.forward(&mut g, tokens)?;
    Ok(MessageFeature(g.value(f).data().to_vec()))
}

/// Row `i` of the result is `[H_diff_i ; v]`.
pub fn enhance_memory(g: &mut Graph, h_diff: Var, v: Var) -> Var {
    let n = g.value(h_diff).rows();
    let tiled = g.repeat_rows(v, n);
    g.concat_cols(&[h_diff, tiled])
}

/// Transformer decoder over an enhanced diff memory.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub embedding: ParamId,
    /// Side × change-flag embedding added to diff rows: before/keep,
    /// before/changed, after/keep, after/changed.
    pub segment: ParamId,
    pub layers: Vec<DecoderLayer>,
    pub output: Linear,
    pub model_dim: usize,
    pub vector_dim: usize,
    pub vocab_size: usize,
}

impl DecoderParams {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        vocab_size: usize,
        attention: AttentionConfig,
        vector_dim: usize,
        num_layers: usize,
        rng: &mut R,
    ) -> Self {
        let d = attention.model_dim;
        Self {
            embedding: store.add_xavier(format!("{name}.embedding"), vocab_size, d, rng),
            segment: store.add_xavier(format!("{name}.segment"), 4, d, rng),
            layers: (0..num_layers)
                .map(|i| DecoderLayer::new(store, &format!("{name}.layer{i}"), attention, d + vector_dim, rng))
                .collect(),
            output: Linear::new(store, &format!("{name}.output"), d, vocab_size, true, rng),
            model_dim: d,
            vector_dim,
            vocab_size,
        }
    }

    /// `H_diff = [H^b ; H^a]` plus segment embeddings, enhanced with `v`.
    /// An empty diff yields a single `[0 ; v]` row so cross-attention has a key.
    pub fn memory(&self, g: &mut Graph, hb: Var, ha: Var, flags_before: &[u8], flags_after: &[u8], v: Var) -> Var {
        let seg: Vec<usize> = flags_before
            .iter()
            .map(|&f| f as usize)
            .chain(flags_after.iter().map(|&f| 2 + f as usize))
            .collect();
        if seg.is_empty() {
            let zero = g.input(Tensor::zeros(&[1, self.model_dim]));
            return enhance_memory(g, zero, v);
        }
        let table = g.param(self.segment);
        let s = g.gather_rows(table, &seg);
        let h = g.concat_rows(&[hb, ha]);
        let h = g.add(h, s);
        enhance_memory(g, h, v)
    }

    /// Logits `[len × vocab]` for a decoder input sequence.
    pub fn logits(&self, g: &mut Graph, input: &[u32], memory: Var) -> Result<Var> {
        if let Some(&bad) = input.iter().find(|&&t| t as usize >= self.vocab_size) {
            return Err(Error::TokenOutOfRange {
                id: bad,
                vocab_size: self.vocab_size,
            });
        }
        let ids: Vec<usize> = input.iter().map(|&t| t as usize).collect();
        let table = g.param(self.embedding);
        let e = g.gather_rows(table, &ids);
        let pe = g.input(positional_encoding(ids.len(), self.model_dim));
        let mut x = g.add(e, pe);
        for layer in &self.layers {
            x = layer.forward(g, x, memory)?;
        }
        Ok(self.output.forward(g, x))
    }

    /// Teacher-forced mean cross-entropy of `BOS message` → `message EOS`.
    pub fn loss(&self, g: &mut Graph, message: &[u32], memory: Var) -> Result<Var> {
        let mut input = vec![BOS];
        input.extend_from_slice(message);
        let mut target: Vec<usize> = message.iter().map(|&t| t as usize).collect();
        target.push(EOS as usize);
        let logits = self.logits(g, &input, memory)?;
        Ok(g.cross_entropy(logits, &target))
    }

    /// Greedy decoding; the end token is not included in the output.
    pub fn generate(&self, g: &mut Graph, memory: Var, max_len: usize) -> Result<Vec<u32>> {
        let mut seq = vec![BOS];
        let mut out = Vec::new();
        while out.len() < max_len {
            let logits = self.logits(g, &seq, memory)?;
            let last = g.value(logits).row(seq.len() - 1);
            let next = argmax_token(last);
            if next == EOS {
                break;
            }
            out.push(next);
            seq.push(next);
        }
        Ok(out)
    }
}

/// Highest-scoring token other than padding and the start token; the lowest
/// id wins ties.
fn argmax_token(logits: &[f64]) -> u32 {
    let mut best = (EOS as usize, f64::NEG_INFINITY);
    for (i, &z) in logits.iter().enumerate() {
        if i == PAD as usize || i == BOS as usize {
            continue;
        }
        if z > best.1 {
            best = (i, z);
        }
    }
    best.0 as u32
}
