//! Attention and transformer building blocks on top of [`Graph`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};
use super::params::{ParamId, ParamStore};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionConfig {
    pub model_dim: usize,
    pub num_heads: usize,
}

impl AttentionConfig {
    pub fn new(model_dim: usize, num_heads: usize) -> Result<Self> {
        if num_heads == 0 || model_dim == 0 || !model_dim.is_multiple_of(num_heads) {
            return Err(Error::Config(format!(
                "{num_heads} heads must evenly divide model dim {model_dim}"
            )));
        }
        Ok(Self { model_dim, num_heads })
    }

    pub fn key_dim(&self) -> usize {
        self.model_dim / self.num_heads
    }
}

/// Which (query, key) positions may interact. `true` means attend.
#[derive(Debug, Clone, Copy)]
pub enum AttnMask<'a> {
    None,
    /// One flag per key position, shared by every query.
    Keys(&'a [bool]),
    /// Query `i` sees keys `0..=i`.
    Causal,
}

impl AttnMask<'_> {
    fn expand(&self, m: usize, n: usize) -> Result<Option<Vec<bool>>> {
        let full = match *self {
            AttnMask::None => return Ok(None),
            AttnMask::Keys(keys) => {
                assert_eq!(keys.len(), n, "key mask length");
                if m > 0 && !keys.iter().any(|&k| k) {
                    return Err(Error::AllKeysMasked { queries: m });
                }
                (0..m).flat_map(|_| keys.iter().copied()).collect()
            }
            AttnMask::Causal => (0..m).flat_map(|i| (0..n).map(move |j| j <= i)).collect(),
        };
        Ok(Some(full))
    }
}

/// `softmax(Q Kᵀ / √d_k) V`; also returns the weight matrix node.
pub fn scaled_dot_attention_weights(
    g: &mut Graph,
    q: Var,
    k: Var,
    v: Var,
    mask: AttnMask,
) -> Result<(Var, Var)> {
    let (m, dk) = (g.value(q).rows(), g.value(q).cols());
    let n = g.value(k).rows();
    if m > 0 && n == 0 {
        return Err(Error::AllKeysMasked { queries: m });
    }
    let full = mask.expand(m, n)?;
    let scores = g.matmul_nt(q, k);
    let scores = g.scale(scores, 1.0 / (dk as f64).sqrt());
    let weights = g.softmax_rows(scores, full.as_deref());
    Ok((g.matmul(weights, v), weights))
}

pub fn scaled_dot_attention(g: &mut Graph, q: Var, k: Var, v: Var, mask: AttnMask) -> Result<Var> {
    scaled_dot_attention_weights(g, q, k, v, mask).map(|(out, _)| out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
}

impl Linear {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, bias: bool, rng: &mut R) -> Self {
        let weight = store.add_xavier(format!("{name}.weight"), fan_in, fan_out, rng);
        let bias = bias.then(|| store.add_zeros(format!("{name}.bias"), 1, fan_out));
        Self { weight, bias }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let w = g.param(self.weight);
        let y = g.matmul(x, w);
        match self.bias {
            Some(b) => {
                let b = g.param(b);
                g.add_row(y, b)
            }
            None => y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        Self {
            gamma: store.add_ones(format!("{name}.gamma"), 1, dim),
            beta: store.add_zeros(format!("{name}.beta"), 1, dim),
        }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let (gamma, beta) = (g.param(self.gamma), g.param(self.beta));
        g.layer_norm(x, gamma, beta)
    }
}

/// Multi-head attention with bias-free projections `W^Q`, `W^K`, `W^V`
/// (all heads side by side) and output projection `W^M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiHeadAttention {
    pub config: AttentionConfig,
    pub w_query: ParamId,
    pub w_key: ParamId,
    pub w_value: ParamId,
    pub w_out: ParamId,
}

impl MultiHeadAttention {
    /// `kv_dim` is the width of the key/value source (equal to the model
    /// dim for self-attention).
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, config: AttentionConfig, kv_dim: usize, rng: &mut R) -> Self {
        let d = config.model_dim;
        Self {
            config,
            w_query: store.add_xavier(format!("{name}.w_query"), d, d, rng),
            w_key: store.add_xavier(format!("{name}.w_key"), kv_dim, d, rng),
            w_value: store.add_xavier(format!("{name}.w_value"), kv_dim, d, rng),
            w_out: store.add_xavier(format!("{name}.w_out"), d, d, rng),
        }
    }

    pub fn forward(&self, g: &mut Graph, queries: Var, kv: Var, mask: AttnMask) -> Result<Var> {
        self.forward_with_weights(g, queries, kv, mask).map(|(out, _)| out)
    }

    /// Output `[m × d]` and one attention weight node `[m × n]` per head.
    pub fn forward_with_weights(&self, g: &mut Graph, queries: Var, kv: Var, mask: AttnMask) -> Result<(Var, Vec<Var>)> {
        let (wq, wk, wv, wo) = (
            g.param(self.w_query),
            g.param(self.w_key),
            g.param(self.w_value),
            g.param(self.w_out),
        );
        let q = g.matmul(queries, wq);
        let k = g.matmul(kv, wk);
        let v = g.matmul(kv, wv);
        let dk = self.config.key_dim();
        let mut heads = Vec::with_capacity(self.config.num_heads);
        let mut weights = Vec::with_capacity(self.config.num_heads);
        for h in 0..self.config.num_heads {
            let (lo, hi) = (h * dk, (h + 1) * dk);
            let (qh, kh, vh) = if self.config.num_heads == 1 {
                (q, k, v)
            } else {
                (g.slice_cols(q, lo, hi), g.slice_cols(k, lo, hi), g.slice_cols(v, lo, hi))
            };
            let (out, w) = scaled_dot_attention_weights(g, qh, kh, vh, mask)?;
            heads.push(out);
            weights.push(w);
        }
        let cat = if heads.len() == 1 { heads[0] } else { g.concat_cols(&heads) };
        Ok((g.matmul(cat, wo), weights))
    }
}

/// Position-wise `max(0, x W1 + b1) W2 + b2` with inner width 4d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedForward {
    pub inner: Linear,
    pub outer: Linear,
}

impl FeedForward {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, dim: usize, rng: &mut R) -> Self {
        Self {
            inner: Linear::new(store, &format!("{name}.inner"), dim, 4 * dim, true, rng),
            outer: Linear::new(store, &format!("{name}.outer"), 4 * dim, dim, true, rng),
        }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let h = self.inner.forward(g, x);
        let h = g.relu(h);
        self.outer.forward(g, h)
    }
}

/// Self-attention and feed-forward sublayers, each followed by
/// residual add then layer normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderLayer {
    pub attention: MultiHeadAttention,
    pub norm_attention: LayerNorm,
    pub feed_forward: FeedForward,
    pub norm_feed_forward: LayerNorm,
}

impl EncoderLayer {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, config: AttentionConfig, rng: &mut R) -> Self {
        let d = config.model_dim;
        Self {
            attention: MultiHeadAttention::new(store, &format!("{name}.attention"), config, d, rng),
            norm_attention: LayerNorm::new(store, &format!("{name}.norm_attention"), d),
            feed_forward: FeedForward::new(store, &format!("{name}.feed_forward"), d, rng),
            norm_feed_forward: LayerNorm::new(store, &format!("{name}.norm_feed_forward"), d),
        }
    }

    /// `pad_mask` marks real (attendable) positions.
    pub fn forward(&self, g: &mut Graph, x: Var, pad_mask: Option<&[bool]>) -> Result<Var> {
        let mask = pad_mask.map_or(AttnMask::None, AttnMask::Keys);
        let a = self.attention.forward(g, x, x, mask)?;
        let h = g.add(x, a);
        let h = self.norm_attention.forward(g, h);
        let f = self.feed_forward.forward(g, h);
        let out = g.add(h, f);
        Ok(self.norm_feed_forward.forward(g, out))
    }
}

/// Causal self-attention, cross-attention over a memory, feed-forward;
/// post-norm residual ordering as in [`EncoderLayer`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderLayer {
    pub self_attention: MultiHeadAttention,
    pub norm_self: LayerNorm,
    pub cross_attention: MultiHeadAttention,
    pub norm_cross: LayerNorm,
    pub feed_forward: FeedForward,
    pub norm_feed_forward: LayerNorm,
}

impl DecoderLayer {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, config: AttentionConfig, memory_dim: usize, rng: &mut R) -> Self {
        let d = config.model_dim;
        Self {
            self_attention: MultiHeadAttention::new(store, &format!("{name}.self_attention"), config, d, rng),
            norm_self: LayerNorm::new(store, &format!("{name}.norm_self"), d),
            cross_attention: MultiHeadAttention::new(store, &format!("{name}.cross_attention"), config, memory_dim, rng),
            norm_cross: LayerNorm::new(store, &format!("{name}.norm_cross"), d),
            feed_forward: FeedForward::new(store, &format!("{name}.feed_forward"), d, rng),
            norm_feed_forward: LayerNorm::new(store, &format!("{name}.norm_feed_forward"), d),
        }
    }

    pub fn forward(&self, g: &mut Graph, x: Var, memory: Var) -> Result<Var> {
        let a = self.self_attention.forward(g, x, x, AttnMask::Causal)?;
        let h = g.add(x, a);
        let h = self.norm_self.forward(g, h);
        let c = self.cross_attention.forward(g, h, memory, AttnMask::None)?;
        let h2 = g.add(h, c);
        let h2 = self.norm_cross.forward(g, h2);
        let f = self.feed_forward.forward(g, h2);
        let out = g.add(h2, f);
        Ok(self.norm_feed_forward.forward(g, out))
    }
}

/// Sinusoidal table `[n × d]`: even columns `sin(pos / 10000^(2i/d))`,
/// odd columns the matching cosine.
pub fn positional_encoding(n: usize, d: usize) -> Tensor {
    let mut data = vec![0.0; n * d];
    for pos in 0..n {
        for j in 0..d {
            let pair = (j / 2) * 2;
            let angle = pos as f64 / 10000f64.powf(pair as f64 / d as f64);
            data[pos * d + j] = if j % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    Tensor::matrix(n, d, data)
}

/// Rows of the positional table at arbitrary positions.
pub fn positional_rows(positions: &[usize], d: usize) -> Tensor {
    let max = positions.iter().copied().max().map_or(0, |m| m + 1);
    let table = positional_encoding(max, d);
    let mut data = Vec::with_capacity(positions.len() * d);
    for &p in positions {
        data.extend_from_slice(table.row(p));
    }
    Tensor::matrix(positions.len(), d, data)
}

/// Mean over unmasked rows (all rows without a mask); zero vector when none.
pub fn pool(g: &mut Graph, x: Var, mask: Option<&[bool]>) -> Var {
    let rows: Vec<usize> = match mask {
        Some(m) => {
            assert_eq!(m.len(), g.value(x).rows(), "pool mask length");
            m.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect()
        }
        None => (0..g.value(x).rows()).collect(),
    };
    g.mean_rows(x, &rows)
}

/// Inverted dropout: zeroes entries with probability `rate`, rescales the rest.
pub fn dropout<R: Rng>(g: &mut Graph, x: Var, rate: f64, rng: &mut R) -> Var {
    if rate <= 0.0 {
        return x;
    }
    let shape = g.value(x).shape().to_vec();
    let keep = 1.0 - rate;
    let n = shape.iter().product();
    let mask = (0..n)
        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    g.mul_const(x, Tensor::new(shape, mask))
}
