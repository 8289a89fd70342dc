//! Differentiable tensor substrate: tensors, a reverse-mode tape, attention
//! and transformer layers, Adam, and finite-difference gradient checks.

pub mod gradcheck;
mod graph;
mod layers;
mod optim;
mod params;
mod tensor;

pub use graph::{sigmoid, Gradients, Graph, Var, LN_EPS};
pub use layers::{
    dropout, pool, positional_encoding, positional_rows, scaled_dot_attention,
    scaled_dot_attention_weights, AttentionConfig, AttnMask, DecoderLayer, EncoderLayer,
    FeedForward, LayerNorm, Linear, MultiHeadAttention,
};
pub use optim::{adam_step, OptimizerState};
pub use params::{GradBuffer, ParamId, ParamStore};
pub use tensor::Tensor;

/// Layer normalization of a plain vector (no graph).
pub fn layer_norm(x: &[f64], gamma: &[f64], beta: &[f64]) -> Vec<f64> {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let xv = g.input(Tensor::row_vector(x.to_vec()));
    let gv = g.input(Tensor::row_vector(gamma.to_vec()));
    let bv = g.input(Tensor::row_vector(beta.to_vec()));
    let y = g.layer_norm(xv, gv, bv);
    g.value(y).data().to_vec()
}
