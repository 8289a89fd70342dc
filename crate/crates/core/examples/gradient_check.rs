//! Finite-difference check of a small attention block, parameters and inputs.
//!
//! cargo run --release --example gradient_check

use changerep::nn::gradcheck::check_gradients;
use changerep::nn::{AttentionConfig, AttnMask, EncoderLayer, MultiHeadAttention, ParamStore, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let config = AttentionConfig::new(8, 2)?;
    let mut store = ParamStore::new();
    let layer = EncoderLayer::new(&mut store, "layer", config, &mut rng);
    let attn = MultiHeadAttention::new(&mut store, "query", config, 8, &mut rng);
    let x = Tensor::matrix(5, 8, (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let q = Tensor::matrix(1, 8, (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let keep = [true, true, false, true, true];

    let report = check_gradients(&store, &[x, q], 1e-5, |g, v| {
        let h = layer.forward(g, v[0], Some(&keep)).unwrap();
        let out = attn.forward(g, v[1], h, AttnMask::Keys(&keep)).unwrap();
        let sq = g.mul(out, out);
        g.sum(sq)
    });
    for e in &report.entries {
        println!("{:<28} {:.2e}", e.name, e.rel_error);
    }
    println!("max relative error {:.2e}", report.max_rel_error());
    Ok(())
}
