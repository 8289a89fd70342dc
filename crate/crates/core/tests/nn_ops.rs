use changerep::nn::gradcheck::check_gradients;
use changerep::nn::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// Weighted sum against a fixed random tensor so every output entry matters.
fn project(g: &mut Graph, y: Var, seed: u64) -> Var {
    let t = g.value(y).clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random(&mut rng, t.rows(), t.cols());
    let w = g.input(w);
    let p = g.mul(y, w);
    g.sum(p)
}

fn assert_grads(name: &str, store: &ParamStore, inputs: &[Tensor], f: impl Fn(&mut Graph, &[Var]) -> Var) {
    let report = check_gradients(store, inputs, H, f);
    let worst = report.worst().unwrap();
    assert!(report.any_signal(), "{name}: all gradients are zero");
    assert!(
        report.max_rel_error() < TOL,
        "{name}: {} rel error {:.3e}",
        worst.name,
        worst.rel_error
    );
}

#[test]
fn every_primitive_passes_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let store = ParamStore::new();
    let a = random(&mut rng, 3, 4);
    let b = random(&mut rng, 4, 5);
    let c = random(&mut rng, 3, 4);
    let bt = random(&mut rng, 5, 4);
    let row = random(&mut rng, 1, 4);

    assert_grads("matmul", &store, &[a.clone(), b.clone()], |g, v| {
        let y = g.matmul(v[0], v[1]);
        project(g, y, 1)
    });
    assert_grads("matmul_nt", &store, &[a.clone(), bt.clone()], |g, v| {
        let y = g.matmul_nt(v[0], v[1]);
        project(g, y, 2)
    });
    assert_grads("add/sub/mul", &store, &[a.clone(), c.clone()], |g, v| {
        let s = g.add(v[0], v[1]);
        let d = g.sub(s, v[1]);
        let m = g.mul(d, v[1]);
        project(g, m, 3)
    });
    assert_grads("add_row/scale/mul_const", &store, &[a.clone(), row.clone()], |g, v| {
        let y = g.add_row(v[0], v[1]);
        let y = g.scale(y, -1.7);
        let y = g.mul_const(y, Tensor::matrix(3, 4, (0..12).map(|i| (i % 3) as f64).collect()));
        project(g, y, 4)
    });
    assert_grads("relu/sigmoid", &store, &[a.clone()], |g, v| {
        let r = g.relu(v[0]);
        let s = g.sigmoid(v[0]);
        let y = g.add(r, s);
        project(g, y, 5)
    });
    let mask: Vec<bool> = (0..12).map(|i| i % 4 != 1).collect();
    assert_grads("softmax (masked)", &store, &[a.clone()], |g, v| {
        let y = g.softmax_rows(v[0], Some(&mask));
        project(g, y, 6)
    });
    assert_grads("layer_norm", &store, &[a.clone(), row.clone(), random(&mut rng, 1, 4)], |g, v| {
        let y = g.layer_norm(v[0], v[1], v[2]);
        project(g, y, 7)
    });
    assert_grads("concat/slice", &store, &[a.clone(), c.clone()], |g, v| {
        let r = g.concat_rows(&[v[0], v[1]]);
        let cc = g.concat_cols(&[r, r]);
        let s = g.slice_cols(cc, 2, 7);
        let s = g.slice_rows(s, 1, 5);
        project(g, s, 8)
    });
    assert_grads("gather/mean/max/repeat", &store, &[a.clone()], |g, v| {
        let ga = g.gather_rows(v[0], &[2, 0, 2]);
        let m = g.mean_rows(ga, &[0, 2]);
        let mx = g.max_rows(v[0]);
        let s = g.add(m, mx);
        let r = g.repeat_rows(s, 3);
        project(g, r, 9)
    });
    assert_grads("bce_with_logits", &store, &[Tensor::matrix(1, 1, vec![0.3])], |g, v| g.bce_with_logits(v[0], 1.0));
    assert_grads("cross_entropy", &store, &[random(&mut rng, 3, 6)], |g, v| g.cross_entropy(v[0], &[1, 5, 0]));
}

#[test]
fn single_key_attention_returns_its_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let q = g.input(random(&mut rng, 2, 4));
    let k = g.input(random(&mut rng, 1, 4));
    let v = g.input(random(&mut rng, 1, 3));
    let out = scaled_dot_attention(&mut g, q, k, v, AttnMask::None).unwrap();
    let vv = g.value(v).row(0).to_vec();
    for r in 0..2 {
        assert_eq!(g.value(out).row(r), &vv[..]);
    }
}

#[test]
fn identical_keys_average_values() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let q = g.input(Tensor::row_vector(vec![0.3, -1.2]));
    let k = g.input(Tensor::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]], 2));
    let v = g.input(Tensor::from_rows(&[vec![1.0, 5.0], vec![3.0, -1.0]], 2));
    let (out, w) = scaled_dot_attention_weights(&mut g, q, k, v, AttnMask::None).unwrap();
    assert_eq!(g.value(w).data(), &[0.5, 0.5]);
    assert_eq!(g.value(out).data(), &[2.0, 2.0]);
}

#[test]
fn attention_matches_softmax_formula_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (qt, kt, vt) = (random(&mut rng, 3, 4), random(&mut rng, 5, 4), random(&mut rng, 5, 2));
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let (q, k, v) = (g.input(qt.clone()), g.input(kt.clone()), g.input(vt.clone()));
    let out = scaled_dot_attention(&mut g, q, k, v, AttnMask::None).unwrap();

    for i in 0..3 {
        let scores: Vec<f64> = (0..5)
            .map(|j| (0..4).map(|c| qt.get(i, c) * kt.get(j, c)).sum::<f64>() / 2.0)
            .collect();
        let z: f64 = scores.iter().map(|s| s.exp()).sum();
        for c in 0..2 {
            let expected: f64 = (0..5).map(|j| scores[j].exp() / z * vt.get(j, c)).sum();
            assert!((g.value(out).get(i, c) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn masked_attention_rows_are_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..50 {
        let n = 1 + trial % 7;
        let mut keys: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
        keys[trial % n] = true;
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let q = g.input(random(&mut rng, 3, 4));
        let k = g.input(random(&mut rng, n, 4));
        let v = g.input(random(&mut rng, n, 4));
        let (_, w) = scaled_dot_attention_weights(&mut g, q, k, v, AttnMask::Keys(&keys)).unwrap();
        for r in 0..3 {
            let row = g.value(w).row(r);
            assert!(row.iter().all(|&x| x >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            for (j, &keep) in keys.iter().enumerate() {
                if !keep {
                    assert_eq!(row[j], 0.0);
                }
            }
        }
    }
}

#[test]
fn fully_masked_attention_is_an_error() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let q = g.input(Tensor::row_vector(vec![1.0, 0.0]));
    let k = g.input(Tensor::zeros(&[2, 2]));
    let err = scaled_dot_attention(&mut g, q, k, k, AttnMask::Keys(&[false, false])).unwrap_err();
    assert!(matches!(err, changerep::Error::AllKeysMasked { .. }));
}

#[test]
fn single_head_identity_projections_collapse_to_attention() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut store = ParamStore::new();
    let cfg = AttentionConfig::new(4, 1).unwrap();
    let mha = MultiHeadAttention::new(&mut store, "mha", cfg, 4, &mut rng);
    for id in [mha.w_query, mha.w_key, mha.w_value, mha.w_out] {
        *store.get_mut(id) = Tensor::identity(4);
    }
    let (qt, kt) = (random(&mut rng, 1, 4), random(&mut rng, 6, 4));
    let mut g = Graph::new(&store);
    let (q, k) = (g.input(qt), g.input(kt));
    let a = mha.forward(&mut g, q, k, AttnMask::None).unwrap();
    let b = scaled_dot_attention(&mut g, q, k, k, AttnMask::None).unwrap();
    assert!(g.value(a).max_abs_diff(g.value(b)) < 1e-15);
    assert_eq!(g.value(a).shape(), &[1, 4]);
}

#[test]
fn multi_head_attention_gradients_d8_two_heads() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut store = ParamStore::new();
    let cfg = AttentionConfig::new(8, 2).unwrap();
    let mha = MultiHeadAttention::new(&mut store, "mha", cfg, 8, &mut rng);
    let inputs = [random(&mut rng, 1, 8), random(&mut rng, 5, 8)];
    assert_grads("multi_head_attention", &store, &inputs, |g, v| {
        let y = mha.forward(g, v[0], v[1], AttnMask::None).unwrap();
        project(g, y, 12)
    });
}

#[test]
fn encoder_layer_gradients_and_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut store = ParamStore::new();
    let layer = EncoderLayer::new(&mut store, "enc", AttentionConfig::new(8, 2).unwrap(), &mut rng);
    let x = random(&mut rng, 4, 8);
    let mask = [true, true, false, true];
    assert_grads("encoder_layer", &store, &[x.clone()], |g, v| {
        let y = layer.forward(g, v[0], Some(&mask)).unwrap();
        project(g, y, 13)
    });
    for n in [0, 1, 7] {
        let mut g = Graph::new(&store);
        let xv = g.input(random(&mut rng, n, 8));
        let y = layer.forward(&mut g, xv, None).unwrap();
        assert_eq!(g.value(y).shape(), &[n, 8]);
    }
}

#[test]
fn decoder_layer_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut store = ParamStore::new();
    let layer = DecoderLayer::new(&mut store, "dec", AttentionConfig::new(8, 2).unwrap(), 12, &mut rng);
    let inputs = [random(&mut rng, 3, 8), random(&mut rng, 4, 12)];
    assert_grads("decoder_layer", &store, &inputs, |g, v| {
        let y = layer.forward(g, v[0], v[1]).unwrap();
        project(g, y, 14)
    });
}

#[test]
fn encoder_layer_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut store = ParamStore::new();
    let layer = EncoderLayer::new(&mut store, "enc", AttentionConfig::new(8, 2).unwrap(), &mut rng);
    let x = random(&mut rng, 5, 8);
    let perm = [3, 0, 4, 1, 2];
    let mut g = Graph::new(&store);
    let xv = g.input(x);
    let px = g.gather_rows(xv, &perm);
    let y = layer.forward(&mut g, xv, None).unwrap();
    let py = layer.forward(&mut g, px, None).unwrap();
    for (k, &p) in perm.iter().enumerate() {
        for c in 0..8 {
            assert!((g.value(py).get(k, c) - g.value(y).get(p, c)).abs() < 1e-12);
        }
    }
}

#[test]
fn layer_norm_examples() {
    let ones = vec![1.0; 3];
    let zeros = vec![0.0; 3];
    assert!(layer_norm(&[2.5, 2.5, 2.5], &ones, &zeros).iter().all(|v| v.abs() < 1e-9));

    // hand evaluation: x = (1, 2, 6), mean 3, var (4 + 1 + 9)/3 = 14/3
    let y = layer_norm(&[1.0, 2.0, 6.0], &ones, &zeros);
    let s = (14.0f64 / 3.0 + LN_EPS).sqrt();
    for (got, want) in y.iter().zip([-2.0 / s, -1.0 / s, 3.0 / s]) {
        assert!((got - want).abs() < 1e-12);
    }
    let y = layer_norm(&[1.0, 2.0, 6.0], &[2.0, 1.0, 0.5], &[0.1, 0.2, 0.3]);
    assert!((y[0] - (0.1 - 4.0 / s)).abs() < 1e-12);
    assert!((y[2] - (0.3 + 1.5 / s)).abs() < 1e-12);
}

#[test]
fn layer_norm_standardizes_and_ignores_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..100 {
        let d = rng.gen_range(2..40);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let (ones, zeros) = (vec![1.0; d], vec![0.0; d]);
        let y = layer_norm(&x, &ones, &zeros);
        let mean = y.iter().sum::<f64>() / d as f64;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        assert!(mean.abs() < 1e-6 && (var - 1.0).abs() < 1e-6, "mean {mean} var {var}");
        let shift = rng.gen_range(-100.0..100.0);
        let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let ys = layer_norm(&xs, &ones, &zeros);
        assert!(y.iter().zip(&ys).all(|(a, b)| (a - b).abs() < 1e-6));
    }
}

#[test]
fn pool_rules() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let same = g.input(Tensor::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]], 2));
    let p = pool(&mut g, same, None);
    assert_eq!(g.value(p).data(), &[1.0, 2.0]);

    let x = g.input(Tensor::from_rows(&[vec![1.0, 2.0], vec![5.0, -3.0], vec![0.5, 0.5]], 2));
    let one = pool(&mut g, x, Some(&[false, true, false]));
    assert_eq!(g.value(one).data(), &[5.0, -3.0]);
    let none = pool(&mut g, x, Some(&[false, false, false]));
    assert_eq!(g.value(none).data(), &[0.0, 0.0]);

    let permuted = g.gather_rows(x, &[2, 0, 1]);
    let a = pool(&mut g, x, Some(&[true, false, true]));
    let b = pool(&mut g, permuted, Some(&[true, true, false]));
    assert!(g.value(a).max_abs_diff(g.value(b)) < 1e-15);
}

#[test]
fn positional_encoding_values() {
    let pe = positional_encoding(5, 4);
    assert_eq!(pe.row(0), &[0.0, 1.0, 0.0, 1.0]);
    assert!(pe.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    // position 2, d = 4: angles 2 and 2 / 10000^(2/4) = 0.02
    let expected = [2f64.sin(), 2f64.cos(), 0.02f64.sin(), 0.02f64.cos()];
    for (got, want) in pe.row(2).iter().zip(expected) {
        assert!((got - want).abs() < 1e-15);
    }
}

#[test]
fn adam_is_bitwise_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut store = ParamStore::new();
        let id = store.add("w", random(&mut rng, 3, 3));
        let mut state = OptimizerState::new(&store, 1e-3, 0.9, 0.999, 1e-8);
        for _ in 0..5 {
            let mut grads = GradBuffer::zeros_like(&store);
            grads.add_scaled(id, &random(&mut rng, 3, 3), 1.0);
            adam_step(&mut store, &grads, &mut state).unwrap();
        }
        (store, state)
    };
    let (a, sa) = run();
    let (b, sb) = run();
    assert_eq!(a, b);
    assert_eq!(sa, sb);
}
