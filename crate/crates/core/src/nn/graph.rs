//! Tape-based reverse-mode differentiation over 2-D tensors.
//!
//! A [`Graph`] records every operation applied during one forward pass;
//! [`Graph::backward`] replays the tape in reverse. Parameters are read in
//! place from a borrowed [`ParamStore`] and their gradients are collected
//! into a [`GradBuffer`].

use std::collections::HashMap;

use super::params::{GradBuffer, ParamId, ParamStore};
use super::tensor::{dot, mm_acc, mm_nt_acc, mm_tn_acc, Tensor};

pub const LN_EPS: f64 = 1e-10;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Value {
    Owned(Tensor),
    Param(usize),
}

enum Op {
    Input,
    Param,
    MatMul(Var, Var),
    MatMulNT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Tensor),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Tensor,
        rstd: Vec<f64>,
    },
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    GatherRows(Var, Vec<usize>),
    MeanRows(Var, Vec<usize>),
    MaxRows(Var, Vec<usize>),
    RepeatRows(Var),
    Sum(Var),
    BceLogits(Var, f64),
    CrossEntropy(Var, Vec<usize>, Tensor),
}

struct Node {
    value: Value,
    op: Op,
}

pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    params: HashMap<usize, Var>,
}

/// Per-node gradients from one backward pass.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    param_of: Vec<Option<usize>>,
}

impl Gradients {
    /// Gradient of the loss with respect to a node, if it was reached.
    pub fn wrt(&self, var: Var) -> Option<&Tensor> {
        self.grads[var.0].as_ref()
    }

    /// Adds `scale ×` every parameter gradient into `buffer`.
    pub fn accumulate(&self, buffer: &mut GradBuffer, scale: f64) {
        for (node, param) in self.param_of.iter().enumerate() {
            if let (Some(p), Some(g)) = (param, &self.grads[node]) {
                buffer.add_scaled(ParamId(*p), g, scale);
            }
        }
    }
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            params: HashMap::new(),
        }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match &self.nodes[v.0].value {
            Value::Owned(t) => t,
            Value::Param(i) => self.store.get(ParamId(*i)),
        }
    }

    fn shape2(&self, v: Var) -> (usize, usize) {
        let t = self.value(v);
        (t.rows(), t.cols())
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        debug_assert!(value.shape().len() == 2, "graph tensors are matrices");
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// A constant (or differentiable leaf) input. 1-D tensors become rows.
    pub fn input(&mut self, t: Tensor) -> Var {
        let t = if t.shape().len() == 2 {
            t
        } else {
            let n = t.len();
            t.reshape(vec![1, n])
        };
        self.push(t, Op::Input)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id.0) {
            return v;
        }
        self.nodes.push(Node {
            value: Value::Param(id.0),
            op: Op::Param,
        });
        let v = Var(self.nodes.len() - 1);
        self.params.insert(id.0, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape2(a);
        let (k2, n) = self.shape2(b);
        assert_eq!(k, k2, "matmul inner dims");
        let mut out = vec![0.0; m * n];
        mm_acc(self.value(a).data(), self.value(b).data(), &mut out, m, k, n);
        self.push(Tensor::matrix(m, n, out), Op::MatMul(a, b))
    }

    /// `a · bᵀ`
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape2(a);
        let (n, k2) = self.shape2(b);
        assert_eq!(k, k2, "matmul_nt inner dims");
        let mut out = vec![0.0; m * n];
        mm_nt_acc(self.value(a).data(), self.value(b).data(), &mut out, m, k, n);
        self.push(Tensor::matrix(m, n, out), Op::MatMulNT(a, b))
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "elementwise shape mismatch");
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let t = self.zip_with(a, b, |x, y| x + y);
        self.push(t, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let t = self.zip_with(a, b, |x, y| x - y);
        self.push(t, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let t = self.zip_with(a, b, |x, y| x * y);
        self.push(t, Op::Mul(a, b))
    }

    /// Elementwise product with a constant tensor (e.g. a dropout mask).
    pub fn mul_const(&mut self, a: Var, c: Tensor) -> Var {
        let ta = self.value(a);
        assert_eq!(ta.len(), c.len());
        let data = ta.data().iter().zip(c.data()).map(|(x, y)| x * y).collect();
        let t = Tensor::new(ta.shape().to_vec(), data);
        self.push(t, Op::MulConst(a, c))
    }

    /// `x[m×n] + b[1×n]` broadcast over rows.
    pub fn add_row(&mut self, x: Var, b: Var) -> Var {
        let (m, n) = self.shape2(x);
        assert_eq!(self.shape2(b), (1, n), "add_row bias shape");
        let mut t = self.value(x).clone();
        let bias = self.value(b).data().to_vec();
        for i in 0..m {
            for (o, bv) in t.row_mut(i).iter_mut().zip(&bias) {
                *o += bv;
            }
        }
        self.push(t, Op::AddRow(x, b))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let t = self.value(x).map(|v| v * s);
        self.push(t, Op::Scale(x, s))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x).map(|v| v.max(0.0));
        self.push(t, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let t = self.value(x).map(sigmoid);
        self.push(t, Op::Sigmoid(x))
    }

    /// Row-wise softmax. `mask` (row-major, same shape, `true` = keep)
    /// gives masked entries zero weight. A fully masked row yields zeros.
    pub fn softmax_rows(&mut self, x: Var, mask: Option<&[bool]>) -> Var {
        let (m, n) = self.shape2(x);
        if let Some(mask) = mask {
            assert_eq!(mask.len(), m * n, "softmax mask shape");
        }
        let src = self.value(x);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = src.row(i);
            let keep = |j: usize| mask.is_none_or(|mk| mk[i * n + j]);
            let max = (0..n).filter(|&j| keep(j)).map(|j| row[j]).fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                continue;
            }
            let mut sum = 0.0;
            for j in 0..n {
                if keep(j) {
                    let e = (row[j] - max).exp();
                    out[i * n + j] = e;
                    sum += e;
                }
            }
            for v in &mut out[i * n..(i + 1) * n] {
                *v /= sum;
            }
        }
        self.push(Tensor::matrix(m, n, out), Op::Softmax(x))
    }

    /// Row-wise layer normalization with affine `gamma`, `beta` of shape `[1×d]`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let (m, d) = self.shape2(x);
        assert_eq!(self.shape2(gamma), (1, d));
        assert_eq!(self.shape2(beta), (1, d));
        let src = self.value(x);
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = vec![0.0; m * d];
        let mut out = vec![0.0; m * d];
        let mut rstd = vec![0.0; m];
        for i in 0..m {
            let row = src.row(i);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let r = 1.0 / (var + LN_EPS).sqrt();
            rstd[i] = r;
            for j in 0..d {
                let h = (row[j] - mean) * r;
                xhat[i * d + j] = h;
                out[i * d + j] = h * g[j] + b[j];
            }
        }
        let op = Op::LayerNorm {
            x,
            gamma,
            beta,
            xhat: Tensor::matrix(m, d, xhat),
            rstd,
        };
        self.push(Tensor::matrix(m, d, out), op)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let n = self.shape2(parts[0]).1;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.cols(), n, "concat_rows width");
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        self.push(Tensor::matrix(rows, n, data), Op::ConcatRows(parts.to_vec()))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let m = self.shape2(parts[0]).0;
        let widths: Vec<usize> = parts
            .iter()
            .map(|&p| {
                assert_eq!(self.shape2(p).0, m, "concat_cols height");
                self.shape2(p).1
            })
            .collect();
        let n: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        self.push(Tensor::matrix(m, n, data), Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, end: usize) -> Var {
        let (m, n) = self.shape2(x);
        assert!(start <= end && end <= m);
        let data = self.value(x).data()[start * n..end * n].to_vec();
        self.push(Tensor::matrix(end - start, n, data), Op::SliceRows(x, start))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Var {
        let (m, n) = self.shape2(x);
        assert!(start <= end && end <= n);
        let src = self.value(x);
        let mut data = Vec::with_capacity(m * (end - start));
        for i in 0..m {
            data.extend_from_slice(&src.row(i)[start..end]);
        }
        self.push(Tensor::matrix(m, end - start, data), Op::SliceCols(x, start))
    }

    /// Selects rows by index (repeats allowed).
    pub fn gather_rows(&mut self, x: Var, index: &[usize]) -> Var {
        let n = self.shape2(x).1;
        let src = self.value(x);
        let mut data = Vec::with_capacity(index.len() * n);
        for &i in index {
            data.extend_from_slice(src.row(i));
        }
        self.push(Tensor::matrix(index.len(), n, data), Op::GatherRows(x, index.to_vec()))
    }

    /// Mean over the selected rows as a `[1×n]` row; zeros when none are selected.
    pub fn mean_rows(&mut self, x: Var, rows: &[usize]) -> Var {
        let n = self.shape2(x).1;
        let src = self.value(x);
        let mut out = vec![0.0; n];
        for &i in rows {
            for (o, v) in out.iter_mut().zip(src.row(i)) {
                *o += v;
            }
        }
        if !rows.is_empty() {
            let c = rows.len() as f64;
            out.iter_mut().for_each(|o| *o /= c);
        }
        self.push(Tensor::row_vector(out), Op::MeanRows(x, rows.to_vec()))
    }

    pub fn mean_all_rows(&mut self, x: Var) -> Var {
        let rows: Vec<usize> = (0..self.shape2(x).0).collect();
        self.mean_rows(x, &rows)
    }

    /// Column-wise maximum over rows (first row wins ties). Requires ≥ 1 row.
    pub fn max_rows(&mut self, x: Var) -> Var {
        let (m, n) = self.shape2(x);
        assert!(m > 0, "max over zero rows");
        let src = self.value(x);
        let mut arg = vec![0usize; n];
        let mut out = src.row(0).to_vec();
        for i in 1..m {
            for (j, &v) in src.row(i).iter().enumerate() {
                if v > out[j] {
                    out[j] = v;
                    arg[j] = i;
                }
            }
        }
        self.push(Tensor::row_vector(out), Op::MaxRows(x, arg))
    }

    /// Broadcasts a `[1×n]` row to `[m×n]`.
    pub fn repeat_rows(&mut self, x: Var, m: usize) -> Var {
        let (r, n) = self.shape2(x);
        assert_eq!(r, 1);
        let row = self.value(x).data().to_vec();
        let mut data = Vec::with_capacity(m * n);
        for _ in 0..m {
            data.extend_from_slice(&row);
        }
        self.push(Tensor::matrix(m, n, data), Op::RepeatRows(x))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::matrix(1, 1, vec![s]), Op::Sum(x))
    }

    /// Binary cross-entropy of a `[1×1]` logit against a 0/1 target.
    pub fn bce_with_logits(&mut self, logit: Var, target: f64) -> Var {
        assert_eq!(self.shape2(logit), (1, 1));
        let z = self.value(logit).data()[0];
        let loss = z.max(0.0) - z * target + (-z.abs()).exp().ln_1p();
        self.push(Tensor::matrix(1, 1, vec![loss]), Op::BceLogits(logit, target))
    }

    /// Mean over rows of `-log softmax(logits_t)[target_t]`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Var {
        let (t, v) = self.shape2(logits);
        assert_eq!(t, targets.len());
        assert!(t > 0, "cross entropy over zero rows");
        let src = self.value(logits);
        let mut probs = vec![0.0; t * v];
        let mut loss = 0.0;
        for i in 0..t {
            let row = src.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|x| (x - max).exp()).sum();
            let log_z = max + sum.ln();
            for j in 0..v {
                probs[i * v + j] = (row[j] - log_z).exp();
            }
            loss += log_z - row[targets[i]];
        }
        loss /= t as f64;
        let op = Op::CrossEntropy(logits, targets.to_vec(), Tensor::matrix(t, v, probs));
        self.push(Tensor::matrix(1, 1, vec![loss]), op)
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.value(loss).len(), 1, "backward needs a scalar");
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::matrix(1, 1, vec![1.0]));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Input | Op::Param) {
                continue;
            }
            let Some(gy) = grads[idx].take() else { continue };
            self.backprop(idx, &gy, &mut grads);
            grads[idx] = Some(gy);
        }
        let param_of = self
            .nodes
            .iter()
            .map(|n| match n.value {
                Value::Param(p) => Some(p),
                Value::Owned(_) => None,
            })
            .collect();
        Gradients { grads, param_of }
    }

    fn backprop(&self, idx: usize, gy: &Tensor, grads: &mut [Option<Tensor>]) {
        let acc = |grads: &mut [Option<Tensor>], v: Var, g: Tensor| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot => *slot = Some(g),
        };
        let out = self.value(Var(idx));
        match &self.nodes[idx].op {
            Op::Input | Op::Param => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.shape2(*a);
                let n = self.shape2(*b).1;
                let mut ga = vec![0.0; m * k];
                mm_nt_acc(gy.data(), self.value(*b).data(), &mut ga, m, n, k);
                let mut gb = vec![0.0; k * n];
                mm_tn_acc(self.value(*a).data(), gy.data(), &mut gb, m, k, n);
                acc(grads, *a, Tensor::matrix(m, k, ga));
                acc(grads, *b, Tensor::matrix(k, n, gb));
            }
            Op::MatMulNT(a, b) => {
                // y = a bᵀ: ga = gy b, gb = gyᵀ a
                let (m, k) = self.shape2(*a);
                let n = self.shape2(*b).0;
                let mut ga = vec![0.0; m * k];
                mm_acc(gy.data(), self.value(*b).data(), &mut ga, m, n, k);
                let mut gb = vec![0.0; n * k];
                mm_tn_acc(gy.data(), self.value(*a).data(), &mut gb, m, n, k);
                acc(grads, *a, Tensor::matrix(m, k, ga));
                acc(grads, *b, Tensor::matrix(n, k, gb));
            }
            Op::Add(a, b) => {
                acc(grads, *a, gy.clone());
                acc(grads, *b, gy.clone());
            }
            Op::Sub(a, b) => {
                acc(grads, *a, gy.clone());
                acc(grads, *b, gy.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let ga = zip(gy, self.value(*b), |g, y| g * y);
                let gb = zip(gy, self.value(*a), |g, x| g * x);
                acc(grads, *a, ga);
                acc(grads, *b, gb);
            }
            Op::MulConst(a, c) => acc(grads, *a, zip(gy, c, |g, y| g * y)),
            Op::AddRow(x, b) => {
                let n = gy.cols();
                let mut gb = vec![0.0; n];
                for i in 0..gy.rows() {
                    for (o, g) in gb.iter_mut().zip(gy.row(i)) {
                        *o += g;
                    }
                }
                acc(grads, *x, gy.clone());
                acc(grads, *b, Tensor::row_vector(gb));
            }
            Op::Scale(x, s) => acc(grads, *x, gy.map(|g| g * s)),
            Op::Relu(x) => acc(grads, *x, zip(gy, self.value(*x), |g, v| if v > 0.0 { g } else { 0.0 })),
            Op::Sigmoid(x) => acc(grads, *x, zip(gy, out, |g, y| g * y * (1.0 - y))),
            Op::Softmax(x) => {
                let (m, n) = (out.rows(), out.cols());
                let mut gx = vec![0.0; m * n];
                for i in 0..m {
                    let (y, g) = (out.row(i), gy.row(i));
                    let s = dot(y, g);
                    for j in 0..n {
                        gx[i * n + j] = y[j] * (g[j] - s);
                    }
                }
                acc(grads, *x, Tensor::matrix(m, n, gx));
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            } => {
                let (m, d) = (xhat.rows(), xhat.cols());
                let g = self.value(*gamma).data();
                let mut gg = vec![0.0; d];
                let mut gb = vec![0.0; d];
                let mut gx = vec![0.0; m * d];
                for i in 0..m {
                    let (h, dy) = (xhat.row(i), gy.row(i));
                    let mut sum_dh = 0.0;
                    let mut sum_dh_h = 0.0;
                    for j in 0..d {
                        gg[j] += dy[j] * h[j];
                        gb[j] += dy[j];
                        let dh = dy[j] * g[j];
                        sum_dh += dh;
                        sum_dh_h += dh * h[j];
                    }
                    let scale = rstd[i] / d as f64;
                    for j in 0..d {
                        let dh = dy[j] * g[j];
                        gx[i * d + j] = scale * (d as f64 * dh - sum_dh - h[j] * sum_dh_h);
                    }
                }
                acc(grads, *x, Tensor::matrix(m, d, gx));
                acc(grads, *gamma, Tensor::row_vector(gg));
                acc(grads, *beta, Tensor::row_vector(gb));
            }
            Op::ConcatRows(parts) => {
                let n = gy.cols();
                let mut start = 0;
                for &p in parts {
                    let r = self.shape2(p).0;
                    let data = gy.data()[start * n..(start + r) * n].to_vec();
                    acc(grads, p, Tensor::matrix(r, n, data));
                    start += r;
                }
            }
            Op::ConcatCols(parts) => {
                let m = gy.rows();
                let mut start = 0;
                for &p in parts {
                    let w = self.shape2(p).1;
                    let mut data = Vec::with_capacity(m * w);
                    for i in 0..m {
                        data.extend_from_slice(&gy.row(i)[start..start + w]);
                    }
                    acc(grads, p, Tensor::matrix(m, w, data));
                    start += w;
                }
            }
            Op::SliceRows(x, start) => {
                let (m, n) = self.shape2(*x);
                let mut g = vec![0.0; m * n];
                g[start * n..start * n + gy.len()].copy_from_slice(gy.data());
                acc(grads, *x, Tensor::matrix(m, n, g));
            }
            Op::SliceCols(x, start) => {
                let (m, n) = self.shape2(*x);
                let w = gy.cols();
                let mut g = vec![0.0; m * n];
                for i in 0..m {
                    g[i * n + start..i * n + start + w].copy_from_slice(gy.row(i));
                }
                acc(grads, *x, Tensor::matrix(m, n, g));
            }
            Op::GatherRows(x, index) => {
                let (m, n) = self.shape2(*x);
                let mut g = vec![0.0; m * n];
                for (k, &i) in index.iter().enumerate() {
                    for (o, v) in g[i * n..(i + 1) * n].iter_mut().zip(gy.row(k)) {
                        *o += v;
                    }
                }
                acc(grads, *x, Tensor::matrix(m, n, g));
            }
            Op::MeanRows(x, rows) => {
                let (m, n) = self.shape2(*x);
                let mut g = vec![0.0; m * n];
                if !rows.is_empty() {
                    let c = rows.len() as f64;
                    for &i in rows {
                        for (o, v) in g[i * n..(i + 1) * n].iter_mut().zip(gy.data()) {
                            *o += v / c;
                        }
                    }
                }
                acc(grads, *x, Tensor::matrix(m, n, g));
            }
            Op::MaxRows(x, arg) => {
                let (m, n) = self.shape2(*x);
                let mut g = vec![0.0; m * n];
                for (j, &i) in arg.iter().enumerate() {
                    g[i * n + j] += gy.data()[j];
                }
                acc(grads, *x, Tensor::matrix(m, n, g));
            }
            Op::RepeatRows(x) => {
                let n = gy.cols();
                let mut g = vec![0.0; n];
                for i in 0..gy.rows() {
                    for (o, v) in g.iter_mut().zip(gy.row(i)) {
                        *o += v;
                    }
                }
                acc(grads, *x, Tensor::row_vector(g));
            }
            Op::Sum(x) => {
                let s = gy.data()[0];
                let t = self.value(*x);
                acc(grads, *x, Tensor::full(t.shape(), s));
            }
            Op::BceLogits(z, target) => {
                let zv = self.value(*z).data()[0];
                let g = (sigmoid(zv) - target) * gy.data()[0];
                acc(grads, *z, Tensor::matrix(1, 1, vec![g]));
            }
            Op::CrossEntropy(logits, targets, probs) => {
                let s = gy.data()[0] / targets.len() as f64;
                let mut g = probs.clone();
                let v = g.cols();
                for (i, &t) in targets.iter().enumerate() {
                    g.data_mut()[i * v + t] -= 1.0;
                }
                g.scale_assign(s);
                acc(grads, *logits, g);
            }
        }
    }
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor::new(
        a.shape().to_vec(),
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
    )
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
