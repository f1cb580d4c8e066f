//! Reverse-mode differentiation over a recorded sequence of tensor operations.
//!
//! Every operation appends a node holding its output value. [`Tape::backward`]
//! walks the nodes in reverse, accumulating gradients into the parameters that
//! were read through [`Tape::param`].

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::{ParamId, Parameters};
use super::tensor::{dot, matmul, matmul_grad_lhs, matmul_grad_rhs, Tensor};
use super::ModelError;

static NEXT_TAPE: AtomicU64 = AtomicU64::new(1);

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var {
    index: usize,
    tape: u64,
}

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    Add(usize, usize),
    MatMul(usize, usize),
    AddBias(usize, usize),
    Gelu(usize),
    LayerNorm {
        x: usize,
        gamma: usize,
        beta: usize,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Attention {
        q: usize,
        k: usize,
        v: usize,
        geometry: AttentionGeometry,
        mask: Vec<u8>,
        probs: Vec<f64>,
    },
    Dropout {
        x: usize,
        scale: Vec<f64>,
    },
    Gather {
        table: usize,
        rows: Vec<usize>,
    },
    SelectRows {
        x: usize,
        rows: Vec<usize>,
    },
    Reshape(usize),
    Sum(usize),
    CrossEntropy {
        logits: usize,
        labels: Vec<usize>,
        weights: Vec<f64>,
        probs: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy)]
struct AttentionGeometry {
    batch: usize,
    seq: usize,
    heads: usize,
    head_dim: usize,
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Records a forward pass for later differentiation.
#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
    consumed: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            consumed: false,
        }
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var {
            index: self.nodes.len() - 1,
            tape: self.id,
        }
    }

    fn idx(&self, var: Var) -> Result<usize, ModelError> {
        if var.tape != self.id || var.index >= self.nodes.len() {
            return Err(ModelError::Untraced);
        }
        Ok(var.index)
    }

    fn val(&self, i: usize) -> &Tensor {
        &self.nodes[i].value
    }

    pub fn value(&self, var: Var) -> &Tensor {
        assert_eq!(var.tape, self.id, "variable belongs to another tape");
        &self.nodes[var.index].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Attention probabilities of every attention op, each `(batch, heads, seq, seq)`.
    pub fn attention_probabilities(&self) -> Vec<Tensor> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.op {
                Op::Attention { geometry: g, probs, .. } => {
                    Tensor::new(vec![g.batch, g.heads, g.seq, g.seq], probs.clone()).ok()
                }
                _ => None,
            })
            .collect()
    }

    /// An untracked input.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant)
    }

    /// Reads a parameter; gradients flow back into it.
    pub fn param(&mut self, params: &Parameters, id: ParamId) -> Var {
        self.push(params.get(id).clone(), Op::Param(id))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, ModelError> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let (va, vb) = (self.val(ia), self.val(ib));
        if va.shape() != vb.shape() {
            return Err(ModelError::Shape(format!("add {:?} + {:?}", va.shape(), vb.shape())));
        }
        let data = va.data().iter().zip(vb.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::new(va.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Add(ia, ib)))
    }

    /// `(…, k) · (k, n) → (…, n)`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, ModelError> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let (va, vb) = (self.val(ia), self.val(ib));
        if vb.shape().len() != 2 || va.cols() != vb.shape()[0] {
            return Err(ModelError::Shape(format!("matmul {:?} · {:?}", va.shape(), vb.shape())));
        }
        let (m, k, n) = (va.rows(), va.cols(), vb.cols());
        let mut shape = va.shape().to_vec();
        *shape.last_mut().expect("non-empty shape") = n;
        let value = Tensor::new(shape, matmul(va.data(), vb.data(), m, k, n))?;
        Ok(self.push(value, Op::MatMul(ia, ib)))
    }

    /// Adds a `(n)` bias to every row of `(…, n)`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var, ModelError> {
        let (ia, ib) = (self.idx(a)?, self.idx(bias)?);
        let (va, vb) = (self.val(ia), self.val(ib));
        if vb.numel() != va.cols() {
            return Err(ModelError::Shape(format!("bias {:?} for {:?}", vb.shape(), va.shape())));
        }
        let n = va.cols();
        let mut data = va.data().to_vec();
        for row in data.chunks_mut(n) {
            for (x, b) in row.iter_mut().zip(vb.data()) {
                *x += b;
            }
        }
        let value = Tensor::new(va.shape().to_vec(), data)?;
        Ok(self.push(value, Op::AddBias(ia, ib)))
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, a: Var) -> Result<Var, ModelError> {
        let ia = self.idx(a)?;
        let va = self.val(ia);
        let data = va
            .data()
            .iter()
            .map(|&x| 0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh()))
            .collect();
        let value = Tensor::new(va.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Gelu(ia)))
    }

    /// Normalizes each row over the last dimension, then scales and shifts.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var, ModelError> {
        let (ix, ig, ib) = (self.idx(x)?, self.idx(gamma)?, self.idx(beta)?);
        let (vx, vg, vb) = (self.val(ix), self.val(ig), self.val(ib));
        let n = vx.cols();
        if vg.numel() != n || vb.numel() != n {
            return Err(ModelError::Shape(format!(
                "layer norm over {n} with gamma {:?} beta {:?}",
                vg.shape(),
                vb.shape()
            )));
        }
        let mut xhat = Vec::with_capacity(vx.numel());
        let mut inv_std = Vec::with_capacity(vx.rows());
        let mut out = Vec::with_capacity(vx.numel());
        for row in vx.data().chunks(n) {
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std.push(inv);
            for (j, &v) in row.iter().enumerate() {
                let h = (v - mean) * inv;
                xhat.push(h);
                out.push(h * vg.data()[j] + vb.data()[j]);
            }
        }
        let value = Tensor::new(vx.shape().to_vec(), out)?;
        Ok(self.push(
            value,
            Op::LayerNorm {
                x: ix,
                gamma: ig,
                beta: ib,
                xhat,
                inv_std,
            },
        ))
    }

    /// Multi-head scaled dot-product self-attention.
    ///
    /// `q`, `k`, `v` are `(batch, seq, hidden)`; `mask` has `batch·seq`
    /// entries, and keys where it is 0 get zero probability.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, mask: &[u8], heads: usize) -> Result<Var, ModelError> {
        let (iq, ik, iv) = (self.idx(q)?, self.idx(k)?, self.idx(v)?);
        let (vq, vk, vv) = (self.val(iq), self.val(ik), self.val(iv));
        let shape = vq.shape().to_vec();
        if shape.len() != 3 || vk.shape() != shape.as_slice() || vv.shape() != shape.as_slice() {
            return Err(ModelError::Shape(format!(
                "attention q {:?} k {:?} v {:?}",
                vq.shape(),
                vk.shape(),
                vv.shape()
            )));
        }
        let (batch, seq, hidden) = (shape[0], shape[1], shape[2]);
        if heads == 0 || hidden % heads != 0 {
            return Err(ModelError::Config(format!(
                "hidden {hidden} not divisible by {heads} heads"
            )));
        }
        if mask.len() != batch * seq {
            return Err(ModelError::Shape(format!("mask of {} for {batch}×{seq}", mask.len())));
        }
        let g = AttentionGeometry {
            batch,
            seq,
            heads,
            head_dim: hidden / heads,
        };
        let scale = 1.0 / (g.head_dim as f64).sqrt();
        let mut probs = vec![0.0; batch * heads * seq * seq];
        let mut out = vec![0.0; batch * seq * hidden];
        let (qd, kd, vd) = (vq.data(), vk.data(), vv.data());
        let mut scores = vec![0.0; seq];
        for b in 0..batch {
            let keys = &mask[b * seq..(b + 1) * seq];
            for h in 0..heads {
                let off = h * g.head_dim;
                for i in 0..seq {
                    let qi = &qd[(b * seq + i) * hidden + off..][..g.head_dim];
                    let mut max = f64::NEG_INFINITY;
                    for j in 0..seq {
                        if keys[j] != 0 {
                            let kj = &kd[(b * seq + j) * hidden + off..][..g.head_dim];
                            scores[j] = dot(qi, kj) * scale;
                            max = max.max(scores[j]);
                        }
                    }
                    let p_row = &mut probs[((b * heads + h) * seq + i) * seq..][..seq];
                    let mut sum = 0.0;
                    for j in 0..seq {
                        if keys[j] != 0 {
                            p_row[j] = (scores[j] - max).exp();
                            sum += p_row[j];
                        }
                    }
                    let o = &mut out[(b * seq + i) * hidden + off..][..g.head_dim];
                    for j in 0..seq {
                        if keys[j] != 0 {
                            p_row[j] /= sum;
                            let vj = &vd[(b * seq + j) * hidden + off..][..g.head_dim];
                            for (o, &x) in o.iter_mut().zip(vj) {
                                *o += p_row[j] * x;
                            }
                        }
                    }
                }
            }
        }
        let value = Tensor::new(shape, out)?;
        Ok(self.push(
            value,
            Op::Attention {
                q: iq,
                k: ik,
                v: iv,
                geometry: g,
                mask: mask.to_vec(),
                probs,
            },
        ))
    }

    /// Inverted dropout; the identity when `rng` is `None` or `rate` is 0.
    pub fn dropout(&mut self, x: Var, rate: f64, rng: Option<&mut ChaCha8Rng>) -> Result<Var, ModelError> {
        let ix = self.idx(x)?;
        let Some(rng) = rng.filter(|_| rate > 0.0) else {
            return Ok(x);
        };
        let keep = 1.0 - rate;
        let vx = self.val(ix);
        let scale: Vec<f64> = (0..vx.numel())
            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let data = vx.data().iter().zip(&scale).map(|(v, s)| v * s).collect();
        let value = Tensor::new(vx.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Dropout { x: ix, scale }))
    }

    /// Row lookup into a `(rows, cols)` table; output shape is `shape` (last dim = cols).
    pub fn gather(&mut self, table: Var, rows: &[usize], shape: Vec<usize>) -> Result<Var, ModelError> {
        let it = self.idx(table)?;
        let vt = self.val(it);
        let cols = vt.cols();
        if let Some(&bad) = rows.iter().find(|&&r| r >= vt.rows()) {
            return Err(ModelError::IndexOutOfRange {
                index: bad,
                size: vt.rows(),
            });
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            data.extend_from_slice(vt.row(r));
        }
        let value = Tensor::new(shape, data)?;
        Ok(self.push(
            value,
            Op::Gather {
                table: it,
                rows: rows.to_vec(),
            },
        ))
    }

    /// Picks rows of `x` viewed as `(rows, cols)`; output is `(rows.len(), cols)`.
    pub fn select_rows(&mut self, x: Var, rows: &[usize]) -> Result<Var, ModelError> {
        let ix = self.idx(x)?;
        let vx = self.val(ix);
        if let Some(&bad) = rows.iter().find(|&&r| r >= vx.rows()) {
            return Err(ModelError::IndexOutOfRange {
                index: bad,
                size: vx.rows(),
            });
        }
        let cols = vx.cols();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            data.extend_from_slice(vx.row(r));
        }
        let value = Tensor::new(vec![rows.len(), cols], data)?;
        Ok(self.push(
            value,
            Op::SelectRows {
                x: ix,
                rows: rows.to_vec(),
            },
        ))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var, ModelError> {
        let ix = self.idx(x)?;
        let value = self.val(ix).clone().reshaped(shape)?;
        Ok(self.push(value, Op::Reshape(ix)))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, ModelError> {
        let ix = self.idx(x)?;
        let total = self.val(ix).data().iter().sum();
        Ok(self.push(Tensor::scalar(total), Op::Sum(ix)))
    }

    /// Mean over the batch of `w[label] · −log softmax(logits)[label]`.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        labels: &[usize],
        class_weights: Option<&[f64]>,
    ) -> Result<Var, ModelError> {
        let il = self.idx(logits)?;
        let vl = self.val(il);
        let classes = vl.cols();
        if vl.rows() != labels.len() || labels.is_empty() {
            return Err(ModelError::Shape(format!(
                "{} labels for logits {:?}",
                labels.len(),
                vl.shape()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(ModelError::LabelOutOfRange { label: bad, classes });
        }
        if let Some(w) = class_weights {
            if w.len() != classes {
                return Err(ModelError::Shape(format!(
                    "{} class weights for {classes} classes",
                    w.len()
                )));
            }
        }
        let weights: Vec<f64> = labels.iter().map(|&l| class_weights.map_or(1.0, |w| w[l])).collect();
        let mut probs = Vec::with_capacity(vl.numel());
        let mut total = 0.0;
        for ((row, &label), &w) in vl.data().chunks(classes).zip(labels).zip(&weights) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = row.iter().map(|&z| (z - max).exp()).sum();
            let log_norm = max + sum_exp.ln();
            total += w * (log_norm - row[label]);
            probs.extend(row.iter().map(|&z| (z - log_norm).exp()));
        }
        let loss = total / labels.len() as f64;
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits: il,
                labels: labels.to_vec(),
                weights,
                probs,
            },
        ))
    }

    /// Back-propagates from a scalar loss into `params`' gradient buffers.
    ///
    /// Gradients must have been cleared with [`Parameters::zero_grad`] (or never
    /// populated) and a tape can only be differentiated once.
    pub fn backward(&mut self, loss: Var, params: &mut Parameters) -> Result<(), ModelError> {
        let root = self.idx(loss)?;
        if matches!(self.nodes[root].op, Op::Constant) {
            return Err(ModelError::Untraced);
        }
        if self.nodes[root].value.numel() != 1 {
            return Err(ModelError::Shape(format!(
                "loss must be a scalar, got {:?}",
                self.nodes[root].value.shape()
            )));
        }
        if self.consumed {
            return Err(ModelError::AlreadyDifferentiated);
        }
        if params.has_grads() {
            return Err(ModelError::GradientsNotReset);
        }
        self.consumed = true;
        let mut param_grads = params.zero_grads();

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; root + 1];
        grads[root] = Some(vec![1.0]);
        for i in (0..=root).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads, &mut param_grads);
        }
        params.set_grads(param_grads);
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>], param_grads: &mut [Tensor]) {
        fn slot(grads: &mut [Option<Vec<f64>>], j: usize, len: usize) -> &mut [f64] {
            grads[j].get_or_insert_with(|| vec![0.0; len])
        }
        let node = &self.nodes[i];
        match &node.op {
            Op::Constant => {}
            Op::Param(id) => {
                for (acc, x) in param_grads[id.index()].data_mut().iter_mut().zip(g) {
                    *acc += x;
                }
            }
            Op::Add(a, b) => {
                for &j in [a, b] {
                    for (acc, x) in slot(grads, j, g.len()).iter_mut().zip(g) {
                        *acc += x;
                    }
                }
            }
            Op::MatMul(a, b) => {
                let (va, vb) = (self.val(*a), self.val(*b));
                let (m, k, n) = (va.rows(), va.cols(), vb.cols());
                matmul_grad_lhs(g, vb.data(), slot(grads, *a, m * k), m, k, n);
                matmul_grad_rhs(va.data(), g, slot(grads, *b, k * n), m, k, n);
            }
            Op::AddBias(a, b) => {
                for (acc, x) in slot(grads, *a, g.len()).iter_mut().zip(g) {
                    *acc += x;
                }
                let n = self.val(*b).numel();
                let gb = slot(grads, *b, n);
                for row in g.chunks(n) {
                    for (acc, x) in gb.iter_mut().zip(row) {
                        *acc += x;
                    }
                }
            }
            Op::Gelu(a) => {
                let va = self.val(*a);
                let ga = slot(grads, *a, g.len());
                for ((acc, &x), &gy) in ga.iter_mut().zip(va.data()).zip(g) {
                    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
                    let d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x);
                    *acc += gy * d;
                }
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let vg = self.val(*gamma).data().to_vec();
                let n = vg.len();
                {
                    let gg = slot(grads, *gamma, n);
                    for (row_g, row_h) in g.chunks(n).zip(xhat.chunks(n)) {
                        for j in 0..n {
                            gg[j] += row_g[j] * row_h[j];
                        }
                    }
                }
                {
                    let gb = slot(grads, *beta, n);
                    for row_g in g.chunks(n) {
                        for j in 0..n {
                            gb[j] += row_g[j];
                        }
                    }
                }
                let gx = slot(grads, *x, g.len());
                let mut dxhat = vec![0.0; n];
                for (r, (row_g, row_h)) in g.chunks(n).zip(xhat.chunks(n)).enumerate() {
                    for j in 0..n {
                        dxhat[j] = row_g[j] * vg[j];
                    }
                    let sum_d: f64 = dxhat.iter().sum();
                    let sum_dh: f64 = dxhat.iter().zip(row_h).map(|(d, h)| d * h).sum();
                    let scale = inv_std[r] / n as f64;
                    let out = &mut gx[r * n..(r + 1) * n];
                    for j in 0..n {
                        out[j] += scale * (n as f64 * dxhat[j] - sum_d - row_h[j] * sum_dh);
                    }
                }
            }
            Op::Attention {
                q,
                k,
                v,
                geometry,
                mask,
                probs,
            } => {
                let AttentionGeometry {
                    batch,
                    seq,
                    heads,
                    head_dim,
                } = *geometry;
                let hidden = heads * head_dim;
                let scale = 1.0 / (head_dim as f64).sqrt();
                let (qd, kd, vd) = (self.val(*q).data(), self.val(*k).data(), self.val(*v).data());
                let mut gq = vec![0.0; qd.len()];
                let mut gk = vec![0.0; kd.len()];
                let mut gv = vec![0.0; vd.len()];
                let mut dp = vec![0.0; seq];
                for b in 0..batch {
                    let keys = &mask[b * seq..(b + 1) * seq];
                    for h in 0..heads {
                        let off = h * head_dim;
                        for i in 0..seq {
                            let row = (b * seq + i) * hidden + off;
                            let go = &g[row..row + head_dim];
                            let p_row = &probs[((b * heads + h) * seq + i) * seq..][..seq];
                            let mut rowdot = 0.0;
                            for j in 0..seq {
                                if keys[j] != 0 {
                                    let vrow = (b * seq + j) * hidden + off;
                                    dp[j] = dot(go, &vd[vrow..vrow + head_dim]);
                                    rowdot += p_row[j] * dp[j];
                                    for (acc, &x) in gv[vrow..vrow + head_dim].iter_mut().zip(go) {
                                        *acc += p_row[j] * x;
                                    }
                                }
                            }
                            for j in 0..seq {
                                if keys[j] == 0 {
                                    continue;
                                }
                                let ds = p_row[j] * (dp[j] - rowdot) * scale;
                                if ds == 0.0 {
                                    continue;
                                }
                                let krow = (b * seq + j) * hidden + off;
                                for d in 0..head_dim {
                                    gq[row + d] += ds * kd[krow + d];
                                    gk[krow + d] += ds * qd[row + d];
                                }
                            }
                        }
                    }
                }
                for (j, local) in [(*q, gq), (*k, gk), (*v, gv)] {
                    for (acc, x) in slot(grads, j, local.len()).iter_mut().zip(&local) {
                        *acc += x;
                    }
                }
            }
            Op::Dropout { x, scale } => {
                for ((acc, gy), s) in slot(grads, *x, g.len()).iter_mut().zip(g).zip(scale) {
                    *acc += gy * s;
                }
            }
            Op::Gather { table, rows } => {
                let vt = self.val(*table);
                let cols = vt.cols();
                let gt = slot(grads, *table, vt.numel());
                for (out_row, &r) in g.chunks(cols).zip(rows) {
                    for (acc, x) in gt[r * cols..(r + 1) * cols].iter_mut().zip(out_row) {
                        *acc += x;
                    }
                }
            }
            Op::SelectRows { x, rows } => {
                let vx = self.val(*x);
                let cols = vx.cols();
                let gx = slot(grads, *x, vx.numel());
                for (out_row, &r) in g.chunks(cols).zip(rows) {
                    for (acc, v) in gx[r * cols..(r + 1) * cols].iter_mut().zip(out_row) {
                        *acc += v;
                    }
                }
            }
            Op::Reshape(x) => {
                for (acc, v) in slot(grads, *x, g.len()).iter_mut().zip(g) {
                    *acc += v;
                }
            }
            Op::Sum(x) => {
                let n = self.val(*x).numel();
                for acc in slot(grads, *x, n).iter_mut() {
                    *acc += g[0];
                }
            }
            Op::CrossEntropy {
                logits,
                labels,
                weights,
                probs,
            } => {
                let vl = self.val(*logits);
                let classes = vl.cols();
                let batch = labels.len() as f64;
                let gl = slot(grads, *logits, vl.numel());
                for (r, (&label, &w)) in labels.iter().zip(weights).enumerate() {
                    let factor = g[0] * w / batch;
                    for c in 0..classes {
                        let target = if c == label { 1.0 } else { 0.0 };
                        gl[r * classes + c] += factor * (probs[r * classes + c] - target);
                    }
                }
            }
        }
    }
}
