//! Operation tape and reverse-mode backward pass.

use super::tensor::{dims2, Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`] tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Whether stochastic layers (dropout) are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

enum Op<T> {
    Leaf,
    Linear {
        x: Var,
        w: Var,
        b: Var,
    },
    MatMul {
        a: Var,
        b: Var,
    },
    Transpose {
        x: Var,
    },
    Relu {
        x: Var,
    },
    SoftmaxRows {
        x: Var,
    },
    /// Per-(group, channel) max over the middle axis of a g×k×c input.
    GroupMax {
        x: Var,
        argmax: Vec<u32>,
    },
    ConcatChannels {
        a: Var,
        b: Var,
    },
    /// Row lookup; the same source row may appear many times.
    GatherRows {
        x: Var,
        indices: Vec<u32>,
    },
    /// Empty mask means identity (inference mode or rate 0).
    Dropout {
        x: Var,
        mask: Vec<bool>,
        scale: T,
    },
    Reshape {
        x: Var,
    },
    Add {
        a: Var,
        b: Var,
    },
    Scale {
        x: Var,
        factor: T,
    },
    SumAll {
        x: Var,
    },
    Mse {
        a: Var,
        b: Var,
    },
    /// Bidirectional sum of squared nearest-neighbor distances.
    Chamfer {
        s: Var,
        x: Var,
        nn_sx: Vec<u32>,
        nn_xs: Vec<u32>,
    },
}

/// Tape of operation records in topological (creation) order.
///
/// A graph and its tensors are confined to one worker at a time; independent
/// graphs may run in parallel.
pub struct Graph<T> {
    values: Vec<Tensor<T>>,
    ops: Vec<Op<T>>,
    requires: Vec<bool>,
    grads: Vec<Option<Tensor<T>>>,
    validate: bool,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Graph {
            values: Vec::new(),
            ops: Vec::new(),
            requires: Vec::new(),
            grads: Vec::new(),
            validate: cfg!(debug_assertions),
        }
    }

    /// Enable or disable NaN/Inf detection on every op output.
    pub fn with_validation(mut self, on: bool) -> Self {
        self.validate = on;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires: bool) -> Result<Var> {
        if self.validate && !matches!(op, Op::Leaf) && !value.all_finite() {
            return Err(Error::NonFinite { op: op_name(&op) });
        }
        let id = self.values.len();
        self.values.push(value);
        self.ops.push(op);
        self.requires.push(requires);
        self.grads.push(None);
        Ok(Var(id))
    }

    /// Leaf that does not receive a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false).expect("leaf push")
    }

    /// Leaf that accumulates a gradient during backward.
    pub fn parameter(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true).expect("leaf push")
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.values[v.0]
    }

    /// Accumulated gradient of `v`, if it received one during backward.
    pub fn grad(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads[v.0].as_ref()
    }

    fn requires(&self, v: Var) -> bool {
        self.requires[v.0]
    }

    /// Row-wise affine map: out = x·w + b with x n×a, w a×b, b [b].
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (_, a) = dims2(self.value(x), "linear input")?;
        let (a2, bw) = dims2(self.value(w), "linear weight")?;
        if a != a2 {
            return Err(Error::shape("linear", format!("inner dims {} vs {}", a, a2)));
        }
        let bias = self.value(b);
        if bias.rank() != 1 || bias.dim(0) != bw {
            return Err(Error::shape(
                "linear",
                format!("bias {:?} vs width {}", bias.shape(), bw),
            ));
        }
        let mut out = self.value(x).matmul(self.value(w))?;
        let n = out.dim(0);
        let bias = self.value(b).data();
        {
            let data = out.data_mut();
            for i in 0..n {
                for j in 0..bw {
                    data[i * bw + j] += bias[j];
                }
            }
        }
        let req = self.requires(x) || self.requires(w) || self.requires(b);
        self.push(out, Op::Linear { x, w, b }, req)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        let req = self.requires(a) || self.requires(b);
        self.push(out, Op::MatMul { a, b }, req)
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let (r, c) = dims2(self.value(x), "transpose")?;
        let src = self.value(x).data();
        let mut data = vec![T::zero(); src.len()];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = src[i * c + j];
            }
        }
        let out = Tensor::new(vec![c, r], data)?;
        let req = self.requires(x);
        self.push(out, Op::Transpose { x }, req)
    }

    /// Elementwise max(x, 0); subgradient at 0 is 0.
    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let data = v.data().iter().map(|&e| e.max(T::zero())).collect();
        let out = Tensor::new(v.shape().to_vec(), data)?;
        let req = self.requires(x);
        self.push(out, Op::Relu { x }, req)
    }

    /// Row softmax with max subtraction; rows sum to 1.
    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        let (r, s) = dims2(self.value(x), "softmax_rows")?;
        let src = self.value(x).data();
        let mut data = vec![T::zero(); src.len()];
        for i in 0..r {
            let row = &src[i * s..(i + 1) * s];
            let mut mx = row[0];
            for &e in row {
                if e > mx {
                    mx = e;
                }
            }
            let mut sum = T::zero();
            for j in 0..s {
                let e = (row[j] - mx).exp();
                data[i * s + j] = e;
                sum += e;
            }
            for j in 0..s {
                data[i * s + j] /= sum;
            }
        }
        let out = Tensor::new(vec![r, s], data)?;
        let req = self.requires(x);
        self.push(out, Op::SoftmaxRows { x }, req)
    }

    /// Per-group, per-channel max over a g×k×c tensor, yielding g×c.
    ///
    /// Gradient routes to exactly one argmax element per (group, channel);
    /// ties resolve to the lowest index.
    pub fn group_max(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        if v.rank() != 3 {
            return Err(Error::shape("group_max", format!("expected rank 3, got {:?}", v.shape())));
        }
        let (g, k, c) = (v.dim(0), v.dim(1), v.dim(2));
        if k == 0 {
            return Err(Error::invalid("group_max", "empty group"));
        }
        let src = v.data();
        let mut data = vec![T::zero(); g * c];
        let mut argmax = vec![0u32; g * c];
        for gi in 0..g {
            let base = gi * k * c;
            for ch in 0..c {
                let mut best = src[base + ch];
                let mut best_k = 0u32;
                for ki in 1..k {
                    let e = src[base + ki * c + ch];
                    if e > best {
                        best = e;
                        best_k = ki as u32;
                    }
                }
                data[gi * c + ch] = best;
                argmax[gi * c + ch] = best_k;
            }
        }
        let out = Tensor::new(vec![g, c], data)?;
        let req = self.requires(x);
        self.push(out, Op::GroupMax { x, argmax }, req)
    }

    /// Channel-wise concatenation of a n×c1 and b n×c2 into n×(c1+c2).
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let (n1, c1) = dims2(self.value(a), "concat lhs")?;
        let (n2, c2) = dims2(self.value(b), "concat rhs")?;
        if n1 != n2 {
            return Err(Error::shape(
                "concat_channels",
                format!("leading dims {} vs {}", n1, n2),
            ));
        }
        let (da, db) = (self.value(a).data(), self.value(b).data());
        let mut data = Vec::with_capacity(n1 * (c1 + c2));
        for i in 0..n1 {
            data.extend_from_slice(&da[i * c1..(i + 1) * c1]);
            data.extend_from_slice(&db[i * c2..(i + 1) * c2]);
        }
        let out = Tensor::new(vec![n1, c1 + c2], data)?;
        let req = self.requires(a) || self.requires(b);
        self.push(out, Op::ConcatChannels { a, b }, req)
    }

    /// Select rows of a n×c tensor by index, producing len(indices)×c.
    /// Gradient scatter-adds back into the source rows.
    pub fn gather_rows(&mut self, x: Var, indices: &[usize]) -> Result<Var> {
        let (n, c) = dims2(self.value(x), "gather_rows")?;
        if indices.is_empty() {
            return Err(Error::invalid("gather_rows", "empty index list"));
        }
        let src = self.value(x).data();
        let mut data = Vec::with_capacity(indices.len() * c);
        let mut recorded = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= n {
                return Err(Error::invalid(
                    "gather_rows",
                    format!("index {} out of range for {} rows", i, n),
                ));
            }
            data.extend_from_slice(&src[i * c..(i + 1) * c]);
            recorded.push(i as u32);
        }
        let out = Tensor::new(vec![indices.len(), c], data)?;
        let req = self.requires(x);
        self.push(
            out,
            Op::GatherRows {
                x,
                indices: recorded,
            },
            req,
        )
    }

    /// In train mode, zero each element with probability `rate` and scale
    /// survivors by 1/(1-rate); identity in inference mode.
    pub fn dropout(
        &mut self,
        x: Var,
        rate: f64,
        mode: Mode,
        rng: &mut impl rand::Rng,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid("dropout", format!("rate {} outside [0,1)", rate)));
        }
        let v = self.value(x);
        if mode == Mode::Infer || rate == 0.0 {
            let out = v.clone();
            let req = self.requires(x);
            return self.push(
                out,
                Op::Dropout {
                    x,
                    mask: Vec::new(),
                    scale: T::one(),
                },
                req,
            );
        }
        let scale = T::from_f64(1.0 / (1.0 - rate));
        let mask: Vec<bool> = (0..v.len()).map(|_| rng.gen::<f64>() >= rate).collect();
        let data = v
            .data()
            .iter()
            .zip(&mask)
            .map(|(&e, &keep)| if keep { e * scale } else { T::zero() })
            .collect();
        let out = Tensor::new(v.shape().to_vec(), data)?;
        let req = self.requires(x);
        self.push(out, Op::Dropout { x, mask, scale }, req)
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let out = self.value(x).clone().reshaped(shape)?;
        let req = self.requires(x);
        self.push(out, Op::Reshape { x }, req)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Error::shape(
                "add",
                format!("{:?} vs {:?}", va.shape(), vb.shape()),
            ));
        }
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(&x, &y)| x + y)
            .collect();
        let out = Tensor::new(va.shape().to_vec(), data)?;
        let req = self.requires(a) || self.requires(b);
        self.push(out, Op::Add { a, b }, req)
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Result<Var> {
        let v = self.value(x);
        let data = v.data().iter().map(|&e| e * factor).collect();
        let out = Tensor::new(v.shape().to_vec(), data)?;
        let req = self.requires(x);
        self.push(out, Op::Scale { x, factor }, req)
    }

    pub fn sum_all(&mut self, x: Var) -> Result<Var> {
        let mut sum = T::zero();
        for &e in self.value(x).data() {
            sum += e;
        }
        let req = self.requires(x);
        self.push(Tensor::scalar(sum), Op::SumAll { x }, req)
    }

    /// Mean of squared elementwise differences.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Error::shape(
                "mse",
                format!("{:?} vs {:?}", va.shape(), vb.shape()),
            ));
        }
        let n = T::from_f64(va.len() as f64);
        let mut sum = T::zero();
        for (&x, &y) in va.data().iter().zip(vb.data()) {
            let d = x - y;
            sum += d * d;
        }
        let req = self.requires(a) || self.requires(b);
        self.push(Tensor::scalar(sum / n), Op::Mse { a, b }, req)
    }

    /// Sum (not mean) of squared nearest-neighbor distances in both
    /// directions between point sets s (m×3) and x (n×3). Nearest-neighbor
    /// ties break to the lowest index for gradient routing.
    pub fn chamfer(&mut self, s: Var, x: Var) -> Result<Var> {
        let (m, cs) = dims2(self.value(s), "chamfer s")?;
        let (n, cx) = dims2(self.value(x), "chamfer x")?;
        if cs != 3 || cx != 3 {
            return Err(Error::shape("chamfer", format!("expected ×3 point sets, got {}×{} and {}×{}", m, cs, n, cx)));
        }
        if m == 0 || n == 0 {
            return Err(Error::invalid("chamfer", "empty point set"));
        }
        let sd = self.value(s).data();
        let xd = self.value(x).data();
        let (total, nn_sx, nn_xs) = chamfer_forward(sd, m, xd, n);
        let req = self.requires(s) || self.requires(x);
        self.push(
            Tensor::scalar(total),
            Op::Chamfer { s, x, nn_sx, nn_xs },
            req,
        )
    }

    /// Reverse-mode sweep from a scalar loss. Gradients accumulate into
    /// every upstream node with `requires_grad`; deterministic given an
    /// identical tape.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(Error::invalid(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.value(loss).shape()),
            ));
        }
        for g in self.grads.iter_mut() {
            *g = None;
        }
        self.grads[loss.0] = Some(Tensor::scalar(T::one()));
        for id in (0..=loss.0).rev() {
            if !self.requires[id] {
                continue;
            }
            let Some(gout) = self.grads[id].take() else {
                continue;
            };
            self.propagate(id, &gout);
            self.grads[id] = Some(gout);
        }
        Ok(())
    }

    fn grad_slot(&mut self, v: Var) -> &mut Tensor<T> {
        if self.grads[v.0].is_none() {
            self.grads[v.0] = Some(Tensor::zeros(self.values[v.0].shape().to_vec()));
        }
        self.grads[v.0].as_mut().unwrap()
    }

    fn propagate(&mut self, id: usize, gout: &Tensor<T>) {
        // Ops only reference lower-numbered nodes, so taking the op out
        // while touching grad slots is safe.
        let op = std::mem::replace(&mut self.ops[id], Op::Leaf);
        match &op {
            Op::Leaf => {}
            Op::Linear { x, w, b } => {
                if self.requires(*x) {
                    // dx = gout · wᵀ
                    let wv = self.values[w.0].clone();
                    Tensor::gemm_acc(self.grad_slot(*x), gout, false, &wv, true);
                }
                if self.requires(*w) {
                    // dw = xᵀ · gout
                    let xv = self.values[x.0].clone();
                    Tensor::gemm_acc(self.grad_slot(*w), &xv, true, gout, false);
                }
                if self.requires(*b) {
                    let (n, width) = (gout.dim(0), gout.dim(1));
                    let gd = gout.data().to_vec();
                    let slot = self.grad_slot(*b).data_mut();
                    for i in 0..n {
                        for j in 0..width {
                            slot[j] += gd[i * width + j];
                        }
                    }
                }
            }
            Op::MatMul { a, b } => {
                if self.requires(*a) {
                    let bv = self.values[b.0].clone();
                    Tensor::gemm_acc(self.grad_slot(*a), gout, false, &bv, true);
                }
                if self.requires(*b) {
                    let av = self.values[a.0].clone();
                    Tensor::gemm_acc(self.grad_slot(*b), &av, true, gout, false);
                }
            }
            Op::Transpose { x } => {
                if self.requires(*x) {
                    let (r, c) = (gout.dim(0), gout.dim(1));
                    let gd = gout.data().to_vec();
                    let slot = self.grad_slot(*x).data_mut();
                    for i in 0..r {
                        for j in 0..c {
                            slot[j * r + i] += gd[i * c + j];
                        }
                    }
                }
            }
            Op::Relu { x } => {
                if self.requires(*x) {
                    let xv = self.values[x.0].data().to_vec();
                    let gd = gout.data();
                    let slot = self.grad_slot(*x).data_mut();
                    for (i, &xe) in xv.iter().enumerate() {
                        if xe > T::zero() {
                            slot[i] += gd[i];
                        }
                    }
                }
            }
            Op::SoftmaxRows { x } => {
                if self.requires(*x) {
                    let y = self.values[id].data().to_vec();
                    let (r, s) = (gout.dim(0), gout.dim(1));
                    let gd = gout.data();
                    let slot = self.grad_slot(*x).data_mut();
                    for i in 0..r {
                        let row = i * s;
                        let mut dot = T::zero();
                        for j in 0..s {
                            dot += gd[row + j] * y[row + j];
                        }
                        for j in 0..s {
                            slot[row + j] += y[row + j] * (gd[row + j] - dot);
                        }
                    }
                }
            }
            Op::GroupMax { x, argmax } => {
                if self.requires(*x) {
                    let c = gout.dim(1);
                    let k = self.values[x.0].dim(1);
                    let gd = gout.data().to_vec();
                    let slot = self.grad_slot(*x).data_mut();
                    for (gc, &ki) in argmax.iter().enumerate() {
                        let (gi, ch) = (gc / c, gc % c);
                        slot[gi * k * c + ki as usize * c + ch] += gd[gc];
                    }
                }
            }
            Op::GatherRows { x, indices } => {
                if self.requires(*x) {
                    let c = gout.dim(1);
                    let gd = gout.data().to_vec();
                    let slot = self.grad_slot(*x).data_mut();
                    for (row, &i) in indices.iter().enumerate() {
                        let i = i as usize;
                        for ch in 0..c {
                            slot[i * c + ch] += gd[row * c + ch];
                        }
                    }
                }
            }
            Op::ConcatChannels { a, b } => {
                let c1 = self.values[a.0].dim(1);
                let c2 = self.values[b.0].dim(1);
                let n = gout.dim(0);
                let gd = gout.data().to_vec();
                if self.requires(*a) {
                    let slot = self.grad_slot(*a).data_mut();
                    for i in 0..n {
                        for j in 0..c1 {
                            slot[i * c1 + j] += gd[i * (c1 + c2) + j];
                        }
                    }
                }
                if self.requires(*b) {
                    let slot = self.grad_slot(*b).data_mut();
                    for i in 0..n {
                        for j in 0..c2 {
                            slot[i * c2 + j] += gd[i * (c1 + c2) + c1 + j];
                        }
                    }
                }
            }
            Op::Dropout { x, mask, scale } => {
                if self.requires(*x) {
                    let gd = gout.data();
                    let slot = self.grad_slot(*x).data_mut();
                    if mask.is_empty() {
                        for (s, &g) in slot.iter_mut().zip(gd) {
                            *s += g;
                        }
                    } else {
                        for (i, &keep) in mask.iter().enumerate() {
                            if keep {
                                slot[i] += gd[i] * *scale;
                            }
                        }
                    }
                }
            }
            Op::Reshape { x } => {
                if self.requires(*x) {
                    let gd = gout.data();
                    let slot = self.grad_slot(*x).data_mut();
                    for (s, &g) in slot.iter_mut().zip(gd) {
                        *s += g;
                    }
                }
            }
            Op::Add { a, b } => {
                let gd = gout.data().to_vec();
                if self.requires(*a) {
                    let slot = self.grad_slot(*a).data_mut();
                    for (s, &g) in slot.iter_mut().zip(&gd) {
                        *s += g;
                    }
                }
                if self.requires(*b) {
                    let slot = self.grad_slot(*b).data_mut();
                    for (s, &g) in slot.iter_mut().zip(&gd) {
                        *s += g;
                    }
                }
            }
            Op::Scale { x, factor } => {
                if self.requires(*x) {
                    let f = *factor;
                    let gd = gout.data();
                    let slot = self.grad_slot(*x).data_mut();
                    for (s, &g) in slot.iter_mut().zip(gd) {
                        *s += g * f;
                    }
                }
            }
            Op::SumAll { x } => {
                if self.requires(*x) {
                    let g = gout.item();
                    let slot = self.grad_slot(*x).data_mut();
                    for s in slot.iter_mut() {
                        *s += g;
                    }
                }
            }
            Op::Mse { a, b } => {
                let g = gout.item();
                let va = self.values[a.0].data().to_vec();
                let vb = self.values[b.0].data().to_vec();
                let two_over_n = T::from_f64(2.0 / va.len() as f64) * g;
                if self.requires(*a) {
                    let slot = self.grad_slot(*a).data_mut();
                    for i in 0..va.len() {
                        slot[i] += two_over_n * (va[i] - vb[i]);
                    }
                }
                if self.requires(*b) {
                    let slot = self.grad_slot(*b).data_mut();
                    for i in 0..va.len() {
                        slot[i] -= two_over_n * (va[i] - vb[i]);
                    }
                }
            }
            Op::Chamfer { s, x, nn_sx, nn_xs } => {
                let g = gout.item();
                let two = T::from_f64(2.0) * g;
                let sd = self.values[s.0].data().to_vec();
                let xd = self.values[x.0].data().to_vec();
                if self.requires(*s) {
                    let slot = self.grad_slot(*s).data_mut();
                    for (i, &j) in nn_sx.iter().enumerate() {
                        let j = j as usize;
                        for d in 0..3 {
                            slot[i * 3 + d] += two * (sd[i * 3 + d] - xd[j * 3 + d]);
                        }
                    }
                    for (j, &i) in nn_xs.iter().enumerate() {
                        let i = i as usize;
                        for d in 0..3 {
                            slot[i * 3 + d] += two * (sd[i * 3 + d] - xd[j * 3 + d]);
                        }
                    }
                }
                if self.requires(*x) {
                    let slot = self.grad_slot(*x).data_mut();
                    for (i, &j) in nn_sx.iter().enumerate() {
                        let j = j as usize;
                        for d in 0..3 {
                            slot[j * 3 + d] -= two * (sd[i * 3 + d] - xd[j * 3 + d]);
                        }
                    }
                    for (j, &i) in nn_xs.iter().enumerate() {
                        let i = i as usize;
                        for d in 0..3 {
                            slot[j * 3 + d] -= two * (sd[i * 3 + d] - xd[j * 3 + d]);
                        }
                    }
                }
            }
        }
        self.ops[id] = op;
    }
}

fn op_name<T>(op: &Op<T>) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::Linear { .. } => "linear",
        Op::MatMul { .. } => "matmul",
        Op::Transpose { .. } => "transpose",
        Op::Relu { .. } => "relu",
        Op::SoftmaxRows { .. } => "softmax_rows",
        Op::GroupMax { .. } => "group_max",
        Op::ConcatChannels { .. } => "concat_channels",
        Op::GatherRows { .. } => "gather_rows",
        Op::Dropout { .. } => "dropout",
        Op::Reshape { .. } => "reshape",
        Op::Add { .. } => "add",
        Op::Scale { .. } => "scale",
        Op::SumAll { .. } => "sum_all",
        Op::Mse { .. } => "mse",
        Op::Chamfer { .. } => "chamfer",
    }
}

/// Forward Chamfer sum with recorded nearest-neighbor indices.
/// Strict `<` comparisons keep the lowest index on ties.
fn chamfer_forward<T: Real>(sd: &[T], m: usize, xd: &[T], n: usize) -> (T, Vec<u32>, Vec<u32>) {
    let mut nn_sx = vec![0u32; m];
    let mut nn_xs = vec![0u32; n];
    let mut total = T::zero();
    for i in 0..m {
        let mut best = T::infinity();
        let mut best_j = 0u32;
        for j in 0..n {
            let d = sq_dist3(&sd[i * 3..i * 3 + 3], &xd[j * 3..j * 3 + 3]);
            if d < best {
                best = d;
                best_j = j as u32;
            }
        }
        nn_sx[i] = best_j;
        total += best;
    }
    for j in 0..n {
        let mut best = T::infinity();
        let mut best_i = 0u32;
        for i in 0..m {
            let d = sq_dist3(&sd[i * 3..i * 3 + 3], &xd[j * 3..j * 3 + 3]);
            if d < best {
                best = d;
                best_i = i as u32;
            }
        }
        nn_xs[j] = best_i;
        total += best;
    }
    (total, nn_sx, nn_xs)
}

#[inline]
fn sq_dist3<T: Real>(a: &[T], b: &[T]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}
