//! Reverse-mode differentiation over a linear record of tensor operations.
//!
//! Every op appends a node whose operands already exist on the tape, so the
//! node index order is a valid topological order and `backward` is a single
//! reverse sweep.

use super::tensor::{matmul_at_into, matmul_bt_into, Element, Tensor};
use crate::error::{Error, Result};

/// Probability floor used inside KL terms.
pub const PROB_FLOOR: f64 = 1e-8;

const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<E> {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Gelu(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    LayerNormRows(Var, Vec<E>),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    MeanRows(Var),
    Pick(Var, Vec<usize>),
    SumAll(Var),
    MeanAll(Var),
    DotConst(Var, Tensor<E>),
    PairwiseKl(Var),
}

#[derive(Debug)]
struct Node<E> {
    value: Tensor<E>,
    op: Op<E>,
    requires_grad: bool,
}

#[derive(Debug)]
pub struct Tape<E: Element = f32> {
    nodes: Vec<Node<E>>,
}

impl<E: Element> Default for Tape<E> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients produced by one backward sweep, indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients<E = f32> {
    grads: Vec<Option<Tensor<E>>>,
}

impl<E: Element> Gradients<E> {
    pub fn get(&self, v: Var) -> Option<&Tensor<E>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<E>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn gelu<E: Element>(x: E) -> E {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let xf = x.as_f64();
    let u = c * (xf + 0.044715 * xf * xf * xf);
    E::of(0.5 * xf * (1.0 + u.tanh()))
}

fn gelu_grad<E: Element>(x: E) -> E {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let xf = x.as_f64();
    let u = c * (xf + 0.044715 * xf * xf * xf);
    let t = u.tanh();
    E::of(0.5 * (1.0 + t) + 0.5 * xf * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * xf * xf))
}

fn floor_ln(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

/// Mean over ordered pairs `i != j` of `KL(H_i || H_j)` on floored probabilities.
pub(crate) fn pairwise_kl_value<E: Element>(h: &Tensor<E>) -> f64 {
    let (b, g) = (h.rows(), h.cols());
    let logs: Vec<f64> = h.data().iter().map(|&p| floor_ln(p.as_f64())).collect();
    let mut total = 0.0f64;
    for i in 0..b {
        for j in 0..b {
            if i == j {
                continue;
            }
            for k in 0..g {
                total += h.data()[i * g + k].as_f64() * (logs[i * g + k] - logs[j * g + k]);
            }
        }
    }
    total / (b * (b - 1)) as f64
}

impl<E: Element> Tape<E> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<E> {
        &self.nodes[v.0].value
    }

    /// A differentiable input (parameter).
    pub fn leaf(&mut self, value: Tensor<E>) -> Var {
        self.push_raw(value, Op::Leaf, true)
    }

    /// An input that never receives a gradient.
    pub fn constant(&mut self, value: Tensor<E>) -> Var {
        self.push_raw(value, Op::Constant, false)
    }

    fn push_raw(&mut self, value: Tensor<E>, op: Op<E>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, name: &'static str, value: Tensor<E>, op: Op<E>, operands: &[Var]) -> Result<Var> {
        let value = value.ensure_finite(name)?;
        let requires_grad = operands.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push_raw(value, op, requires_grad))
    }

    fn mat(&self, v: Var, op: &'static str) -> Result<(usize, usize)> {
        let t = self.value(v);
        if t.shape().len() != 2 {
            return Err(Error::dim(op, format!("expected a matrix, got {:?}", t.shape())));
        }
        Ok((t.shape()[0], t.shape()[1]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        self.push("matmul", value, Op::MatMul(a, b), &[a, b])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).transpose()?;
        self.push("transpose", value, Op::Transpose(a), &[a])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(Error::dim("add", format!("{:?} + {:?}", x.shape(), y.shape())));
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| p + q).collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        self.push("add", value, Op::Add(a, b), &[a, b])
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(Error::dim("mul", format!("{:?} * {:?}", x.shape(), y.shape())));
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| p * q).collect();
        let value = Tensor::new(x.shape().to_vec(), data)?;
        self.push("mul", value, Op::Mul(a, b), &[a, b])
    }

    fn row_operand(&self, a: Var, r: Var, op: &'static str) -> Result<usize> {
        let cols = self.value(a).cols();
        if self.value(r).len() != cols {
            return Err(Error::dim(
                op,
                format!("row operand of {} values for {cols} columns", self.value(r).len()),
            ));
        }
        Ok(cols)
    }

    /// Adds a length-`n` vector to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let cols = self.row_operand(a, bias, "add_row")?;
        let mut value = self.value(a).clone();
        let b = self.value(bias).data();
        for row in value.data_mut().chunks_mut(cols) {
            for (v, &bv) in row.iter_mut().zip(b) {
                *v += bv;
            }
        }
        self.push("add_row", value, Op::AddRow(a, bias), &[a, bias])
    }

    /// Scales column `j` of every row by `gain[j]`.
    pub fn mul_row(&mut self, a: Var, gain: Var) -> Result<Var> {
        let cols = self.row_operand(a, gain, "mul_row")?;
        let mut value = self.value(a).clone();
        let g = self.value(gain).data();
        for row in value.data_mut().chunks_mut(cols) {
            for (v, &gv) in row.iter_mut().zip(g) {
                *v *= gv;
            }
        }
        self.push("mul_row", value, Op::MulRow(a, gain), &[a, gain])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let ce = E::of(c);
        let value = self.value(a).map(|v| v * ce);
        self.push("scale", value, Op::Scale(a, c), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(|v| v.max(E::zero()));
        self.push("relu", value, Op::Relu(a), &[a])
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(gelu);
        self.push("gelu", value, Op::Gelu(a), &[a])
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).softmax_rows()?;
        self.push("softmax_rows", value, Op::SoftmaxRows(a), &[a])
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).log_softmax_rows()?;
        self.push("log_softmax_rows", value, Op::LogSoftmaxRows(a), &[a])
    }

    /// Normalises each row to zero mean and unit variance (no affine part).
    pub fn layer_norm_rows(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let cols = x.cols();
        let mut value = x.clone();
        let mut inv_std = Vec::with_capacity(x.rows());
        for row in value.data_mut().chunks_mut(cols) {
            let mean = row.iter().map(|v| v.as_f64()).sum::<f64>() / cols as f64;
            let var = row
                .iter()
                .map(|v| {
                    let d = v.as_f64() - mean;
                    d * d
                })
                .sum::<f64>()
                / cols as f64;
            let r = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for v in row.iter_mut() {
                *v = E::of((v.as_f64() - mean) * r);
            }
            inv_std.push(E::of(r));
        }
        self.push("layer_norm_rows", value, Op::LayerNormRows(a, inv_std), &[a])
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (rows, cols) = self.mat(a, "slice_cols")?;
        if start + len > cols {
            return Err(Error::dim("slice_cols", format!("{start}+{len} > {cols}")));
        }
        let x = self.value(a).data();
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&x[r * cols + start..r * cols + start + len]);
        }
        let value = Tensor::new([rows, len], data)?;
        self.push("slice_cols", value, Op::SliceCols(a, start), &[a])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| Error::contract("concat_cols of nothing"))?;
        let (rows, _) = self.mat(first, "concat_cols")?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.mat(p, "concat_cols")?;
            if r != rows {
                return Err(Error::dim("concat_cols", format!("{r} rows vs {rows}")));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.value(p).data()[r * w..(r + 1) * w]);
            }
        }
        let value = Tensor::new([rows, total], data)?;
        self.push("concat_cols", value, Op::ConcatCols(parts.to_vec()), parts)
    }

    /// Stacks matrices (or vectors, as single rows) vertically.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| Error::contract("concat_rows of nothing"))?;
        let cols = self.value(first).cols();
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if t.cols() != cols {
                return Err(Error::dim("concat_rows", format!("{} cols vs {cols}", t.cols())));
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let value = Tensor::new([rows, cols], data)?;
        self.push("concat_rows", value, Op::ConcatRows(parts.to_vec()), parts)
    }

    /// Selects rows of `table` by index (embedding lookup).
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let (rows, cols) = self.mat(table, "gather_rows")?;
        let t = self.value(table).data();
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &id in ids {
            if id >= rows {
                return Err(Error::dim("gather_rows", format!("row {id} of {rows}")));
            }
            data.extend_from_slice(&t[id * cols..(id + 1) * cols]);
        }
        let value = Tensor::new([ids.len(), cols], data)?;
        self.push("gather_rows", value, Op::GatherRows(table, ids.to_vec()), &[table])
    }

    /// Column means, as a `[1 × n]` row.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let (rows, cols) = self.mat(a, "mean_rows")?;
        if rows == 0 {
            return Err(Error::contract("mean_rows over zero rows"));
        }
        let x = self.value(a).data();
        let mut acc = vec![0.0f64; cols];
        for r in 0..rows {
            for (s, v) in acc.iter_mut().zip(&x[r * cols..(r + 1) * cols]) {
                *s += v.as_f64();
            }
        }
        let data = acc.into_iter().map(|s| E::of(s / rows as f64)).collect();
        let value = Tensor::new([1, cols], data)?;
        self.push("mean_rows", value, Op::MeanRows(a), &[a])
    }

    /// `out[i] = a[i, idx[i]]`.
    pub fn pick(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let (rows, cols) = self.mat(a, "pick")?;
        if idx.len() != rows {
            return Err(Error::dim("pick", format!("{} indices for {rows} rows", idx.len())));
        }
        let x = self.value(a).data();
        let mut data = Vec::with_capacity(rows);
        for (r, &c) in idx.iter().enumerate() {
            if c >= cols {
                return Err(Error::dim("pick", format!("column {c} of {cols}")));
            }
            data.push(x[r * cols + c]);
        }
        let value = Tensor::vector(data);
        self.push("pick", value, Op::Pick(a, idx.to_vec()), &[a])
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        let value = Tensor::scalar(E::of(self.value(a).sum_f64()));
        self.push("sum_all", value, Op::SumAll(a), &[a])
    }

    pub fn mean_all(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a);
        if t.is_empty() {
            return Err(Error::contract("mean of empty tensor"));
        }
        let value = Tensor::scalar(E::of(t.sum_f64() / t.len() as f64));
        self.push("mean_all", value, Op::MeanAll(a), &[a])
    }

    /// `Σ a_i c_i` against a constant coefficient tensor of the same size.
    pub fn dot_const(&mut self, a: Var, coeffs: Tensor<E>) -> Result<Var> {
        let t = self.value(a);
        if t.len() != coeffs.len() {
            return Err(Error::dim(
                "dot_const",
                format!("{} values vs {} coefficients", t.len(), coeffs.len()),
            ));
        }
        let s = t
            .data()
            .iter()
            .zip(coeffs.data())
            .fold(0.0f64, |acc, (&x, &c)| acc + x.as_f64() * c.as_f64());
        let value = Tensor::scalar(E::of(s));
        self.push("dot_const", value, Op::DotConst(a, coeffs), &[a])
    }

    /// Mean pairwise KL divergence between the rows of a row-stochastic matrix.
    pub fn pairwise_kl_mean(&mut self, h: Var) -> Result<Var> {
        let (b, _) = self.mat(h, "pairwise_kl_mean")?;
        if b < 2 {
            return Err(Error::contract("pairwise KL needs at least two rows"));
        }
        let value = Tensor::scalar(E::of(pairwise_kl_value(self.value(h))));
        self.push("pairwise_kl_mean", value, Op::PairwiseKl(h), &[h])
    }

    /// Reverse sweep from a scalar node. Consumes the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients<E>> {
        let n = self.nodes.len();
        if loss.0 >= n {
            return Err(Error::contract("loss node is not on this tape"));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<E>>> = (0..n).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(self.nodes[loss.0].value.shape().to_vec(), E::one()));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if self.nodes[i].requires_grad {
                self.propagate(i, &g, &mut grads)?;
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, i: usize, g: &Tensor<E>, grads: &mut [Option<Tensor<E>>]) -> Result<()> {
        let node = &self.nodes[i];
        let out = &node.value;
        let wants = |v: &Var| self.nodes[v.0].requires_grad;
        let val = |v: &Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (m, k) = (val(a).shape()[0], val(a).shape()[1]);
                let nn = val(b).shape()[1];
                if wants(a) {
                    let mut da = Tensor::zeros([m, k]);
                    matmul_bt_into(g.data(), val(b).data(), da.data_mut(), m, nn, k);
                    accumulate(grads, *a, da);
                }
                if wants(b) {
                    let mut db = Tensor::zeros([k, nn]);
                    matmul_at_into(val(a).data(), g.data(), db.data_mut(), m, k, nn);
                    accumulate(grads, *b, db);
                }
            }
            Op::Transpose(a) => {
                if wants(a) {
                    accumulate(grads, *a, g.transpose()?);
                }
            }
            Op::Add(a, b) => {
                if wants(a) {
                    accumulate(grads, *a, g.clone());
                }
                if wants(b) {
                    accumulate(grads, *b, g.clone());
                }
            }
            Op::Mul(a, b) => {
                if wants(a) {
                    let d = zip_map(g, val(b), |gv, bv| gv * bv);
                    accumulate(grads, *a, d);
                }
                if wants(b) {
                    let d = zip_map(g, val(a), |gv, av| gv * av);
                    accumulate(grads, *b, d);
                }
            }
            Op::AddRow(a, bias) => {
                if wants(a) {
                    accumulate(grads, *a, g.clone());
                }
                if wants(bias) {
                    let cols = g.cols();
                    let mut db = Tensor::zeros(val(bias).shape().to_vec());
                    for row in g.data().chunks(cols) {
                        for (d, &gv) in db.data_mut().iter_mut().zip(row) {
                            *d += gv;
                        }
                    }
                    accumulate(grads, *bias, db);
                }
            }
            Op::MulRow(a, gain) => {
                let cols = g.cols();
                if wants(a) {
                    let mut da = g.clone();
                    let gv = val(gain).data();
                    for row in da.data_mut().chunks_mut(cols) {
                        for (d, &s) in row.iter_mut().zip(gv) {
                            *d *= s;
                        }
                    }
                    accumulate(grads, *a, da);
                }
                if wants(gain) {
                    let mut dg = Tensor::zeros(val(gain).shape().to_vec());
                    for (grow, xrow) in g.data().chunks(cols).zip(val(a).data().chunks(cols)) {
                        for ((d, &gv), &xv) in dg.data_mut().iter_mut().zip(grow).zip(xrow) {
                            *d += gv * xv;
                        }
                    }
                    accumulate(grads, *gain, dg);
                }
            }
            Op::Scale(a, c) => {
                if wants(a) {
                    let ce = E::of(*c);
                    accumulate(grads, *a, g.map(|v| v * ce));
                }
            }
            Op::Relu(a) => {
                if wants(a) {
                    let d = zip_map(g, val(a), |gv, x| if x > E::zero() { gv } else { E::zero() });
                    accumulate(grads, *a, d);
                }
            }
            Op::Gelu(a) => {
                if wants(a) {
                    let d = zip_map(g, val(a), |gv, x| gv * gelu_grad(x));
                    accumulate(grads, *a, d);
                }
            }
            Op::SoftmaxRows(a) => {
                if wants(a) {
                    let cols = out.cols();
                    let mut d = Tensor::zeros(out.shape().to_vec());
                    for ((drow, yrow), grow) in d
                        .data_mut()
                        .chunks_mut(cols)
                        .zip(out.data().chunks(cols))
                        .zip(g.data().chunks(cols))
                    {
                        let dot: f64 = yrow.iter().zip(grow).map(|(&y, &gv)| (y * gv).as_f64()).sum();
                        let dot = E::of(dot);
                        for ((dv, &y), &gv) in drow.iter_mut().zip(yrow).zip(grow) {
                            *dv = y * (gv - dot);
                        }
                    }
                    accumulate(grads, *a, d);
                }
            }
            Op::LogSoftmaxRows(a) => {
                if wants(a) {
                    let cols = out.cols();
                    let mut d = Tensor::zeros(out.shape().to_vec());
                    for ((drow, yrow), grow) in d
                        .data_mut()
                        .chunks_mut(cols)
                        .zip(out.data().chunks(cols))
                        .zip(g.data().chunks(cols))
                    {
                        let gsum = E::of(grow.iter().map(|v| v.as_f64()).sum::<f64>());
                        for ((dv, &y), &gv) in drow.iter_mut().zip(yrow).zip(grow) {
                            *dv = gv - y.exp() * gsum;
                        }
                    }
                    accumulate(grads, *a, d);
                }
            }
            Op::LayerNormRows(a, inv_std) => {
                if wants(a) {
                    let cols = out.cols();
                    let n = cols as f64;
                    let mut d = Tensor::zeros(out.shape().to_vec());
                    for (((drow, yrow), grow), &r) in d
                        .data_mut()
                        .chunks_mut(cols)
                        .zip(out.data().chunks(cols))
                        .zip(g.data().chunks(cols))
                        .zip(inv_std)
                    {
                        let gmean = grow.iter().map(|v| v.as_f64()).sum::<f64>() / n;
                        let gy = yrow
                            .iter()
                            .zip(grow)
                            .map(|(&y, &gv)| (y * gv).as_f64())
                            .sum::<f64>()
                            / n;
                        for ((dv, &y), &gv) in drow.iter_mut().zip(yrow).zip(grow) {
                            *dv = r * (gv - E::of(gmean) - y * E::of(gy));
                        }
                    }
                    accumulate(grads, *a, d);
                }
            }
            Op::SliceCols(a, start) => {
                if wants(a) {
                    let (rows, cols) = (val(a).shape()[0], val(a).shape()[1]);
                    let len = out.cols();
                    let mut d = Tensor::zeros([rows, cols]);
                    for r in 0..rows {
                        d.data_mut()[r * cols + start..r * cols + start + len]
                            .copy_from_slice(&g.data()[r * len..(r + 1) * len]);
                    }
                    accumulate(grads, *a, d);
                }
            }
            Op::ConcatCols(parts) => {
                let rows = out.rows();
                let total = out.cols();
                let mut offset = 0;
                for p in parts {
                    let w = val(p).cols();
                    if wants(p) {
                        let mut d = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            d.extend_from_slice(&g.data()[r * total + offset..r * total + offset + w]);
                        }
                        accumulate(grads, *p, Tensor::new(val(p).shape().to_vec(), d)?);
                    }
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let len = val(p).len();
                    if wants(p) {
                        let d = g.data()[offset..offset + len].to_vec();
                        accumulate(grads, *p, Tensor::new(val(p).shape().to_vec(), d)?);
                    }
                    offset += len;
                }
            }
            Op::GatherRows(table, ids) => {
                if wants(table) {
                    let cols = out.cols();
                    let mut d = Tensor::zeros(val(table).shape().to_vec());
                    for (r, &id) in ids.iter().enumerate() {
                        let dst = &mut d.data_mut()[id * cols..(id + 1) * cols];
                        for (dv, &gv) in dst.iter_mut().zip(&g.data()[r * cols..(r + 1) * cols]) {
                            *dv += gv;
                        }
                    }
                    accumulate(grads, *table, d);
                }
            }
            Op::MeanRows(a) => {
                if wants(a) {
                    let (rows, cols) = (val(a).shape()[0], val(a).shape()[1]);
                    let inv = E::of(1.0 / rows as f64);
                    let mut d = Tensor::zeros([rows, cols]);
                    for row in d.data_mut().chunks_mut(cols) {
                        for (dv, &gv) in row.iter_mut().zip(g.data()) {
                            *dv = gv * inv;
                        }
                    }
                    accumulate(grads, *a, d);
                }
            }
            Op::Pick(a, idx) => {
                if wants(a) {
                    let cols = val(a).cols();
                    let mut d = Tensor::zeros(val(a).shape().to_vec());
                    for (r, &c) in idx.iter().enumerate() {
                        d.data_mut()[r * cols + c] = g.data()[r];
                    }
                    accumulate(grads, *a, d);
                }
            }
            Op::SumAll(a) => {
                if wants(a) {
                    accumulate(grads, *a, Tensor::full(val(a).shape().to_vec(), g.item()));
                }
            }
            Op::MeanAll(a) => {
                if wants(a) {
                    let n = val(a).len() as f64;
                    let v = E::of(g.item().as_f64() / n);
                    accumulate(grads, *a, Tensor::full(val(a).shape().to_vec(), v));
                }
            }
            Op::DotConst(a, coeffs) => {
                if wants(a) {
                    let gv = g.item();
                    let d = coeffs.map(|c| c * gv);
                    accumulate(grads, *a, d.reshape(val(a).shape().to_vec())?);
                }
            }
            Op::PairwiseKl(h) => {
                if wants(h) {
                    let hv = val(h);
                    let (b, k) = (hv.rows(), hv.cols());
                    let p: Vec<f64> = hv.data().iter().map(|v| v.as_f64()).collect();
                    let logs: Vec<f64> = p.iter().map(|&v| floor_ln(v)).collect();
                    let scale = g.item().as_f64() / (b * (b - 1)) as f64;
                    let mut d = vec![0.0f64; b * k];
                    for i in 0..b {
                        for j in 0..b {
                            if i == j {
                                continue;
                            }
                            for c in 0..k {
                                let (pi, pj) = (p[i * k + c], p[j * k + c]);
                                // KL(H_i || H_j): H_i appears as the weight and inside the first log.
                                let through_log = if pi > PROB_FLOOR { 1.0 } else { 0.0 };
                                d[i * k + c] += logs[i * k + c] - logs[j * k + c] + through_log;
                                if pj > PROB_FLOOR {
                                    d[j * k + c] -= pi / pj;
                                }
                            }
                        }
                    }
                    let data = d.into_iter().map(|v| E::of(v * scale)).collect();
                    accumulate(grads, *h, Tensor::new(hv.shape().to_vec(), data)?);
                }
            }
        }
        Ok(())
    }
}

fn zip_map<E: Element>(a: &Tensor<E>, b: &Tensor<E>, f: impl Fn(E, E) -> E) -> Tensor<E> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("operands share a shape")
}

fn accumulate<E: Element>(grads: &mut [Option<Tensor<E>>], v: Var, d: Tensor<E>) {
    match &mut grads[v.0] {
        Some(t) => t.add_assign(&d),
        slot @ None => *slot = Some(d),
    }
}
