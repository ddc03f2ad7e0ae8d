//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Graph`] is an append-only arena of nodes. Every operation evaluates
//! eagerly, stores its value and records its inputs, so the arena order is a
//! topological order and [`Graph::backward`] is a single reverse sweep.
//!
//! Trainable values live outside the graph in a [`ParamStore`]. A graph pulls
//! a parameter in with [`Graph::param`] (once per graph) and pushes gradients
//! back with [`Graph::accumulate_grads`].
//!
//! Double backward is not supported. Gradients of a scalar function with
//! respect to a low-dimensional input are instead built as ordinary graph
//! nodes by [`Graph::jvp`], after which the usual backward sweep
//! differentiates through them.
//!
//! Shapes are `(rows, cols)`. There is no implicit broadcasting; the
//! broadcasting ops ([`Graph::add_row`], [`Graph::mul_col`],
//! [`Graph::mul_scalar`], [`Graph::scale_cols`]) are explicit.

mod check;
mod jvp;
mod params;
mod riemannian;
mod unary;

pub use check::{fd_check, fd_check_params, relative_error};
pub use params::{Param, ParamId, ParamKind, ParamStore};
pub use riemannian::{riemannian_grad, riemannian_grad_rows};
pub use unary::{sigmoid, UnaryFn, ACOSH_GRAD_CLAMP};

use crate::error::{Error, Result};
use crate::lorentz::DIV_GUARD;
use crate::matrix::Matrix;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tensor(usize);

impl Tensor {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Leaf,
    MatMul(Tensor, Tensor),
    MatMulT(Tensor, Tensor),
    Add(Tensor, Tensor),
    Sub(Tensor, Tensor),
    Mul(Tensor, Tensor),
    Div(Tensor, Tensor),
    AddRow(Tensor, Tensor),
    MulCol(Tensor, Tensor),
    MulScalar(Tensor, Tensor),
    Scale(Tensor, f64),
    AddConst(Tensor),
    MulConst(Tensor, Matrix),
    ScaleCols(Tensor, Vec<f64>),
    Unary(Tensor, UnaryFn),
    UnaryDeriv(Tensor, UnaryFn),
    RowSum(Tensor),
    Sum(Tensor),
    Mean(Tensor),
    ConcatCols(Vec<Tensor>),
    SliceCols(Tensor, usize),
    ConcatRows(Vec<Tensor>),
    SegmentSum(Tensor, Vec<Vec<usize>>),
    Softmax(Tensor),
    CrossEntropy(Tensor, Vec<usize>),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::MatMulT(..) => "matmul_t",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::AddRow(..) => "add_row",
            Op::MulCol(..) => "mul_col",
            Op::MulScalar(..) => "mul_scalar",
            Op::Scale(..) => "scale",
            Op::AddConst(..) => "add_const",
            Op::MulConst(..) => "mul_const",
            Op::ScaleCols(..) => "scale_cols",
            Op::Unary(..) => "unary",
            Op::UnaryDeriv(..) => "unary_deriv",
            Op::RowSum(..) => "row_sum",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
            Op::ConcatCols(..) => "concat_cols",
            Op::SliceCols(..) => "slice_cols",
            Op::ConcatRows(..) => "concat_rows",
            Op::SegmentSum(..) => "segment_sum",
            Op::Softmax(..) => "softmax",
            Op::CrossEntropy(..) => "cross_entropy",
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// A single-owner computation graph.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Matrix>>,
    params: Vec<(ParamId, Tensor)>,
}

#[inline]
fn guard(x: f64) -> f64 {
    if x.abs() >= DIV_GUARD {
        x
    } else if x < 0.0 {
        -DIV_GUARD
    } else {
        DIV_GUARD
    }
}

fn shape_err(op: &'static str, a: &Matrix, b: &Matrix) -> Error {
    Error::Shape { op, left: a.shape(), right: b.shape() }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Tensor {
        self.nodes.push(Node { value, op, requires_grad });
        Tensor(self.nodes.len() - 1)
    }

    fn rg(&self, t: Tensor) -> bool {
        self.nodes[t.0].requires_grad
    }

    /// A differentiable input.
    pub fn input(&mut self, value: Matrix) -> Tensor {
        self.push(value, Op::Leaf, true)
    }

    /// A value that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> Tensor {
        self.push(value, Op::Leaf, false)
    }

    /// The leaf for a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Tensor {
        if let Some(&(_, t)) = self.params.iter().find(|(p, _)| *p == id) {
            return t;
        }
        let t = self.push(store.get(id).value.clone(), Op::Leaf, true);
        self.params.push((id, t));
        t
    }

    pub fn value(&self, t: Tensor) -> &Matrix {
        &self.nodes[t.0].value
    }

    pub fn shape(&self, t: Tensor) -> (usize, usize) {
        self.nodes[t.0].value.shape()
    }

    /// The gradient of the last [`Graph::backward`] root with respect to `t`.
    pub fn grad(&self, t: Tensor) -> Option<&Matrix> {
        self.grads.get(t.0).and_then(Option::as_ref)
    }

    // ----- linear algebra -------------------------------------------------

    pub fn matmul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.rows() {
            return Err(shape_err("matmul", va, vb));
        }
        let v = va.matmul(vb);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::MatMul(a, b), rg))
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.cols() {
            return Err(shape_err("matmul_t", va, vb));
        }
        let v = va.matmul_t(vb);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::MatMulT(a, b), rg))
    }

    fn same_shape(&self, op: &'static str, a: Tensor, b: Tensor) -> Result<()> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(shape_err(op, va, vb));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.same_shape("add", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.same_shape("sub", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.same_shape("mul", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Mul(a, b), rg))
    }

    /// Elementwise `a / b`; divisors smaller than 1e-15 in magnitude are
    /// pushed out to ±1e-15.
    pub fn div(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.same_shape("div", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x / guard(y));
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(v, Op::Div(a, b), rg))
    }

    /// Adds the `1 × c` row `r` to every row of `a`.
    pub fn add_row(&mut self, a: Tensor, r: Tensor) -> Result<Tensor> {
        let (va, vr) = (self.value(a), self.value(r));
        if vr.rows() != 1 || vr.cols() != va.cols() {
            return Err(shape_err("add_row", va, vr));
        }
        let mut v = va.clone();
        for i in 0..v.rows() {
            for (x, y) in v.row_mut(i).iter_mut().zip(vr.data()) {
                *x += y;
            }
        }
        let rg = self.rg(a) || self.rg(r);
        Ok(self.push(v, Op::AddRow(a, r), rg))
    }

    /// Scales row `i` of `a` by entry `i` of the column `c`.
    pub fn mul_col(&mut self, a: Tensor, c: Tensor) -> Result<Tensor> {
        let (va, vc) = (self.value(a), self.value(c));
        if vc.cols() != 1 || vc.rows() != va.rows() {
            return Err(shape_err("mul_col", va, vc));
        }
        let mut v = va.clone();
        for i in 0..v.rows() {
            let s = vc.data()[i];
            v.row_mut(i).iter_mut().for_each(|x| *x *= s);
        }
        let rg = self.rg(a) || self.rg(c);
        Ok(self.push(v, Op::MulCol(a, c), rg))
    }

    /// Scales `a` by the `1 × 1` tensor `s`.
    pub fn mul_scalar(&mut self, a: Tensor, s: Tensor) -> Result<Tensor> {
        let (va, vs) = (self.value(a), self.value(s));
        if vs.shape() != (1, 1) {
            return Err(shape_err("mul_scalar", va, vs));
        }
        let k = vs.item();
        let v = va.map(|x| x * k);
        let rg = self.rg(a) || self.rg(s);
        Ok(self.push(v, Op::MulScalar(a, s), rg))
    }

    pub fn scale(&mut self, a: Tensor, f: f64) -> Tensor {
        let v = self.value(a).map(|x| x * f);
        let rg = self.rg(a);
        self.push(v, Op::Scale(a, f), rg)
    }

    pub fn add_const(&mut self, a: Tensor, c: f64) -> Tensor {
        let v = self.value(a).map(|x| x + c);
        let rg = self.rg(a);
        self.push(v, Op::AddConst(a), rg)
    }

    /// Elementwise product with a constant matrix (masks, signs).
    pub fn mul_const(&mut self, a: Tensor, m: Matrix) -> Result<Tensor> {
        let va = self.value(a);
        if va.shape() != m.shape() {
            return Err(shape_err("mul_const", va, &m));
        }
        let v = va.zip_map(&m, |x, y| x * y);
        let rg = self.rg(a);
        Ok(self.push(v, Op::MulConst(a, m), rg))
    }

    /// Multiplies column `j` of `a` by the constant `w[j]`.
    pub fn scale_cols(&mut self, a: Tensor, w: Vec<f64>) -> Result<Tensor> {
        let va = self.value(a);
        if va.cols() != w.len() {
            return Err(Error::Shape { op: "scale_cols", left: va.shape(), right: (1, w.len()) });
        }
        let mut v = va.clone();
        for i in 0..v.rows() {
            for (x, s) in v.row_mut(i).iter_mut().zip(&w) {
                *x *= s;
            }
        }
        let rg = self.rg(a);
        Ok(self.push(v, Op::ScaleCols(a, w), rg))
    }

    pub fn neg(&mut self, a: Tensor) -> Tensor {
        self.scale(a, -1.0)
    }

    // ----- elementwise functions ------------------------------------------

    pub fn unary(&mut self, a: Tensor, f: UnaryFn) -> Tensor {
        let v = self.value(a).map(|x| f.eval(x));
        let rg = self.rg(a);
        self.push(v, Op::Unary(a, f), rg)
    }

    /// Elementwise first derivative `f'(a)` as a differentiable node.
    pub fn unary_deriv(&mut self, a: Tensor, f: UnaryFn) -> Tensor {
        let v = self.value(a).map(|x| f.d1(x));
        let rg = self.rg(a);
        self.push(v, Op::UnaryDeriv(a, f), rg)
    }

    pub fn sigmoid(&mut self, a: Tensor) -> Tensor {
        self.unary(a, UnaryFn::Sigmoid)
    }

    pub fn cosh(&mut self, a: Tensor) -> Tensor {
        self.unary(a, UnaryFn::Cosh)
    }

    pub fn sinh(&mut self, a: Tensor) -> Tensor {
        self.unary(a, UnaryFn::Sinh)
    }

    /// `acosh` with its argument clamped to at least 1.
    pub fn acosh(&mut self, a: Tensor) -> Tensor {
        self.unary(a, UnaryFn::Acosh)
    }

    pub fn sqrt(&mut self, a: Tensor) -> Tensor {
        self.unary(a, UnaryFn::Sqrt)
    }

    pub fn square(&mut self, a: Tensor) -> Tensor {
        self.unary(a, UnaryFn::Square)
    }

    pub fn exp(&mut self, a: Tensor) -> Tensor {
        self.unary(a, UnaryFn::Exp)
    }

    pub fn ln(&mut self, a: Tensor) -> Tensor {
        self.unary(a, UnaryFn::Ln)
    }

    pub fn relu(&mut self, a: Tensor) -> Tensor {
        self.unary(a, UnaryFn::Relu)
    }

    // ----- reductions -----------------------------------------------------

    /// Sums each row into an `r × 1` column.
    pub fn row_sum(&mut self, a: Tensor) -> Tensor {
        let va = self.value(a);
        let data = (0..va.rows()).map(|i| va.row(i).iter().sum()).collect();
        let v = Matrix::from_vec(va.rows(), 1, data);
        let rg = self.rg(a);
        self.push(v, Op::RowSum(a), rg)
    }

    pub fn sum(&mut self, a: Tensor) -> Tensor {
        let v = Matrix::scalar(self.value(a).sum());
        let rg = self.rg(a);
        self.push(v, Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Tensor) -> Tensor {
        let va = self.value(a);
        let v = Matrix::scalar(va.sum() / va.len() as f64);
        let rg = self.rg(a);
        self.push(v, Op::Mean(a), rg)
    }

    /// Euclidean norm of each row.
    pub fn row_norm(&mut self, a: Tensor) -> Tensor {
        let sq = self.square(a);
        let s = self.row_sum(sq);
        self.sqrt(s)
    }

    /// Row-wise Minkowski inner product, `r × 1`.
    pub fn lorentz_inner(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.same_shape("lorentz_inner", a, b)?;
        let signed = self.scale_cols(a, time_sign(self.shape(a).1))?;
        let prod = self.mul(signed, b)?;
        Ok(self.row_sum(prod))
    }

    /// All pairwise Minkowski inner products between rows of `a` and rows of
    /// `b`.
    pub fn lorentz_gram(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let signed = self.scale_cols(a, time_sign(self.shape(a).1))?;
        self.matmul_t(signed, b)
    }

    // ----- structural -----------------------------------------------------

    pub fn concat_cols(&mut self, parts: &[Tensor]) -> Result<Tensor> {
        let first = *parts.first().ok_or_else(|| Error::Degenerate("empty concat".into()))?;
        let rows = self.shape(first).0;
        let mut cols = 0;
        for &p in parts {
            if self.shape(p).0 != rows {
                return Err(shape_err("concat_cols", self.value(first), self.value(p)));
            }
            cols += self.shape(p).1;
        }
        let mut v = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let mut off = 0;
            for &p in parts {
                let src = self.nodes[p.0].value.row(i);
                v.row_mut(i)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(v, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Columns `start..start + len`.
    pub fn slice_cols(&mut self, a: Tensor, start: usize, len: usize) -> Result<Tensor> {
        let va = self.value(a);
        if start + len > va.cols() || len == 0 {
            return Err(Error::Shape { op: "slice_cols", left: va.shape(), right: (start, len) });
        }
        let mut v = Matrix::zeros(va.rows(), len);
        for i in 0..va.rows() {
            v.row_mut(i).copy_from_slice(&va.row(i)[start..start + len]);
        }
        let rg = self.rg(a);
        Ok(self.push(v, Op::SliceCols(a, start), rg))
    }

    pub fn concat_rows(&mut self, parts: &[Tensor]) -> Result<Tensor> {
        let first = *parts.first().ok_or_else(|| Error::Degenerate("empty concat".into()))?;
        let cols = self.shape(first).1;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            if self.shape(p).1 != cols {
                return Err(shape_err("concat_rows", self.value(first), self.value(p)));
            }
            data.extend_from_slice(self.value(p).data());
            rows += self.shape(p).0;
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Matrix::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()), rg))
    }

    /// Output row `i` is the sum of the rows of `a` listed in `segments[i]`,
    /// added in the listed order.
    pub fn segment_sum(&mut self, a: Tensor, segments: Vec<Vec<usize>>) -> Result<Tensor> {
        let va = self.value(a);
        let mut v = Matrix::zeros(segments.len(), va.cols());
        for (i, seg) in segments.iter().enumerate() {
            for &j in seg {
                if j >= va.rows() {
                    return Err(Error::Shape { op: "segment_sum", left: va.shape(), right: (j, 0) });
                }
                let src = va.row(j);
                for (o, s) in v.row_mut(i).iter_mut().zip(src) {
                    *o += s;
                }
            }
        }
        let rg = self.rg(a);
        Ok(self.push(v, Op::SegmentSum(a, segments), rg))
    }

    /// Selects rows of `a` by index.
    pub fn gather_rows(&mut self, a: Tensor, idx: &[usize]) -> Result<Tensor> {
        self.segment_sum(a, idx.iter().map(|&i| vec![i]).collect())
    }

    // ----- losses ---------------------------------------------------------

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: Tensor) -> Tensor {
        let v = softmax_rows(self.value(a));
        let rg = self.rg(a);
        self.push(v, Op::Softmax(a), rg)
    }

    /// Mean over rows of `-log softmax(logits)[target]`.
    pub fn cross_entropy(&mut self, logits: Tensor, targets: &[usize]) -> Result<Tensor> {
        let vl = self.value(logits);
        if targets.len() != vl.rows() || targets.iter().any(|&t| t >= vl.cols()) {
            return Err(Error::Shape { op: "cross_entropy", left: vl.shape(), right: (targets.len(), 1) });
        }
        let mut total = 0.0;
        for (i, &t) in targets.iter().enumerate() {
            let row = vl.row(i);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            total += lse - row[t];
        }
        let v = Matrix::scalar(total / targets.len() as f64);
        let rg = self.rg(logits);
        Ok(self.push(v, Op::CrossEntropy(logits, targets.to_vec()), rg))
    }

    // ----- backward -------------------------------------------------------

    /// Fills the gradient of the scalar `root` with respect to every node that
    /// depends on a differentiable leaf.
    pub fn backward(&mut self, root: Tensor) -> Result<()> {
        let shape = self.shape(root);
        if shape != (1, 1) {
            return Err(Error::NonScalarRoot(shape));
        }
        self.grads = vec![None; self.nodes.len()];
        if !self.rg(root) {
            return Ok(());
        }
        self.grads[root.0] = Some(Matrix::scalar(1.0));
        for i in (0..=root.0).rev() {
            let Some(g) = self.grads[i].take() else { continue };
            self.backprop_node(i, &g);
            self.grads[i] = Some(g);
        }
        Ok(())
    }

    fn acc(&mut self, t: Tensor, g: Matrix) {
        if !self.nodes[t.0].requires_grad {
            return;
        }
        match &mut self.grads[t.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn backprop_node(&mut self, i: usize, g: &Matrix) {
        let op = self.nodes[i].op.clone();
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(a) {
                    let ga = g.matmul_t(self.value(b));
                    self.acc(a, ga);
                }
                if self.rg(b) {
                    let gb = self.value(a).t_matmul(g);
                    self.acc(b, gb);
                }
            }
            Op::MatMulT(a, b) => {
                if self.rg(a) {
                    let ga = g.matmul(self.value(b));
                    self.acc(a, ga);
                }
                if self.rg(b) {
                    let gb = g.t_matmul(self.value(a));
                    self.acc(b, gb);
                }
            }
            Op::Add(a, b) => {
                self.acc(a, g.clone());
                self.acc(b, g.clone());
            }
            Op::Sub(a, b) => {
                self.acc(a, g.clone());
                self.acc(b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                if self.rg(a) {
                    let ga = g.zip_map(self.value(b), |x, y| x * y);
                    self.acc(a, ga);
                }
                if self.rg(b) {
                    let gb = g.zip_map(self.value(a), |x, y| x * y);
                    self.acc(b, gb);
                }
            }
            Op::Div(a, b) => {
                let vb = self.value(b).map(guard);
                if self.rg(a) {
                    let ga = g.zip_map(&vb, |x, y| x / y);
                    self.acc(a, ga);
                }
                if self.rg(b) {
                    let y = &self.nodes[i].value;
                    let gb = g.zip_map(y, |x, q| x * q).zip_map(&vb, |x, d| -x / d);
                    self.acc(b, gb);
                }
            }
            Op::AddRow(a, r) => {
                self.acc(a, g.clone());
                if self.rg(r) {
                    let mut gr = Matrix::zeros(1, g.cols());
                    for k in 0..g.rows() {
                        for (o, x) in gr.data_mut().iter_mut().zip(g.row(k)) {
                            *o += x;
                        }
                    }
                    self.acc(r, gr);
                }
            }
            Op::MulCol(a, c) => {
                if self.rg(a) {
                    let vc = self.value(c);
                    let mut ga = g.clone();
                    for k in 0..ga.rows() {
                        let s = vc.data()[k];
                        ga.row_mut(k).iter_mut().for_each(|x| *x *= s);
                    }
                    self.acc(a, ga);
                }
                if self.rg(c) {
                    let va = self.value(a);
                    let data = (0..g.rows()).map(|k| crate::matrix::dot(g.row(k), va.row(k))).collect();
                    self.acc(c, Matrix::from_vec(g.rows(), 1, data));
                }
            }
            Op::MulScalar(a, s) => {
                if self.rg(a) {
                    let k = self.value(s).item();
                    self.acc(a, g.map(|x| x * k));
                }
                if self.rg(s) {
                    let gs = crate::matrix::dot(g.data(), self.value(a).data());
                    self.acc(s, Matrix::scalar(gs));
                }
            }
            Op::Scale(a, f) => self.acc(a, g.map(|x| x * f)),
            Op::AddConst(a) => self.acc(a, g.clone()),
            Op::MulConst(a, m) => self.acc(a, g.zip_map(&m, |x, y| x * y)),
            Op::ScaleCols(a, w) => {
                let mut ga = g.clone();
                for k in 0..ga.rows() {
                    for (x, s) in ga.row_mut(k).iter_mut().zip(&w) {
                        *x *= s;
                    }
                }
                self.acc(a, ga);
            }
            Op::Unary(a, f) => {
                let ga = g.zip_map(self.value(a), |x, v| x * f.d1(v));
                self.acc(a, ga);
            }
            Op::UnaryDeriv(a, f) => {
                let ga = g.zip_map(self.value(a), |x, v| x * f.d2(v));
                self.acc(a, ga);
            }
            Op::RowSum(a) => {
                let (r, c) = self.shape(a);
                let mut ga = Matrix::zeros(r, c);
                for k in 0..r {
                    let s = g.data()[k];
                    ga.row_mut(k).iter_mut().for_each(|x| *x = s);
                }
                self.acc(a, ga);
            }
            Op::Sum(a) => {
                let (r, c) = self.shape(a);
                self.acc(a, Matrix::filled(r, c, g.item()));
            }
            Op::Mean(a) => {
                let (r, c) = self.shape(a);
                self.acc(a, Matrix::filled(r, c, g.item() / (r * c) as f64));
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for p in parts {
                    let (r, c) = self.shape(p);
                    if self.rg(p) {
                        let mut gp = Matrix::zeros(r, c);
                        for k in 0..r {
                            gp.row_mut(k).copy_from_slice(&g.row(k)[off..off + c]);
                        }
                        self.acc(p, gp);
                    }
                    off += c;
                }
            }
            Op::SliceCols(a, start) => {
                let (r, c) = self.shape(a);
                let mut ga = Matrix::zeros(r, c);
                for k in 0..r {
                    ga.row_mut(k)[start..start + g.cols()].copy_from_slice(g.row(k));
                }
                self.acc(a, ga);
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for p in parts {
                    let (r, c) = self.shape(p);
                    if self.rg(p) {
                        let gp = Matrix::from_vec(r, c, g.data()[off * c..(off + r) * c].to_vec());
                        self.acc(p, gp);
                    }
                    off += r;
                }
            }
            Op::SegmentSum(a, segments) => {
                let (r, c) = self.shape(a);
                let mut ga = Matrix::zeros(r, c);
                for (k, seg) in segments.iter().enumerate() {
                    for &j in seg {
                        for (o, x) in ga.row_mut(j).iter_mut().zip(g.row(k)) {
                            *o += x;
                        }
                    }
                }
                self.acc(a, ga);
            }
            Op::Softmax(a) => {
                let y = &self.nodes[i].value;
                let mut ga = Matrix::zeros(y.rows(), y.cols());
                for k in 0..y.rows() {
                    let dotk = crate::matrix::dot(g.row(k), y.row(k));
                    for ((o, gy), yy) in ga.row_mut(k).iter_mut().zip(g.row(k)).zip(y.row(k)) {
                        *o = yy * (gy - dotk);
                    }
                }
                self.acc(a, ga);
            }
            Op::CrossEntropy(logits, targets) => {
                let mut ga = softmax_rows(self.value(logits));
                let scale = g.item() / targets.len() as f64;
                for (k, &t) in targets.iter().enumerate() {
                    ga.row_mut(k)[t] -= 1.0;
                    ga.row_mut(k).iter_mut().for_each(|x| *x *= scale);
                }
                self.acc(logits, ga);
            }
        }
    }

    /// Adds the gradients of every parameter of `store` pulled into this graph
    /// to the store.
    pub fn accumulate_grads(&self, store: &mut ParamStore) {
        for &(id, t) in &self.params {
            if !store.owns(id) {
                continue;
            }
            if let Some(g) = self.grad(t) {
                store.get_mut(id).grad.add_assign(g);
            }
        }
    }
}

/// `[-1, 1, ..., 1]`: the diagonal of the Minkowski metric.
pub fn time_sign(cols: usize) -> Vec<f64> {
    let mut w = vec![1.0; cols];
    if let Some(first) = w.first_mut() {
        *first = -1.0;
    }
    w
}

pub(crate) fn softmax_rows(a: &Matrix) -> Matrix {
    let mut out = a.clone();
    for k in 0..out.rows() {
        let row = out.row_mut(k);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for x in row.iter_mut() {
            *x = (*x - m).exp();
            s += *x;
        }
        row.iter_mut().for_each(|x| *x /= s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_scale_gradient() {
        let mut g = Graph::new();
        let x = g.input(Matrix::scalar(2.0));
        let y = g.scale(x, 3.0);
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap().item(), 3.0);
    }

    #[test]
    fn squared_norm_of_identity_product() {
        let mut g = Graph::new();
        let x = g.input(Matrix::from_vec(3, 1, vec![1.0, -2.0, 0.5]));
        let w = g.constant(Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]));
        let wx = g.matmul(w, x).unwrap();
        let sq = g.square(wx);
        let y = g.sum(sq);
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap().data(), &[2.0, -4.0, 1.0]);
    }

    #[test]
    fn fan_out_accumulates() {
        // y = x*x + 3x through two separate paths.
        let mut g = Graph::new();
        let x = g.input(Matrix::scalar(1.5));
        let a = g.mul(x, x).unwrap();
        let b = g.scale(x, 3.0);
        let y = g.add(a, b).unwrap();
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap().item(), 2.0 * 1.5 + 3.0);
    }

    #[test]
    fn elementwise_derivative_examples() {
        let mut g = Graph::new();
        let x = g.input(Matrix::scalar(0.0));
        let y = g.sigmoid(x);
        g.backward(y).unwrap();
        assert_eq!(g.grad(x).unwrap().item(), 0.25);

        let mut g = Graph::new();
        let x = g.input(Matrix::scalar(2.0));
        let y = g.acosh(x);
        g.backward(y).unwrap();
        assert!((g.grad(x).unwrap().item() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lorentz_inner_gradient_is_signed_other() {
        let mut g = Graph::new();
        let x = g.input(Matrix::row_vector(&[1.3, 0.2, -0.4]));
        let y = g.constant(Matrix::row_vector(&[2.0, 0.5, 1.5]));
        let ip = g.lorentz_inner(x, y).unwrap();
        let s = g.sum(ip);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap().data(), &[-2.0, 0.5, 1.5]);
    }

    #[test]
    fn backward_rejects_non_scalar_root() {
        let mut g = Graph::new();
        let x = g.input(Matrix::row_vector(&[1.0, 2.0]));
        assert!(matches!(g.backward(x), Err(Error::NonScalarRoot((1, 2)))));
    }

    #[test]
    fn shape_mismatch_is_reported_at_build_time() {
        let mut g = Graph::new();
        let a = g.input(Matrix::zeros(2, 3));
        let b = g.input(Matrix::zeros(2, 2));
        assert!(matches!(g.add(a, b), Err(Error::Shape { op: "add", .. })));
        assert!(g.matmul(a, b).is_err());
        assert!(g.matmul_t(a, b).is_err());
    }

    #[test]
    fn cross_entropy_of_uniform_logits() {
        let mut g = Graph::new();
        let l = g.input(Matrix::zeros(2, 2));
        let ce = g.cross_entropy(l, &[0, 1]).unwrap();
        assert!((g.value(ce).item() - 2f64.ln()).abs() < 1e-15);
        g.backward(ce).unwrap();
        assert_eq!(g.grad(l).unwrap().data(), &[-0.25, 0.25, 0.25, -0.25]);
    }
}
