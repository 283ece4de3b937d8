//! Reverse-mode automatic differentiation over dense row-major matrices.
//!
//! A `Graph` is an append-only arena of nodes. Recording an operation
//! computes its value immediately, so by the time `backward` runs every
//! value is already in place and the arena order is a topological order.
//! `backward` walks the arena in reverse, accumulating gradients into every
//! node; leaves that the output does not depend on keep a zero gradient.
//!
//! All arithmetic is f64 and strictly sequential, so identical graphs
//! produce bit-identical values and gradients.

use crate::error::{Error, Result};

/// Lower clamp bound for values fed to `log`; the upper bound is `1 - PROB_FLOOR`.
/// Keeps log-likelihoods of probabilities finite.
pub const PROB_FLOOR: f64 = 1e-7;

// ───────────────────────── Tensor ─────────────────────────

/// Dense row-major matrix of f64. Vectors are 1xC or Rx1, scalars 1x1.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument {
                name: "tensor data",
                detail: format!("{} values for a {rows}x{cols} tensor", data.len()),
            });
        }
        Ok(Tensor { rows, cols, data })
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// self (m,k) * other (k,n).
    pub fn matmul(&self, other: &Tensor) -> Tensor {
        debug_assert_eq!(self.cols, other.rows);
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = Tensor::zeros(m, n);
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[p * n..(p + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += a * brow[j];
                }
            }
        }
        out
    }

    /// self (m,k) * other^T, where other is (n,k).
    pub fn matmul_nt(&self, other: &Tensor) -> Tensor {
        debug_assert_eq!(self.cols, other.cols);
        let (m, k, n) = (self.rows, self.cols, other.rows);
        let mut out = Tensor::zeros(m, n);
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            for j in 0..n {
                let brow = &other.data[j * k..(j + 1) * k];
                let mut acc = 0.0;
                for p in 0..k {
                    acc += arow[p] * brow[p];
                }
                out.data[i * n + j] = acc;
            }
        }
        out
    }

    /// self^T * other, where self is (k,m) and other is (k,n).
    pub fn matmul_tn(&self, other: &Tensor) -> Tensor {
        debug_assert_eq!(self.rows, other.rows);
        let (k, m, n) = (self.rows, self.cols, other.cols);
        let mut out = Tensor::zeros(m, n);
        for p in 0..k {
            let arow = &self.data[p * m..(p + 1) * m];
            let brow = &other.data[p * n..(p + 1) * n];
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

// ───────────────────────── Graph ─────────────────────────

/// Index of a node in its graph's arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    /// Externally supplied value; inputs, parameters and constants alike.
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product of same-shape matrices.
    Mul(NodeId, NodeId),
    /// Matrix plus a 1xC row vector added to every row.
    AddRow(NodeId, NodeId),
    Scale(NodeId, f64),
    Offset(NodeId),
    Sigmoid(NodeId),
    /// ln of the input clamped into [PROB_FLOOR, 1 - PROB_FLOOR].
    Log(NodeId),
    Exp(NodeId),
    Sum(NodeId),
    Mean(NodeId),
    RowSum(NodeId),
    ColSum(NodeId),
    ConcatCols(Vec<NodeId>),
    /// Per-row log(sum(exp(row))), computed with a max shift.
    LogSumExpRows(NodeId),
    /// Clamp into [PROB_FLOOR, 1 - PROB_FLOOR]; gradient passes through
    /// strictly inside the interval and is zero where the clamp engaged.
    ClampProb(NodeId),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    grad: Option<Tensor>,
}

/// Append-only computation graph. Build it through the operation methods,
/// then call [`Graph::backward`] on a scalar output node.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Record a leaf holding `value`. Gradients are written into every leaf
    /// by `backward`, so the same method serves parameters and constants.
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push_unchecked(Op::Leaf, value)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of the last `backward` output with respect to node `id`.
    /// None until `backward` has run.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].grad.as_ref()
    }

    fn push_unchecked(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            grad: None,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn push(&mut self, opname: &'static str, op: Op, value: Tensor) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                op: opname,
                node: self.nodes.len(),
            });
        }
        Ok(self.push_unchecked(op, value))
    }

    fn shape_err(&self, op: &'static str, detail: String) -> Error {
        Error::Shape {
            op,
            node: self.nodes.len(),
            detail,
        }
    }

    fn val(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (self.val(a), self.val(b));
        if va.cols != vb.rows {
            return Err(self.shape_err(
                "matmul",
                format!(
                    "{}x{} (node {}) * {}x{} (node {})",
                    va.rows, va.cols, a.0, vb.rows, vb.cols, b.0
                ),
            ));
        }
        let value = va.matmul(vb);
        self.push("matmul", Op::MatMul(a, b), value)
    }

    fn same_shape(&self, opname: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        let (va, vb) = (self.val(a), self.val(b));
        if va.rows != vb.rows || va.cols != vb.cols {
            return Err(self.shape_err(
                opname,
                format!(
                    "{}x{} (node {}) vs {}x{} (node {})",
                    va.rows, va.cols, a.0, vb.rows, vb.cols, b.0
                ),
            ));
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let (va, vb) = (self.val(a), self.val(b));
        let data = va.data.iter().zip(&vb.data).map(|(x, y)| x + y).collect();
        let value = Tensor {
            rows: va.rows,
            cols: va.cols,
            data,
        };
        self.push("add", Op::Add(a, b), value)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let (va, vb) = (self.val(a), self.val(b));
        let data = va.data.iter().zip(&vb.data).map(|(x, y)| x - y).collect();
        let value = Tensor {
            rows: va.rows,
            cols: va.cols,
            data,
        };
        self.push("sub", Op::Sub(a, b), value)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("mul", a, b)?;
        let (va, vb) = (self.val(a), self.val(b));
        let data = va.data.iter().zip(&vb.data).map(|(x, y)| x * y).collect();
        let value = Tensor {
            rows: va.rows,
            cols: va.cols,
            data,
        };
        self.push("mul", Op::Mul(a, b), value)
    }

    /// `a` (RxC) plus row vector `row` (1xC) broadcast over rows. The only
    /// broadcast this graph supports; used for layer biases.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (va, vrow) = (self.val(a), self.val(row));
        if vrow.rows != 1 || vrow.cols != va.cols {
            return Err(self.shape_err(
                "add_row",
                format!(
                    "{}x{} (node {}) + {}x{} (node {})",
                    va.rows, va.cols, a.0, vrow.rows, vrow.cols, row.0
                ),
            ));
        }
        let mut value = va.clone();
        for r in 0..value.rows {
            let off = r * value.cols;
            for c in 0..value.cols {
                value.data[off + c] += vrow.data[c];
            }
        }
        self.push("add_row", Op::AddRow(a, row), value)
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        let va = self.val(a);
        let value = Tensor {
            rows: va.rows,
            cols: va.cols,
            data: va.data.iter().map(|x| x * factor).collect(),
        };
        self.push("scale", Op::Scale(a, factor), value)
    }

    pub fn offset(&mut self, a: NodeId, constant: f64) -> Result<NodeId> {
        let va = self.val(a);
        let value = Tensor {
            rows: va.rows,
            cols: va.cols,
            data: va.data.iter().map(|x| x + constant).collect(),
        };
        self.push("offset", Op::Offset(a), value)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.val(a);
        let value = Tensor {
            rows: va.rows,
            cols: va.cols,
            data: va.data.iter().map(|&x| sigmoid_scalar(x)).collect(),
        };
        self.push("sigmoid", Op::Sigmoid(a), value)
    }

    pub fn log(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.val(a);
        let value = Tensor {
            rows: va.rows,
            cols: va.cols,
            data: va.data.iter().map(|&x| clamp_prob(x).ln()).collect(),
        };
        self.push("log", Op::Log(a), value)
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.val(a);
        let value = Tensor {
            rows: va.rows,
            cols: va.cols,
            data: va.data.iter().map(|x| x.exp()).collect(),
        };
        self.push("exp", Op::Exp(a), value)
    }

    pub fn clamp_prob(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.val(a);
        let value = Tensor {
            rows: va.rows,
            cols: va.cols,
            data: va.data.iter().map(|&x| clamp_prob(x)).collect(),
        };
        self.push("clamp_prob", Op::ClampProb(a), value)
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        let total: f64 = self.val(a).data.iter().sum();
        self.push("sum", Op::Sum(a), Tensor::scalar(total))
    }

    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.val(a);
        let total: f64 = va.data.iter().sum();
        let value = Tensor::scalar(total / va.len() as f64);
        self.push("mean", Op::Mean(a), value)
    }

    pub fn row_sum(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.val(a);
        let mut value = Tensor::zeros(va.rows, 1);
        for r in 0..va.rows {
            value.data[r] = va.row(r).iter().sum();
        }
        self.push("row_sum", Op::RowSum(a), value)
    }

    pub fn col_sum(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.val(a);
        let mut value = Tensor::zeros(1, va.cols);
        for r in 0..va.rows {
            for c in 0..va.cols {
                value.data[c] += va.at(r, c);
            }
        }
        self.push("col_sum", Op::ColSum(a), value)
    }

    /// Concatenate matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(self.shape_err("concat_cols", "no inputs".into()));
        }
        let rows = self.val(parts[0]).rows;
        let mut cols = 0;
        for &p in parts {
            let v = self.val(p);
            if v.rows != rows {
                return Err(self.shape_err(
                    "concat_cols",
                    format!("node {} has {} rows, expected {rows}", p.0, v.rows),
                ));
            }
            cols += v.cols;
        }
        let mut value = Tensor::zeros(rows, cols);
        let mut base = 0;
        for &p in parts {
            let v = self.val(p);
            for r in 0..rows {
                for c in 0..v.cols {
                    *value.at_mut(r, base + c) = v.at(r, c);
                }
            }
            base += v.cols;
        }
        let op = Op::ConcatCols(parts.to_vec());
        self.push("concat_cols", op, value)
    }

    pub fn log_sum_exp_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let va = self.val(a);
        if va.cols == 0 {
            return Err(self.shape_err("log_sum_exp_rows", "zero columns".into()));
        }
        let mut value = Tensor::zeros(va.rows, 1);
        for r in 0..va.rows {
            value.data[r] = log_sum_exp(va.row(r));
        }
        self.push("log_sum_exp_rows", Op::LogSumExpRows(a), value)
    }

    /// Reverse accumulation from scalar node `output`. Every node receives a
    /// gradient tensor; contributions add up, so reused nodes are handled.
    pub fn backward(&mut self, output: NodeId) -> Result<()> {
        let out = &self.nodes[output.0].value;
        if out.rows != 1 || out.cols != 1 {
            return Err(Error::NonScalarOutput {
                node: output.0,
                rows: out.rows,
                cols: out.cols,
            });
        }
        let mut grads: Vec<Tensor> = self
            .nodes
            .iter()
            .map(|n| Tensor::zeros(n.value.rows, n.value.cols))
            .collect();
        grads[output.0].data[0] = 1.0;

        for i in (0..=output.0).rev() {
            let g = std::mem::replace(&mut grads[i], Tensor::zeros(0, 0));
            self.propagate(i, &g, &mut grads);
            grads[i] = g;
        }

        for (node, grad) in self.nodes.iter_mut().zip(grads) {
            node.grad = Some(grad);
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &Tensor, grads: &mut [Tensor]) {
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let da = g.matmul_nt(&self.nodes[b.0].value);
                let db = self.nodes[a.0].value.matmul_tn(g);
                add_into(&mut grads[a.0], &da);
                add_into(&mut grads[b.0], &db);
            }
            Op::Add(a, b) => {
                add_into(&mut grads[a.0], g);
                add_into(&mut grads[b.0], g);
            }
            Op::Sub(a, b) => {
                add_into(&mut grads[a.0], g);
                sub_into(&mut grads[b.0], g);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                for (k, gv) in g.data.iter().enumerate() {
                    grads[a.0].data[k] += gv * vb.data[k];
                    grads[b.0].data[k] += gv * va.data[k];
                }
            }
            Op::AddRow(a, row) => {
                add_into(&mut grads[a.0], g);
                let cols = g.cols;
                for r in 0..g.rows {
                    for c in 0..cols {
                        grads[row.0].data[c] += g.data[r * cols + c];
                    }
                }
            }
            Op::Scale(a, factor) => {
                for (k, gv) in g.data.iter().enumerate() {
                    grads[a.0].data[k] += gv * factor;
                }
            }
            Op::Offset(a) => add_into(&mut grads[a.0], g),
            Op::Sigmoid(a) => {
                // d/dx sigmoid = s * (1 - s), from the stored output.
                let s = &self.nodes[i].value;
                for (k, gv) in g.data.iter().enumerate() {
                    let sv = s.data[k];
                    grads[a.0].data[k] += gv * sv * (1.0 - sv);
                }
            }
            Op::Log(a) => {
                // Zero gradient where the clamp engaged.
                let x = &self.nodes[a.0].value;
                for (k, gv) in g.data.iter().enumerate() {
                    let xv = x.data[k];
                    if xv > PROB_FLOOR && xv < 1.0 - PROB_FLOOR {
                        grads[a.0].data[k] += gv / xv;
                    }
                }
            }
            Op::Exp(a) => {
                let e = &self.nodes[i].value;
                for (k, gv) in g.data.iter().enumerate() {
                    grads[a.0].data[k] += gv * e.data[k];
                }
            }
            Op::ClampProb(a) => {
                let x = &self.nodes[a.0].value;
                for (k, gv) in g.data.iter().enumerate() {
                    let xv = x.data[k];
                    if xv > PROB_FLOOR && xv < 1.0 - PROB_FLOOR {
                        grads[a.0].data[k] += gv;
                    }
                }
            }
            Op::Sum(a) => {
                let gv = g.data[0];
                for slot in grads[a.0].data.iter_mut() {
                    *slot += gv;
                }
            }
            Op::Mean(a) => {
                let n = self.nodes[a.0].value.len() as f64;
                let gv = g.data[0] / n;
                for slot in grads[a.0].data.iter_mut() {
                    *slot += gv;
                }
            }
            Op::RowSum(a) => {
                let cols = self.nodes[a.0].value.cols;
                for r in 0..g.rows {
                    let gv = g.data[r];
                    let dst = &mut grads[a.0].data[r * cols..(r + 1) * cols];
                    for slot in dst {
                        *slot += gv;
                    }
                }
            }
            Op::ColSum(a) => {
                let src = &self.nodes[a.0].value;
                for r in 0..src.rows {
                    for c in 0..src.cols {
                        grads[a.0].data[r * src.cols + c] += g.data[c];
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut base = 0;
                for &p in parts {
                    let v = &self.nodes[p.0].value;
                    for r in 0..v.rows {
                        for c in 0..v.cols {
                            grads[p.0].data[r * v.cols + c] += g.at(r, base + c);
                        }
                    }
                    base += v.cols;
                }
            }
            Op::LogSumExpRows(a) => {
                // d lse / d x_c = exp(x_c - lse), the softmax weight.
                let x = &self.nodes[a.0].value;
                let lse = &self.nodes[i].value;
                for r in 0..x.rows {
                    let gv = g.data[r];
                    let l = lse.data[r];
                    for c in 0..x.cols {
                        grads[a.0].data[r * x.cols + c] += gv * (x.at(r, c) - l).exp();
                    }
                }
            }
        }
    }
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn clamp_prob(x: f64) -> f64 {
    x.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Max-shifted log(sum(exp(xs))); xs must be non-empty and finite.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

fn add_into(dst: &mut Tensor, src: &Tensor) {
    for (d, s) in dst.data.iter_mut().zip(&src.data) {
        *d += s;
    }
}

fn sub_into(dst: &mut Tensor, src: &Tensor) {
    for (d, s) in dst.data.iter_mut().zip(&src.data) {
        *d -= s;
    }
}

// ───────────────────────── Gradient checking ─────────────────────────

/// Compares the reverse-mode gradient of `f` at `x` against central finite
/// differences with step `h`, returning the worst relative error
/// |analytic - numeric| / max(1, |numeric|) over all coordinates.
///
/// `f` must build a scalar from the single input node it is given; it is
/// re-invoked on a fresh graph for every perturbed evaluation.
pub fn grad_check<F>(f: F, x: &Tensor, h: f64) -> Result<f64>
where
    F: Fn(&mut Graph, NodeId) -> Result<NodeId>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument {
            name: "step size",
            detail: format!("h = {h} must be positive"),
        });
    }

    let eval = |pt: &Tensor| -> Result<f64> {
        let mut g = Graph::new();
        let xid = g.input(pt.clone());
        let out = f(&mut g, xid)?;
        let v = g.value(out);
        if v.rows != 1 || v.cols != 1 {
            return Err(Error::NonScalarOutput {
                node: out.index(),
                rows: v.rows,
                cols: v.cols,
            });
        }
        Ok(v.data[0])
    };

    let mut g = Graph::new();
    let xid = g.input(x.clone());
    let out = f(&mut g, xid)?;
    g.backward(out)?;
    let analytic = g.grad(xid).expect("backward populates gradients").clone();

    let mut worst = 0.0_f64;
    for k in 0..x.len() {
        let mut plus = x.clone();
        plus.data[k] += h;
        let mut minus = x.clone();
        minus.data[k] -= h;
        let slope = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
        if !slope.is_finite() {
            return Err(Error::NonFinite {
                op: "grad_check",
                node: out.index(),
            });
        }
        let rel = (analytic.data[k] - slope).abs() / slope.abs().max(1.0);
        worst = worst.max(rel);
    }
    Ok(worst)
}

// ───────────────────────── Tests ─────────────────────────
