use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::ops::serial::spmm_csr_dense;
use nalgebra_sparse::ops::Op as SpOp;
use nalgebra_sparse::CsrMatrix;
use rand::Rng as _;

use crate::error::AutodiffError;
use crate::rng::Rng;

type Result<T> = std::result::Result<T, AutodiffError>;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SparseMatMul(Arc<CsrMatrix<f64>>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    ScalarMul(Var, f64),
    Mul(Var, Var),
    Div(Var, Var),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    Relu(Var),
    LogSoftmax(Var),
    Sigmoid(Var),
    Square(Var),
    Sum(Var),
    Mean(Var),
    /// Mask already carries the inverted-dropout scale.
    Dropout(Var, DMatrix<f64>),
}

#[derive(Debug, Clone)]
struct Node {
    value: DMatrix<f64>,
    op: Op,
    requires_grad: bool,
}

/// Record of forward computations supporting one reverse pass.
///
/// Values are created with [`Tape::param`] (differentiable leaves) or
/// [`Tape::constant`], combined with the primitive methods, and a scalar
/// result is differentiated with [`Tape::backward`]. Gradients of leaves are
/// read back with [`Tape::grad`].
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<DMatrix<f64>>>,
    consumed: bool,
}

fn shape(m: &DMatrix<f64>) -> (usize, usize) {
    m.shape()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: DMatrix<f64>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Differentiable leaf.
    pub fn param(&mut self, value: DMatrix<f64>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: DMatrix<f64>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &DMatrix<f64> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        shape(&self.nodes[v.0].value)
    }

    /// Scalar value of a 1x1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[(0, 0)]
    }

    /// Gradient of the last backward pass with respect to a differentiable
    /// leaf (or any node that required a gradient). `None` before backward.
    pub fn grad(&self, v: Var) -> Option<&DMatrix<f64>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (l, r) = (self.shape(a), self.shape(b));
        if l != r {
            return Err(AutodiffError::ShapeMismatch {
                op,
                left: l,
                right: r,
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (l, r) = (self.shape(a), self.shape(b));
        if l.1 != r.0 {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                left: l,
                right: r,
            });
        }
        let value = self.value(a) * self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// Sparse-times-dense product `S x`.
    pub fn sparse_matmul(&mut self, s: &Arc<CsrMatrix<f64>>, x: Var) -> Result<Var> {
        let r = self.shape(x);
        if s.ncols() != r.0 {
            return Err(AutodiffError::ShapeMismatch {
                op: "sparse_matmul",
                left: (s.nrows(), s.ncols()),
                right: r,
            });
        }
        let mut value = DMatrix::zeros(s.nrows(), r.1);
        spmm_csr_dense(
            0.0,
            &mut value,
            1.0,
            SpOp::NoOp(s.as_ref()),
            SpOp::NoOp(self.value(x)),
        );
        let rg = self.rg(x);
        Ok(self.push(value, Op::SparseMatMul(Arc::clone(s), x), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.value(a) + self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    /// Adds the `1 x d` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (l, r) = (self.shape(a), self.shape(b));
        if r.0 != 1 || r.1 != l.1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_row",
                left: l,
                right: r,
            });
        }
        let mut value = self.value(a).clone();
        let row = self.value(b).row(0).clone_owned();
        for mut r in value.row_iter_mut() {
            r += &row;
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::AddRow(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a) - self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    pub fn scalar_mul(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a) * c;
        let rg = self.rg(a);
        self.push(value, Op::ScalarMul(a, c), rg)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("elementwise_mul", a, b)?;
        let value = self.value(a).component_mul(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    /// Elementwise quotient.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("elementwise_div", a, b)?;
        let value = self.value(a).component_div(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Div(a, b), rg))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(AutodiffError::ShapeMismatch {
                op: "concat_cols",
                left: (0, 0),
                right: (0, 0),
            });
        };
        let rows = self.shape(first).0;
        for &p in parts {
            if self.shape(p).0 != rows {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat_cols",
                    left: self.shape(first),
                    right: self.shape(p),
                });
            }
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut value = DMatrix::zeros(rows, cols);
        let mut c0 = 0;
        for &p in parts {
            let v = self.value(p);
            value.columns_mut(c0, v.ncols()).copy_from(v);
            c0 += v.ncols();
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Rows `idx[0], idx[1], ...` of `a`, repetitions allowed.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let (rows, cols) = self.shape(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
            return Err(AutodiffError::RowOutOfRange { index: bad, rows });
        }
        let src = self.value(a);
        let value = DMatrix::from_fn(idx.len(), cols, |r, c| src[(idx[r], c)]);
        let rg = self.rg(a);
        Ok(self.push(value, Op::GatherRows(a, idx.to_vec()), rg))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        let rg = self.rg(a);
        self.push(value, Op::Relu(a), rg)
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for mut row in value.row_iter_mut() {
            let max = row.max();
            let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
            row.add_scalar_mut(-lse);
        }
        let rg = self.rg(a);
        self.push(value, Op::LogSoftmax(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let rg = self.rg(a);
        self.push(value, Op::Sigmoid(a), rg)
    }

    /// Elementwise square.
    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x * x);
        let rg = self.rg(a);
        self.push(value, Op::Square(a), rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = DMatrix::from_element(1, 1, self.value(a).sum());
        let rg = self.rg(a);
        self.push(value, Op::Sum(a), rg)
    }

    /// Mean of all entries; 0 for an empty matrix.
    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let mean = if v.is_empty() {
            0.0
        } else {
            v.sum() / v.len() as f64
        };
        let rg = self.rg(a);
        self.push(DMatrix::from_element(1, 1, mean), Op::Mean(a), rg)
    }

    /// Inverted dropout with keep probability `1 - rate`. Draws the mask from
    /// `rng`; identity when `rate == 0`.
    pub fn dropout(&mut self, a: Var, rate: f64, rng: &mut Rng) -> Var {
        if rate <= 0.0 {
            return a;
        }
        let (r, c) = self.shape(a);
        let scale = 1.0 / (1.0 - rate);
        let mask = DMatrix::from_fn(r, c, |_, _| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                scale
            }
        });
        let value = self.value(a).component_mul(&mask);
        let rg = self.rg(a);
        self.push(value, Op::Dropout(a, mask), rg)
    }

    /// Reverse pass from the scalar `loss`. Can be run once per tape.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.consumed {
            return Err(AutodiffError::TapeConsumed);
        }
        let s = self.shape(loss);
        if s != (1, 1) {
            return Err(AutodiffError::NonScalarLoss { shape: s });
        }
        self.consumed = true;
        let mut grads: Vec<Option<DMatrix<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(DMatrix::from_element(1, 1, 1.0));
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    fn propagate(&self, i: usize, g: &DMatrix<f64>, grads: &mut [Option<DMatrix<f64>>]) {
        let node = &self.nodes[i];
        let mut acc = |v: Var, d: DMatrix<f64>| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => *existing += d,
                slot => *slot = Some(d),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    acc(*a, g * self.value(*b).transpose());
                }
                if self.rg(*b) {
                    acc(*b, self.value(*a).transpose() * g);
                }
            }
            Op::SparseMatMul(s, x) => {
                let mut d = DMatrix::zeros(s.ncols(), g.ncols());
                spmm_csr_dense(0.0, &mut d, 1.0, SpOp::Transpose(s.as_ref()), SpOp::NoOp(g));
                acc(*x, d);
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::AddRow(a, b) => {
                acc(*a, g.clone());
                let row = DMatrix::from_fn(1, g.ncols(), |_, c| g.column(c).sum());
                acc(*b, row);
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, -g);
            }
            Op::ScalarMul(a, c) => acc(*a, g * *c),
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    acc(*a, g.component_mul(self.value(*b)));
                }
                if self.rg(*b) {
                    acc(*b, g.component_mul(self.value(*a)));
                }
            }
            Op::Div(a, b) => {
                let y = self.value(*b);
                if self.rg(*a) {
                    acc(*a, g.component_div(y));
                }
                if self.rg(*b) {
                    acc(*b, -g.component_mul(&node.value).component_div(y));
                }
            }
            Op::ConcatCols(parts) => {
                let mut c0 = 0;
                for &p in parts {
                    let w = self.shape(p).1;
                    acc(p, g.columns(c0, w).clone_owned());
                    c0 += w;
                }
            }
            Op::GatherRows(a, idx) => {
                let (rows, cols) = self.shape(*a);
                let mut d = DMatrix::zeros(rows, cols);
                for (r, &src) in idx.iter().enumerate() {
                    for c in 0..cols {
                        d[(src, c)] += g[(r, c)];
                    }
                }
                acc(*a, d);
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                acc(*a, g.zip_map(x, |g, x| if x > 0.0 { g } else { 0.0 }));
            }
            Op::LogSoftmax(a) => {
                let y = &node.value;
                let mut d = g.clone();
                for r in 0..d.nrows() {
                    let gs = g.row(r).sum();
                    for c in 0..d.ncols() {
                        d[(r, c)] -= y[(r, c)].exp() * gs;
                    }
                }
                acc(*a, d);
            }
            Op::Sigmoid(a) => acc(*a, g.zip_map(&node.value, |g, s| g * s * (1.0 - s))),
            Op::Square(a) => acc(*a, g.zip_map(self.value(*a), |g, x| 2.0 * x * g)),
            Op::Sum(a) => {
                let (r, c) = self.shape(*a);
                acc(*a, DMatrix::from_element(r, c, g[(0, 0)]));
            }
            Op::Mean(a) => {
                let (r, c) = self.shape(*a);
                let k = (r * c).max(1) as f64;
                acc(*a, DMatrix::from_element(r, c, g[(0, 0)] / k));
            }
            Op::Dropout(a, mask) => acc(*a, g.component_mul(mask)),
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    #[test]
    fn matmul_value() {
        let mut t = Tape::new();
        let a = t.constant(m(1, 2, &[1.0, 2.0]));
        let b = t.constant(m(2, 1, &[3.0, 4.0]));
        let c = t.matmul(a, b).unwrap();
        assert_eq!(t.scalar(c), 11.0);
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let mut t = Tape::new();
        let a = t.constant(DMatrix::zeros(2, 3));
        let b = t.constant(DMatrix::zeros(2, 3));
        let err = t.matmul(a, b).unwrap_err();
        assert_eq!(
            err,
            AutodiffError::ShapeMismatch {
                op: "matmul",
                left: (2, 3),
                right: (2, 3)
            }
        );
        assert!(err.to_string().contains("(2, 3) and (2, 3)"));
    }

    #[test]
    fn relu_gradient_gate() {
        let mut t = Tape::new();
        let x = t.param(m(1, 2, &[-1.0, 2.0]));
        let r = t.relu(x);
        let s = t.sum(r);
        t.backward(s).unwrap();
        assert_eq!(t.grad(x).unwrap(), &m(1, 2, &[0.0, 1.0]));
    }

    #[test]
    fn sum_gives_ones_and_mean_square_gives_2w() {
        let mut t = Tape::new();
        let w = t.param(m(2, 2, &[1.0, -2.0, 3.0, 0.5]));
        let s = t.sum(w);
        t.backward(s).unwrap();
        assert_eq!(t.grad(w).unwrap(), &DMatrix::from_element(2, 2, 1.0));

        let mut t = Tape::new();
        let w = t.param(m(1, 1, &[3.0]));
        let sq = t.square(w);
        let l = t.mean(sq);
        t.backward(l).unwrap();
        assert_eq!(t.grad(w).unwrap()[(0, 0)], 6.0);
    }

    #[test]
    fn second_backward_is_rejected() {
        let mut t = Tape::new();
        let w = t.param(m(1, 1, &[1.0]));
        let s = t.sum(w);
        t.backward(s).unwrap();
        assert_eq!(t.backward(s), Err(AutodiffError::TapeConsumed));
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut t = Tape::new();
        let w = t.param(DMatrix::zeros(2, 1));
        assert_eq!(
            t.backward(w),
            Err(AutodiffError::NonScalarLoss { shape: (2, 1) })
        );
    }

    #[test]
    fn log_softmax_rows_normalize() {
        let mut t = Tape::new();
        let x = t.constant(m(2, 3, &[1.0, 2.0, 3.0, -100.0, 0.0, 100.0]));
        let y = t.log_softmax(x);
        for row in t.value(y).row_iter() {
            let total: f64 = row.iter().map(|v| v.exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_accumulate_over_reuse() {
        let mut t = Tape::new();
        let x = t.param(m(1, 1, &[2.0]));
        let y = t.add(x, x).unwrap();
        let z = t.mul(y, x).unwrap();
        t.backward(z).unwrap();
        // z = 2x^2
        assert_eq!(t.grad(x).unwrap()[(0, 0)], 8.0);
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut t = Tape::new();
        let c = t.constant(m(1, 1, &[2.0]));
        let w = t.param(m(1, 1, &[3.0]));
        let p = t.mul(c, w).unwrap();
        t.backward(p).unwrap();
        assert!(t.grad(c).is_none());
        assert_eq!(t.grad(w).unwrap()[(0, 0)], 2.0);
    }

    #[test]
    fn gather_rows_scatters_back() {
        let mut t = Tape::new();
        let x = t.param(m(3, 1, &[1.0, 2.0, 3.0]));
        let g = t.gather_rows(x, &[2, 0, 2]).unwrap();
        assert_eq!(t.value(g).as_slice(), &[3.0, 1.0, 3.0]);
        let s = t.sum(g);
        t.backward(s).unwrap();
        assert_eq!(t.grad(x).unwrap().as_slice(), &[1.0, 0.0, 2.0]);
        assert!(t.gather_rows(x, &[3]).is_err());
    }

    #[test]
    fn eval_dropout_is_identity() {
        let mut rng = crate::rng::SeedStream::new(1).substream("dropout");
        let mut t = Tape::new();
        let x = t.param(DMatrix::from_element(4, 4, 1.0));
        assert_eq!(t.dropout(x, 0.0, &mut rng), x);
        let d = t.dropout(x, 0.5, &mut rng);
        assert!(t.value(d).iter().all(|&v| v == 0.0 || v == 2.0));
    }
}
