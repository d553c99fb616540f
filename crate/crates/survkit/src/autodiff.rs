//! Tape-based reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! A [`Tape`] records every operation of a forward computation as a [`Node`]
//! holding a value matrix, a gradient accumulator of the same shape, and the
//! indices of its inputs. Scalars are 1x1 matrices. Calling [`Tape::backward`]
//! on a scalar output propagates adjoints to every node in reverse insertion
//! order, which visits each node after all of its consumers.
//!
//! The operation set is the closure needed by the survival losses and the
//! feed-forward network: elementwise arithmetic, matrix multiply, `exp`/`log`,
//! reductions, `relu`, row gather/concat, and a masked `logsumexp` so that
//! likelihood terms stay on the logarithmic scale. There is no broadcasting
//! beyond scalar-times-matrix; every other shape mismatch is an error, which
//! keeps the backward rules auditable.
//!
//! Gradients accumulate by addition into zero-initialized adjoints: running
//! [`Tape::backward`] twice doubles them, and [`Tape::reset_adjoints`] clears
//! them explicitly. The `relu` derivative at exactly zero is defined as zero.
//!
//! A tape is a single-threaded construction context. Distinct tapes may run
//! concurrently on different threads; nodes are never shared across tapes.

use std::cell::RefCell;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    MatMul(usize, usize),
    Exp(usize),
    Log(usize),
    Neg(usize),
    Sum(usize),
    Mean(usize),
    Relu(usize),
    ClampMax(usize, f64),
    GatherRows(usize, Vec<usize>),
    ConcatRows(Vec<usize>),
    LogSumExp(usize, Vec<bool>),
}

#[derive(Debug)]
struct NodeData {
    value: Array2<f64>,
    adjoint: Array2<f64>,
    op: Op,
}

/// Records a forward computation for reverse-mode differentiation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<NodeData>>,
}

fn shape_err(what: impl Into<String>) -> Error {
    Error::ShapeMismatch { what: what.into() }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of nodes recorded so far.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    fn push(&self, value: Array2<f64>, op: Op) -> Node {
        let mut nodes = self.nodes.borrow_mut();
        let adjoint = Array2::zeros(value.raw_dim());
        nodes.push(NodeData { value, adjoint, op });
        Node(nodes.len() - 1)
    }

    /// Inserts a gradient-tracked leaf holding `value`.
    pub fn leaf(&self, value: Array2<f64>) -> Node {
        self.push(value, Op::Leaf)
    }

    /// Inserts a leaf whose adjoint is never read; semantically a constant.
    pub fn constant(&self, value: Array2<f64>) -> Node {
        self.leaf(value)
    }

    /// A 1x1 constant.
    pub fn scalar(&self, value: f64) -> Node {
        self.constant(Array2::from_elem((1, 1), value))
    }

    /// An n x 1 column constant.
    pub fn column(&self, values: &[f64]) -> Node {
        self.constant(column_matrix(values))
    }

    /// Copy of a node's value matrix.
    pub fn value(&self, node: Node) -> Array2<f64> {
        self.nodes.borrow()[node.0].value.clone()
    }

    /// Value of a 1x1 node.
    pub fn scalar_value(&self, node: Node) -> f64 {
        self.nodes.borrow()[node.0].value[(0, 0)]
    }

    /// Copy of a node's accumulated adjoint.
    pub fn adjoint(&self, node: Node) -> Array2<f64> {
        self.nodes.borrow()[node.0].adjoint.clone()
    }

    pub fn shape(&self, node: Node) -> (usize, usize) {
        let nodes = self.nodes.borrow();
        let d = nodes[node.0].value.dim();
        d
    }

    /// Zeroes every adjoint on the tape.
    pub fn reset_adjoints(&self) {
        for n in self.nodes.borrow_mut().iter_mut() {
            n.adjoint.fill(0.0);
        }
    }

    pub fn add(&self, a: Node, b: Node) -> Result<Node> {
        let value = {
            let nodes = self.nodes.borrow();
            let (va, vb) = (&nodes[a.0].value, &nodes[b.0].value);
            if va.dim() != vb.dim() {
                return Err(shape_err(format!("add {:?} vs {:?}", va.dim(), vb.dim())));
            }
            va + vb
        };
        Ok(self.push(value, Op::Add(a.0, b.0)))
    }

    pub fn sub(&self, a: Node, b: Node) -> Result<Node> {
        let value = {
            let nodes = self.nodes.borrow();
            let (va, vb) = (&nodes[a.0].value, &nodes[b.0].value);
            if va.dim() != vb.dim() {
                return Err(shape_err(format!("sub {:?} vs {:?}", va.dim(), vb.dim())));
            }
            va - vb
        };
        Ok(self.push(value, Op::Sub(a.0, b.0)))
    }

    /// Elementwise product. Same shape, or either side a 1x1 scalar.
    pub fn mul(&self, a: Node, b: Node) -> Result<Node> {
        let value = {
            let nodes = self.nodes.borrow();
            let (va, vb) = (&nodes[a.0].value, &nodes[b.0].value);
            if va.dim() == vb.dim() {
                va * vb
            } else if va.dim() == (1, 1) {
                vb * va[(0, 0)]
            } else if vb.dim() == (1, 1) {
                va * vb[(0, 0)]
            } else {
                return Err(shape_err(format!("mul {:?} vs {:?}", va.dim(), vb.dim())));
            }
        };
        Ok(self.push(value, Op::Mul(a.0, b.0)))
    }

    pub fn matmul(&self, a: Node, b: Node) -> Result<Node> {
        let value = {
            let nodes = self.nodes.borrow();
            let (va, vb) = (&nodes[a.0].value, &nodes[b.0].value);
            if va.ncols() != vb.nrows() {
                return Err(shape_err(format!(
                    "matmul {:?} vs {:?}",
                    va.dim(),
                    vb.dim()
                )));
            }
            va.dot(vb)
        };
        Ok(self.push(value, Op::MatMul(a.0, b.0)))
    }

    pub fn exp(&self, a: Node) -> Result<Node> {
        let value = self.nodes.borrow()[a.0].value.mapv(f64::exp);
        Ok(self.push(value, Op::Exp(a.0)))
    }

    /// Natural log; every entry must be strictly positive.
    pub fn log(&self, a: Node) -> Result<Node> {
        let value = {
            let nodes = self.nodes.borrow();
            let va = &nodes[a.0].value;
            if va.iter().any(|&v| v <= 0.0) {
                return Err(Error::DomainError {
                    what: "log of non-positive value".into(),
                });
            }
            va.mapv(f64::ln)
        };
        Ok(self.push(value, Op::Log(a.0)))
    }

    pub fn neg(&self, a: Node) -> Result<Node> {
        let value = self.nodes.borrow()[a.0].value.mapv(|v| -v);
        Ok(self.push(value, Op::Neg(a.0)))
    }

    /// Sum of all entries, as a 1x1 node.
    pub fn sum(&self, a: Node) -> Result<Node> {
        let value = Array2::from_elem((1, 1), self.nodes.borrow()[a.0].value.sum());
        Ok(self.push(value, Op::Sum(a.0)))
    }

    /// Mean of all entries, as a 1x1 node.
    pub fn mean(&self, a: Node) -> Result<Node> {
        let value = {
            let nodes = self.nodes.borrow();
            let va = &nodes[a.0].value;
            Array2::from_elem((1, 1), va.sum() / va.len() as f64)
        };
        Ok(self.push(value, Op::Mean(a.0)))
    }

    /// Rectified linear unit; the derivative at exactly zero is zero.
    pub fn relu(&self, a: Node) -> Result<Node> {
        let value = self.nodes.borrow()[a.0].value.mapv(|v| v.max(0.0));
        Ok(self.push(value, Op::Relu(a.0)))
    }

    /// `min(x, cap)` elementwise; derivative is zero where the cap is active.
    pub fn clamp_max(&self, a: Node, cap: f64) -> Result<Node> {
        let value = self.nodes.borrow()[a.0].value.mapv(|v| v.min(cap));
        Ok(self.push(value, Op::ClampMax(a.0, cap)))
    }

    /// Selects rows by index (duplicates allowed; gradients accumulate).
    pub fn gather_rows(&self, a: Node, rows: Vec<usize>) -> Result<Node> {
        let value = {
            let nodes = self.nodes.borrow();
            let va = &nodes[a.0].value;
            if let Some(&bad) = rows.iter().find(|&&r| r >= va.nrows()) {
                return Err(shape_err(format!(
                    "gather row {bad} out of bounds for {} rows",
                    va.nrows()
                )));
            }
            let mut out = Array2::zeros((rows.len(), va.ncols()));
            for (r, &src) in rows.iter().enumerate() {
                out.row_mut(r).assign(&va.row(src));
            }
            out
        };
        Ok(self.push(value, Op::GatherRows(a.0, rows)))
    }

    /// Stacks nodes vertically; all must have the same column count.
    pub fn concat_rows(&self, parts: &[Node]) -> Result<Node> {
        if parts.is_empty() {
            return Err(shape_err("concat of zero parts"));
        }
        let value = {
            let nodes = self.nodes.borrow();
            let ncols = nodes[parts[0].0].value.ncols();
            let total: usize = parts.iter().map(|p| nodes[p.0].value.nrows()).sum();
            let mut out = Array2::zeros((total, ncols));
            let mut at = 0;
            for p in parts {
                let v = &nodes[p.0].value;
                if v.ncols() != ncols {
                    return Err(shape_err(format!(
                        "concat col mismatch {} vs {}",
                        v.ncols(),
                        ncols
                    )));
                }
                for r in 0..v.nrows() {
                    out.row_mut(at + r).assign(&v.row(r));
                }
                at += v.nrows();
            }
            out
        };
        Ok(self.push(value, Op::ConcatRows(parts.iter().map(|p| p.0).collect())))
    }

    /// `log sum exp` over the masked entries of a single-column node,
    /// computed max-shifted so large inputs cannot overflow.
    pub fn logsumexp_masked(&self, a: Node, mask: Vec<bool>) -> Result<Node> {
        let value = {
            let nodes = self.nodes.borrow();
            let va = &nodes[a.0].value;
            if va.ncols() != 1 {
                return Err(shape_err("logsumexp expects an n x 1 column"));
            }
            if mask.len() != va.nrows() {
                return Err(shape_err(format!(
                    "logsumexp mask length {} vs {} rows",
                    mask.len(),
                    va.nrows()
                )));
            }
            let mut m = f64::NEG_INFINITY;
            for (i, &keep) in mask.iter().enumerate() {
                if keep {
                    m = m.max(va[(i, 0)]);
                }
            }
            if m == f64::NEG_INFINITY {
                return Err(Error::DomainError {
                    what: "logsumexp over an empty mask".into(),
                });
            }
            let s: f64 = mask
                .iter()
                .enumerate()
                .filter(|(_, &keep)| keep)
                .map(|(i, _)| (va[(i, 0)] - m).exp())
                .sum();
            Array2::from_elem((1, 1), m + s.ln())
        };
        Ok(self.push(value, Op::LogSumExp(a.0, mask)))
    }

    /// `log sum exp` over every entry of a single-column node.
    pub fn logsumexp(&self, a: Node) -> Result<Node> {
        let n = self.nodes.borrow()[a.0].value.nrows();
        self.logsumexp_masked(a, vec![true; n])
    }

    /// Propagates gradients from a scalar output back to every node,
    /// accumulating into each node's adjoint.
    pub fn backward(&self, output: Node) -> Result<()> {
        let mut nodes = self.nodes.borrow_mut();
        if nodes[output.0].value.dim() != (1, 1) {
            return Err(Error::NonScalarOutput);
        }
        // Fresh scratch per pass so repeated backward calls each contribute
        // one full gradient into the persistent accumulators.
        let mut grad: Vec<Array2<f64>> = nodes
            .iter()
            .map(|n| Array2::zeros(n.value.raw_dim()))
            .collect();
        grad[output.0][(0, 0)] = 1.0;

        for i in (0..nodes.len()).rev() {
            if grad[i].iter().all(|&g| g == 0.0) {
                continue;
            }
            let g = grad[i].clone();
            match nodes[i].op.clone() {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    grad[a] += &g;
                    grad[b] += &g;
                }
                Op::Sub(a, b) => {
                    grad[a] += &g;
                    grad[b] -= &g;
                }
                Op::Mul(a, b) => {
                    let (da, db) = {
                        let (va, vb) = (&nodes[a].value, &nodes[b].value);
                        if va.dim() == vb.dim() {
                            (&g * vb, &g * va)
                        } else if va.dim() == (1, 1) {
                            // scalar * matrix
                            (
                                Array2::from_elem((1, 1), (&g * vb).sum()),
                                &g * va[(0, 0)],
                            )
                        } else {
                            (
                                &g * vb[(0, 0)],
                                Array2::from_elem((1, 1), (&g * va).sum()),
                            )
                        }
                    };
                    grad[a] += &da;
                    grad[b] += &db;
                }
                Op::MatMul(a, b) => {
                    let (da, db) = {
                        let (va, vb) = (&nodes[a].value, &nodes[b].value);
                        (g.dot(&vb.t()), va.t().dot(&g))
                    };
                    grad[a] += &da;
                    grad[b] += &db;
                }
                Op::Exp(a) => {
                    let d = &g * &nodes[i].value;
                    grad[a] += &d;
                }
                Op::Log(a) => {
                    let d = &g / &nodes[a].value;
                    grad[a] += &d;
                }
                Op::Neg(a) => {
                    grad[a] -= &g;
                }
                Op::Sum(a) => {
                    let g0 = g[(0, 0)];
                    grad[a] += g0;
                }
                Op::Mean(a) => {
                    let g0 = g[(0, 0)] / nodes[a].value.len() as f64;
                    grad[a] += g0;
                }
                Op::Relu(a) => {
                    let d = {
                        let va = &nodes[a].value;
                        let mut d = g.clone();
                        d.zip_mut_with(va, |gi, &vi| {
                            if vi <= 0.0 {
                                *gi = 0.0;
                            }
                        });
                        d
                    };
                    grad[a] += &d;
                }
                Op::ClampMax(a, cap) => {
                    let d = {
                        let va = &nodes[a].value;
                        let mut d = g.clone();
                        d.zip_mut_with(va, |gi, &vi| {
                            if vi >= cap {
                                *gi = 0.0;
                            }
                        });
                        d
                    };
                    grad[a] += &d;
                }
                Op::GatherRows(a, rows) => {
                    for (r, &src) in rows.iter().enumerate() {
                        let grow = g.row(r).to_owned();
                        let mut dst = grad[a].row_mut(src);
                        dst += &grow;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut at = 0;
                    for &p in &parts {
                        let nr = nodes[p].value.nrows();
                        for r in 0..nr {
                            let grow = g.row(at + r).to_owned();
                            let mut dst = grad[p].row_mut(r);
                            dst += &grow;
                        }
                        at += nr;
                    }
                }
                Op::LogSumExp(a, mask) => {
                    let d = {
                        let va = &nodes[a].value;
                        let out = nodes[i].value[(0, 0)];
                        let g0 = g[(0, 0)];
                        let mut d = Array2::zeros(va.raw_dim());
                        for (r, &keep) in mask.iter().enumerate() {
                            if keep {
                                d[(r, 0)] = g0 * (va[(r, 0)] - out).exp();
                            }
                        }
                        d
                    };
                    grad[a] += &d;
                }
            }
        }

        for (n, gi) in nodes.iter_mut().zip(grad.into_iter()) {
            n.adjoint += &gi;
        }
        Ok(())
    }
}

/// Builds an n x 1 column matrix from a slice.
pub fn column_matrix(values: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("column shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_of(tape: &Tape, n: Node) -> f64 {
        tape.scalar_value(n)
    }

    #[test]
    fn exp_value_and_gradient_at_zero() {
        let tape = Tape::new();
        let x = tape.leaf(Array2::from_elem((1, 1), 0.0));
        let y = tape.exp(x).unwrap();
        assert_eq!(scalar_of(&tape, y), 1.0);
        tape.backward(y).unwrap();
        assert_eq!(tape.adjoint(x)[(0, 0)], 1.0);
    }

    #[test]
    fn product_rule() {
        let tape = Tape::new();
        let x = tape.leaf(Array2::from_elem((1, 1), 2.0));
        let y = tape.leaf(Array2::from_elem((1, 1), 3.0));
        let f = tape.mul(x, y).unwrap();
        tape.backward(f).unwrap();
        assert_eq!(tape.adjoint(x)[(0, 0)], 3.0);
        assert_eq!(tape.adjoint(y)[(0, 0)], 2.0);
    }

    #[test]
    fn log_exp_identity_gradient_is_one() {
        for x0 in [-2.5, 0.0, 1.7] {
            let tape = Tape::new();
            let x = tape.leaf(Array2::from_elem((1, 1), x0));
            let y = tape.log(tape.exp(x).unwrap()).unwrap();
            tape.backward(y).unwrap();
            assert_relative_eq!(tape.adjoint(x)[(0, 0)], 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn mean_relu_of_pos_neg_pair() {
        // f(x) = mean(relu([x, -x])) at x = 2: only the positive branch is live.
        let tape = Tape::new();
        let x = tape.leaf(Array2::from_elem((1, 1), 2.0));
        let nx = tape.neg(x).unwrap();
        let both = tape.concat_rows(&[x, nx]).unwrap();
        let r = tape.relu(both).unwrap();
        let f = tape.mean(r).unwrap();
        assert_eq!(scalar_of(&tape, f), 1.0);
        tape.backward(f).unwrap();
        assert_eq!(tape.adjoint(x)[(0, 0)], 0.5);
    }

    #[test]
    fn logsumexp_of_two_zeros_is_log_two() {
        let tape = Tape::new();
        let v = tape.leaf(column_matrix(&[0.0, 0.0]));
        let l = tape.logsumexp(v).unwrap();
        assert_relative_eq!(scalar_of(&tape, l), 2.0f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn logsumexp_is_overflow_safe() {
        let tape = Tape::new();
        let v = tape.leaf(column_matrix(&[1000.0, 1000.0]));
        let l = tape.logsumexp(v).unwrap();
        assert_relative_eq!(
            scalar_of(&tape, l),
            1000.0 + 2.0f64.ln(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn logsumexp_shift_invariance() {
        let vals = [-1.3, 0.4, 2.2, -0.7];
        let shifted: Vec<f64> = vals.iter().map(|v| v + 37.5).collect();
        let tape = Tape::new();
        let a = tape.leaf(column_matrix(&vals));
        let b = tape.leaf(column_matrix(&shifted));
        let la = tape.logsumexp(a).unwrap();
        let lb = tape.logsumexp(b).unwrap();
        assert!((scalar_of(&tape, lb) - scalar_of(&tape, la) - 37.5).abs() < 1e-12);
    }

    #[test]
    fn masked_logsumexp_softmax_gradient() {
        let tape = Tape::new();
        let v = tape.leaf(column_matrix(&[0.5, -1.0, 2.0]));
        let l = tape
            .logsumexp_masked(v, vec![true, false, true])
            .unwrap();
        tape.backward(l).unwrap();
        let adj = tape.adjoint(v);
        let z = 0.5f64.exp() + 2.0f64.exp();
        assert_relative_eq!(adj[(0, 0)], 0.5f64.exp() / z, max_relative = 1e-12);
        assert_eq!(adj[(1, 0)], 0.0);
        assert_relative_eq!(adj[(2, 0)], 2.0f64.exp() / z, max_relative = 1e-12);
    }

    #[test]
    fn empty_mask_is_a_domain_error() {
        let tape = Tape::new();
        let v = tape.leaf(column_matrix(&[1.0, 2.0]));
        assert!(matches!(
            tape.logsumexp_masked(v, vec![false, false]),
            Err(Error::DomainError { .. })
        ));
    }

    #[test]
    fn log_of_non_positive_is_rejected() {
        let tape = Tape::new();
        let v = tape.leaf(column_matrix(&[1.0, 0.0]));
        assert!(matches!(tape.log(v), Err(Error::DomainError { .. })));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let tape = Tape::new();
        let a = tape.leaf(Array2::zeros((2, 2)));
        let b = tape.leaf(Array2::zeros((3, 2)));
        assert!(tape.add(a, b).is_err());
        assert!(tape.matmul(a, b).is_err());
    }

    #[test]
    fn backward_rejects_non_scalar_output() {
        let tape = Tape::new();
        let a = tape.leaf(Array2::zeros((2, 2)));
        assert!(matches!(tape.backward(a), Err(Error::NonScalarOutput)));
    }

    #[test]
    fn backward_twice_doubles_and_reset_restores() {
        let tape = Tape::new();
        let x = tape.leaf(Array2::from_elem((1, 1), 2.0));
        let y = tape.mul(x, x).unwrap();
        tape.backward(y).unwrap();
        let first = tape.adjoint(x)[(0, 0)];
        assert_eq!(first, 4.0);
        tape.backward(y).unwrap();
        assert_eq!(tape.adjoint(x)[(0, 0)], 2.0 * first);
        tape.reset_adjoints();
        tape.backward(y).unwrap();
        assert_eq!(tape.adjoint(x)[(0, 0)], first);
    }

    #[test]
    fn unused_leaf_has_zero_adjoint() {
        let tape = Tape::new();
        let x = tape.leaf(Array2::from_elem((1, 1), 2.0));
        let unused = tape.leaf(Array2::from_elem((3, 2), 1.0));
        let y = tape.mul(x, x).unwrap();
        tape.backward(y).unwrap();
        assert!(tape.adjoint(unused).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gather_accumulates_duplicate_rows() {
        let tape = Tape::new();
        let v = tape.leaf(column_matrix(&[1.0, 2.0]));
        let g = tape.gather_rows(v, vec![0, 0, 1]).unwrap();
        let s = tape.sum(g).unwrap();
        tape.backward(s).unwrap();
        let adj = tape.adjoint(v);
        assert_eq!(adj[(0, 0)], 2.0);
        assert_eq!(adj[(1, 0)], 1.0);
    }

    /// Central finite difference on a scalar-valued rebuild of the graph.
    fn central_diff(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], i: usize) -> f64 {
        let h = 1e-5;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    }

    fn check_grad(build: impl Fn(&Tape, Node) -> Node, x0: &[f64]) {
        let eval = |x: &[f64]| {
            let tape = Tape::new();
            let leaf = tape.leaf(column_matrix(x));
            let out = build(&tape, leaf);
            tape.scalar_value(out)
        };
        let tape = Tape::new();
        let leaf = tape.leaf(column_matrix(x0));
        let out = build(&tape, leaf);
        tape.backward(out).unwrap();
        let adj = tape.adjoint(leaf);
        for i in 0..x0.len() {
            let fd = central_diff(eval, x0, i);
            let an = adj[(i, 0)];
            let denom = fd.abs().max(an.abs()).max(1e-8);
            assert!(
                (fd - an).abs() / denom < 1e-4,
                "grad mismatch at {i}: analytic {an} vs fd {fd}"
            );
        }
    }

    #[test]
    fn primitive_gradients_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            // Skip relu kinks so the finite difference is well defined.
            if x.iter().any(|v| v.abs() < 1e-5) {
                continue;
            }
            check_grad(
                |t, l| {
                    let e = t.exp(l).unwrap();
                    let r = t.relu(l).unwrap();
                    let m = t.mul(e, r).unwrap();
                    t.sum(m).unwrap()
                },
                &x,
            );
            check_grad(
                |t, l| {
                    let lse = t.logsumexp_masked(l, vec![true, true, false, true]).unwrap();
                    let s = t.mean(l).unwrap();
                    let d = t.sub(lse, s).unwrap();
                    t.mul(d, d).unwrap()
                },
                &x,
            );
            check_grad(
                |t, l| {
                    let w = t.constant(Array2::from_shape_vec((1, 4), vec![0.3, -1.2, 0.8, 2.0]).unwrap());
                    let y = t.matmul(w, l).unwrap();
                    let c = t.clamp_max(y, 1.5).unwrap();
                    t.sum(c).unwrap()
                },
                &x,
            );
            let positive: Vec<f64> = x.iter().map(|v| v.abs() + 0.5).collect();
            check_grad(
                |t, l| {
                    let lg = t.log(l).unwrap();
                    let n = t.neg(lg).unwrap();
                    t.mean(n).unwrap()
                },
                &positive,
            );
        }
    }
}
