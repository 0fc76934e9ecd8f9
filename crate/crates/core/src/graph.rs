//! Define-by-run reverse-mode differentiation.
//!
//! A [`Graph`] is an append-only list of nodes; every node's parents have
//! smaller indices, so the graph is acyclic by construction and a reverse
//! sweep over the node list is a valid topological order. Graphs are built
//! fresh for every training step and dropped afterwards.

use std::fmt;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::tensor::{matmul, matmul_nt, matmul_tn, Tensor};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A differentiable operation defined outside this module.
pub trait Function: fmt::Debug {
    fn tag(&self) -> &'static str;

    fn forward(&self, inputs: &[&Tensor]) -> Result<Tensor>;

    /// Vector-Jacobian products, one per input, each shaped like its input.
    fn backward(&self, inputs: &[&Tensor], output: &Tensor, grad: &Tensor) -> Vec<Tensor>;
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul,
    AddBias,
    Add,
    Sub,
    Mul,
    Affine { scale: f64 },
    Act(Activation),
    Sum,
    Mean,
    RowSum,
    LogFloor { floor: f64 },
    Softmax,
    SoftmaxXent { target: Tensor },
    Concat { split: usize },
    Reshape,
    Custom(Box<dyn Function>),
}

impl Op {
    fn tag(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul => "matmul",
            Op::AddBias => "add_bias",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Affine { .. } => "affine",
            Op::Act(_) => "activation",
            Op::Sum => "sum",
            Op::Mean => "mean",
            Op::RowSum => "row_sum",
            Op::LogFloor { .. } => "log",
            Op::Softmax => "softmax",
            Op::SoftmaxXent { .. } => "softmax_cross_entropy",
            Op::Concat { .. } => "concat",
            Op::Reshape => "reshape",
            Op::Custom(f) => f.tag(),
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    parents: Vec<Var>,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf whose gradient is tracked.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, vec![], true)
    }

    /// Leaf treated as a constant; gradients stop here.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, vec![], false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn op_tag(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.tag()
    }

    pub fn parents(&self, v: Var) -> &[Var] {
        &self.nodes[v.0].parents
    }

    fn push(&mut self, value: Tensor, op: Op, parents: Vec<Var>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            parents,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn derived(&mut self, value: Tensor, op: Op, parents: Vec<Var>) -> Result<Var> {
        value.check_finite(op.tag())?;
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        Ok(self.push(value, op, parents, needs_grad))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = matmul(self.value(a), self.value(b))?;
        self.derived(out, Op::MatMul, vec![a, b])
    }

    /// `x[r×s] + bias[s]` broadcast over rows.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if xv.rank() != 2 || bv.rank() != 1 || xv.shape()[1] != bv.shape()[0] {
            return Err(Error::dim("add_bias", xv.shape(), bv.shape()));
        }
        let cols = bv.len();
        let data = xv
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| v + bv.data()[i % cols])
            .collect();
        let out = Tensor::from_raw(xv.shape().to_vec(), data);
        self.derived(out, Op::AddBias, vec![x, bias])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(self.value(b))?;
        self.derived(out, Op::Add, vec![a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).sub(self.value(b))?;
        self.derived(out, Op::Sub, vec![a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).mul(self.value(b))?;
        self.derived(out, Op::Mul, vec![a, b])
    }

    /// `scale * x + shift`, elementwise.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Result<Var> {
        let out = self.value(x).map(|v| scale * v + shift);
        self.derived(out, Op::Affine { scale }, vec![x])
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Result<Var> {
        let out = self.value(x).map(|v| kind.apply(v));
        self.derived(out, Op::Act(kind), vec![x])
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(x).sum());
        self.derived(out, Op::Sum, vec![x])
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let out = Tensor::scalar(xv.sum() / xv.len() as f64);
        self.derived(out, Op::Mean, vec![x])
    }

    /// Sums each row of a `[r×c]` matrix into a `[r]` vector.
    pub fn row_sum(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if xv.rank() != 2 {
            return Err(Error::Shape(format!("row_sum needs a matrix, got {:?}", xv.shape())));
        }
        let (r, c) = xv.rows_cols();
        let data = (0..r).map(|i| xv.data()[i * c..(i + 1) * c].iter().sum()).collect();
        let out = Tensor::from_raw(vec![r], data);
        self.derived(out, Op::RowSum, vec![x])
    }

    /// `ln(max(x, floor))`; the gradient is zero where the floor is active.
    pub fn log_floor(&mut self, x: Var, floor: f64) -> Result<Var> {
        let out = self.value(x).map(|v| v.max(floor).ln());
        self.derived(out, Op::LogFloor { floor }, vec![x])
    }

    /// Row-wise softmax of a `[b×m]` matrix.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if xv.rank() != 2 {
            return Err(Error::Shape(format!("softmax needs a matrix, got {:?}", xv.shape())));
        }
        let out = softmax_rows(xv);
        self.derived(out, Op::Softmax, vec![x])
    }

    /// Mean over the batch of `-log softmax(logits)[target]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, target: &Tensor) -> Result<Var> {
        let lv = self.value(logits);
        if lv.rank() != 2 || lv.shape() != target.shape() {
            return Err(Error::dim("softmax_cross_entropy", lv.shape(), target.shape()));
        }
        let classes = one_hot_indices(target)?;
        let (_, m) = lv.rows_cols();
        let total: f64 = classes
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let row = &lv.data()[i * m..(i + 1) * m];
                log_sum_exp(row) - row[k]
            })
            .sum();
        let out = Tensor::scalar(total / classes.len() as f64);
        self.derived(
            out,
            Op::SoftmaxXent {
                target: target.clone(),
            },
            vec![logits],
        )
    }

    /// Concatenates along the last axis; leading extents must agree.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let (ra, rb) = (av.rank(), bv.rank());
        if ra != rb || av.shape()[..ra - 1] != bv.shape()[..rb - 1] {
            return Err(Error::dim("concat", av.shape(), bv.shape()));
        }
        let p = av.shape()[ra - 1];
        let q = bv.shape()[rb - 1];
        let rows = av.len() / p;
        let mut data = Vec::with_capacity(av.len() + bv.len());
        for i in 0..rows {
            data.extend_from_slice(&av.data()[i * p..(i + 1) * p]);
            data.extend_from_slice(&bv.data()[i * q..(i + 1) * q]);
        }
        let mut shape = av.shape().to_vec();
        shape[ra - 1] = p + q;
        let out = Tensor::from_raw(shape, data);
        self.derived(out, Op::Concat { split: p }, vec![a, b])
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(x).reshape(shape)?;
        self.derived(out, Op::Reshape, vec![x])
    }

    /// Keeps the leading axis and flattens the rest: `[b, ...] -> [b, prod]`.
    pub fn flatten(&mut self, x: Var) -> Result<Var> {
        let (r, c) = self.value(x).rows_cols();
        self.reshape(x, &[r, c])
    }

    pub fn apply(&mut self, f: impl Function + 'static, inputs: &[Var]) -> Result<Var> {
        let out = {
            let values: Vec<&Tensor> = inputs.iter().map(|&v| self.value(v)).collect();
            f.forward(&values)?
        };
        self.derived(out, Op::Custom(Box::new(f)), inputs.to_vec())
    }

    /// Reverse sweep from a single-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::ones(lv.shape()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad || node.parents.is_empty() {
                continue;
            }
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            let parent_grads = self.vjp(node, &grad);
            for (p, g) in node.parents.iter().zip(parent_grads) {
                if !self.nodes[p.0].needs_grad {
                    continue;
                }
                match &mut grads[p.0] {
                    Some(acc) => {
                        for (a, v) in acc.data_mut().iter_mut().zip(g.data()) {
                            *a += v;
                        }
                    }
                    slot => *slot = Some(g),
                }
            }
            grads[idx] = Some(grad);
        }
        for (i, g) in grads.iter_mut().enumerate() {
            if !self.nodes[i].needs_grad {
                *g = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn vjp(&self, node: &Node, g: &Tensor) -> Vec<Tensor> {
        let input = |k: usize| &self.nodes[node.parents[k].0].value;
        match &node.op {
            Op::Leaf => vec![],
            Op::MatMul => vec![matmul_nt(g, input(1)), matmul_tn(input(0), g)],
            Op::AddBias => {
                let (r, c) = g.rows_cols();
                let mut gb = vec![0.0; c];
                for i in 0..r {
                    for (acc, v) in gb.iter_mut().zip(&g.data()[i * c..(i + 1) * c]) {
                        *acc += v;
                    }
                }
                vec![g.clone(), Tensor::from_raw(vec![c], gb)]
            }
            Op::Add => vec![g.clone(), g.clone()],
            Op::Sub => vec![g.clone(), g.scale(-1.0)],
            Op::Mul => vec![mul_raw(g, input(1)), mul_raw(g, input(0))],
            Op::Affine { scale } => vec![g.scale(*scale)],
            Op::Act(kind) => {
                let x = input(0);
                let data = x
                    .data()
                    .iter()
                    .zip(node.value.data())
                    .zip(g.data())
                    .map(|((&xv, &yv), &gv)| gv * kind.derivative(xv, yv))
                    .collect();
                vec![Tensor::from_raw(x.shape().to_vec(), data)]
            }
            Op::Sum => vec![Tensor::full(input(0).shape(), g.data()[0])],
            Op::Mean => {
                let x = input(0);
                vec![Tensor::full(x.shape(), g.data()[0] / x.len() as f64)]
            }
            Op::RowSum => {
                let x = input(0);
                let (_, c) = x.rows_cols();
                let data = (0..x.len()).map(|i| g.data()[i / c]).collect();
                vec![Tensor::from_raw(x.shape().to_vec(), data)]
            }
            Op::LogFloor { floor } => {
                let x = input(0);
                let data = x
                    .data()
                    .iter()
                    .zip(g.data())
                    .map(|(&xv, &gv)| if xv > *floor { gv / xv } else { 0.0 })
                    .collect();
                vec![Tensor::from_raw(x.shape().to_vec(), data)]
            }
            Op::Softmax => {
                let y = &node.value;
                let (r, c) = y.rows_cols();
                let mut data = vec![0.0; r * c];
                for i in 0..r {
                    let yr = &y.data()[i * c..(i + 1) * c];
                    let gr = &g.data()[i * c..(i + 1) * c];
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for j in 0..c {
                        data[i * c + j] = yr[j] * (gr[j] - dot);
                    }
                }
                vec![Tensor::from_raw(vec![r, c], data)]
            }
            Op::SoftmaxXent { target } => {
                let p = softmax_rows(input(0));
                let (r, _) = p.rows_cols();
                let k = g.data()[0] / r as f64;
                let data = p
                    .data()
                    .iter()
                    .zip(target.data())
                    .map(|(pv, tv)| k * (pv - tv))
                    .collect();
                vec![Tensor::from_raw(p.shape().to_vec(), data)]
            }
            Op::Concat { split } => {
                let (a, b) = (input(0), input(1));
                let p = *split;
                let q = b.shape()[b.rank() - 1];
                let rows = a.len() / p;
                let mut ga = Vec::with_capacity(a.len());
                let mut gb = Vec::with_capacity(b.len());
                for i in 0..rows {
                    let row = &g.data()[i * (p + q)..(i + 1) * (p + q)];
                    ga.extend_from_slice(&row[..p]);
                    gb.extend_from_slice(&row[p..]);
                }
                vec![
                    Tensor::from_raw(a.shape().to_vec(), ga),
                    Tensor::from_raw(b.shape().to_vec(), gb),
                ]
            }
            Op::Reshape => vec![Tensor::from_raw(input(0).shape().to_vec(), g.data().to_vec())],
            Op::Custom(f) => {
                let inputs: Vec<&Tensor> = node.parents.iter().map(|p| &self.nodes[p.0].value).collect();
                f.backward(&inputs, &node.value, g)
            }
        }
    }
}

/// Gradients produced by [`Graph::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `∂loss/∂v`, or `None` if `v` does not reach the loss or is constant.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Like [`Gradients::get`] but yields zeros shaped like `v` when no
    /// gradient flowed.
    pub fn get_or_zeros(&self, graph: &Graph, v: Var) -> Tensor {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(graph.value(v).shape()))
    }
}

fn mul_raw(a: &Tensor, b: &Tensor) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    Tensor::from_raw(a.shape().to_vec(), data)
}

/// `log Σ exp(v)` with max subtraction.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Row-wise softmax of a rank-2 tensor.
pub fn softmax_rows(x: &Tensor) -> Tensor {
    let (r, c) = x.rows_cols();
    let mut data = Vec::with_capacity(x.len());
    for i in 0..r {
        let row = &x.data()[i * c..(i + 1) * c];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        data.extend(exps.iter().map(|e| e / total));
    }
    Tensor::from_raw(x.shape().to_vec(), data)
}

/// Class index of every row of a one-hot `[b×m]` matrix.
pub fn one_hot_indices(target: &Tensor) -> Result<Vec<usize>> {
    if target.rank() != 2 {
        return Err(Error::Input(format!(
            "one-hot targets must be a matrix, got {:?}",
            target.shape()
        )));
    }
    let (r, m) = target.rows_cols();
    (0..r)
        .map(|i| {
            let row = &target.data()[i * m..(i + 1) * m];
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones == 1 && zeros == m - 1 {
                Ok(row.iter().position(|&v| v == 1.0).unwrap_or(0))
            } else {
                Err(Error::Input(format!("target row {i} is not one-hot: {row:?}")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gives_ones() {
        let mut g = Graph::new();
        let x = g.param(Tensor::new(vec![2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, 9.0]).unwrap());
        let s = g.sum(x).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap(), &Tensor::ones(&[2, 3]));
    }

    #[test]
    fn square_gives_two_x() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(&[1.0, 2.0, 3.0]).unwrap());
        let sq = g.mul(x, x).unwrap();
        let s = g.sum(sq).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut g = Graph::new();
        let x = g.param(Tensor::zeros(&[2]));
        assert!(matches!(g.backward(x), Err(Error::Contract(_))));
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::new();
        let x = g.param(Tensor::vector(&[1.0, 2.0]).unwrap());
        let c = g.constant(Tensor::vector(&[3.0, 4.0]).unwrap());
        let y = g.mul(x, c).unwrap();
        let s = g.sum(y).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[3.0, 4.0]);
        assert!(grads.get(c).is_none());
        assert_eq!(g.op_tag(y), "mul");
        assert_eq!(g.parents(y), &[x, c]);
    }

    #[test]
    fn cross_entropy_reference_values() {
        let mut g = Graph::new();
        let target = Tensor::matrix(1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        let l = g.constant(Tensor::matrix(1, 3, vec![0.0, 0.0, 0.0]).unwrap());
        let ce = g.softmax_cross_entropy(l, &target).unwrap();
        assert!((g.value(ce).data()[0] - 3f64.ln()).abs() < 1e-15);

        let l = g.constant(Tensor::matrix(1, 3, vec![1000.0, 0.0, 0.0]).unwrap());
        let ce = g.softmax_cross_entropy(l, &target).unwrap();
        assert!(g.value(ce).data()[0].abs() < 1e-300);
    }

    #[test]
    fn cross_entropy_rejects_soft_targets() {
        let mut g = Graph::new();
        let l = g.constant(Tensor::zeros(&[1, 2]));
        let soft = Tensor::matrix(1, 2, vec![0.5, 0.5]).unwrap();
        assert!(matches!(g.softmax_cross_entropy(l, &soft), Err(Error::Input(_))));
    }

    #[test]
    fn concat_splits_gradient() {
        let mut g = Graph::new();
        let a = g.param(Tensor::vector(&[1.0, 2.0]).unwrap());
        let b = g.param(Tensor::vector(&[0.0, 1.0]).unwrap());
        let c = g.concat(a, b).unwrap();
        assert_eq!(g.value(c).data(), &[1.0, 2.0, 0.0, 1.0]);
        let w = g.constant(Tensor::vector(&[1.0, 2.0, 3.0, 4.0]).unwrap());
        let y = g.mul(c, w).unwrap();
        let s = g.sum(y).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(a).unwrap().data(), &[1.0, 2.0]);
        assert_eq!(grads.get(b).unwrap().data(), &[3.0, 4.0]);
    }
}
