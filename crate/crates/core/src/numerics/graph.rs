//! Reverse-mode differentiation over an eagerly evaluated operation tape.
//!
//! Nodes are appended in topological order (inputs always precede uses), so
//! the backward pass is a single reverse sweep that touches each node once.

use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;
use crate::numerics::{kl_kernel, softmax_kernel, EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
enum Op {
    /// Constant leaf; gradient is tracked but not reported as a parameter.
    Input,
    /// Trainable leaf.
    Param,
    MatMul(NodeId, NodeId),
    /// a * b^T without materializing the transpose.
    MatMulBt(NodeId, NodeId),
    /// Row-broadcast bias add: x[n,m] + b[m].
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Scale(NodeId, f64),
    Tanh(NodeId),
    Relu(NodeId),
    /// Row-wise softened softmax of x / tau.
    SoftmaxRows(NodeId, f64),
    /// -mean over rows of sum_c y*log(p), y held constant.
    CrossEntropyMean(NodeId, NodeId),
    /// mean over rows of sum_c t*log(t/s); gradients flow to both sides.
    KlDivMean(NodeId, NodeId),
    AddScalars(NodeId, NodeId),
}

struct Node {
    op: Op,
    value: Tensor,
}

/// An eagerly evaluated differentiable graph.
pub struct Graph {
    nodes: Vec<Node>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    fn push(&mut self, op: Op, value: Tensor, name: &str) -> Result<NodeId> {
        value.ensure_finite(name)?;
        self.nodes.push(Node { op, value });
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Adds a constant (non-trainable) leaf.
    pub fn input(&mut self, value: Tensor) -> Result<NodeId> {
        self.push(Op::Input, value, "input")
    }

    /// Adds a trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Result<NodeId> {
        self.push(Op::Param, value, "param")
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul(self.value(b))?;
        self.push(Op::MatMul(a, b), v, "matmul")
    }

    pub fn matmul_bt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul_bt(self.value(b))?;
        self.push(Op::MatMulBt(a, b), v, "matmul_bt")
    }

    pub fn add_bias(&mut self, x: NodeId, b: NodeId) -> Result<NodeId> {
        let xv = self.value(x);
        let bv = self.value(b);
        let (n, m) = xv.dims2();
        if bv.dims2() != (1, m) {
            return Err(Error::ShapeMismatch(format!(
                "bias {:?} against activations {:?}",
                bv.shape(),
                xv.shape()
            )));
        }
        let mut data = xv.data().to_vec();
        for i in 0..n {
            for j in 0..m {
                data[i * m + j] += bv.data()[j];
            }
        }
        let v = Tensor::new(xv.shape().to_vec(), data)?;
        self.push(Op::AddBias(x, b), v, "add_bias")
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).add(self.value(b))?;
        self.push(Op::Add(a, b), v, "add")
    }

    pub fn scale(&mut self, x: NodeId, s: f64) -> Result<NodeId> {
        let v = self.value(x).scale(s);
        self.push(Op::Scale(x, s), v, "scale")
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(f64::tanh);
        self.push(Op::Tanh(x), v, "tanh")
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x).map(|a| a.max(0.0));
        self.push(Op::Relu(x), v, "relu")
    }

    pub fn softmax_rows(&mut self, x: NodeId, tau: f64) -> Result<NodeId> {
        if tau <= 0.0 {
            return Err(Error::invalid("softmax temperature must be positive"));
        }
        let v = softmax_kernel(self.value(x), tau);
        self.push(Op::SoftmaxRows(x, tau), v, "softmax_rows")
    }

    /// Cross entropy -mean_rows sum_c y log(p), with `targets` constant.
    pub fn cross_entropy_mean(&mut self, probs: NodeId, targets: NodeId) -> Result<NodeId> {
        let p = self.value(probs);
        let y = self.value(targets);
        if p.shape() != y.shape() {
            return Err(Error::ShapeMismatch("cross entropy probs vs targets".into()));
        }
        let (n, _) = p.dims2();
        let mut total = 0.0;
        for (pi, yi) in p.data().iter().zip(y.data()) {
            if *yi != 0.0 {
                total -= yi * pi.max(EPS).ln();
            }
        }
        let v = Tensor::scalar(total / n as f64);
        self.push(Op::CrossEntropyMean(probs, targets), v, "cross_entropy")
    }

    /// KL divergence mean_rows sum_c t log(t/s).
    pub fn kl_div_mean(&mut self, teacher: NodeId, student: NodeId) -> Result<NodeId> {
        let t = self.value(teacher);
        let s = self.value(student);
        let v = Tensor::scalar(kl_kernel(t, s)?);
        self.push(Op::KlDivMean(teacher, student), v, "kl_div")
    }

    pub fn add_scalars(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let va = self.value(a).item()?;
        let vb = self.value(b).item()?;
        self.push(Op::AddScalars(a, b), Tensor::scalar(va + vb), "add_scalars")
    }

    /// Runs the backward pass from a scalar loss and returns per-node
    /// gradients (None for nodes the loss does not depend on).
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(Error::invalid("backward requires a scalar loss"));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            g.ensure_finite("gradient")?;
            match &self.nodes[idx].op {
                Op::Input | Op::Param => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let da = g.matmul_bt(self.value(*b))?;
                    let db = self.value(*a).matmul_tn(&g)?;
                    accumulate(&mut grads, *a, reshape_like(da, self.value(*a)))?;
                    accumulate(&mut grads, *b, reshape_like(db, self.value(*b)))?;
                }
                Op::MatMulBt(a, b) => {
                    let da = g.matmul(self.value(*b))?;
                    let db = g.matmul_tn(self.value(*a))?;
                    accumulate(&mut grads, *a, reshape_like(da, self.value(*a)))?;
                    accumulate(&mut grads, *b, reshape_like(db, self.value(*b)))?;
                }
                Op::AddBias(x, b) => {
                    let db = g.row_sum();
                    accumulate(&mut grads, *x, g.clone())?;
                    accumulate(&mut grads, *b, reshape_like(db, self.value(*b)))?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g)?;
                }
                Op::Scale(x, s) => {
                    accumulate(&mut grads, *x, g.scale(*s))?;
                }
                Op::Tanh(x) => {
                    let y = &self.nodes[idx].value;
                    let dx = g.zip(y, |gi, yi| gi * (1.0 - yi * yi))?;
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::Relu(x) => {
                    let dx = g.zip(self.value(*x), |gi, xi| if xi > 0.0 { gi } else { 0.0 })?;
                    accumulate(&mut grads, *x, dx)?;
                }
                Op::SoftmaxRows(x, tau) => {
                    let y = &self.nodes[idx].value;
                    let (n, m) = y.dims2();
                    let mut dx = vec![0.0; n * m];
                    for i in 0..n {
                        let yr = &y.data()[i * m..(i + 1) * m];
                        let gr = &g.data()[i * m..(i + 1) * m];
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for j in 0..m {
                            dx[i * m + j] = yr[j] * (gr[j] - dot) / tau;
                        }
                    }
                    accumulate(&mut grads, *x, Tensor::new(self.value(*x).shape().to_vec(), dx)?)?;
                }
                Op::CrossEntropyMean(p, y) => {
                    let gs = g.item()?;
                    let pv = self.value(*p);
                    let yv = self.value(*y);
                    let (n, _) = pv.dims2();
                    let dp = pv.zip(yv, |pi, yi| {
                        if yi != 0.0 {
                            -gs * yi / (pi.max(EPS) * n as f64)
                        } else {
                            0.0
                        }
                    })?;
                    accumulate(&mut grads, *p, dp)?;
                }
                Op::KlDivMean(t, s) => {
                    let gs = g.item()?;
                    let tv = self.value(*t);
                    let sv = self.value(*s);
                    let (n, _) = tv.dims2();
                    let scale = gs / n as f64;
                    let ds = tv.zip(sv, |ti, si| -scale * ti / si.max(EPS))?;
                    let dt = tv.zip(sv, |ti, si| {
                        scale * ((ti.max(EPS) / si.max(EPS)).ln() + 1.0)
                    })?;
                    accumulate(&mut grads, *s, ds)?;
                    accumulate(&mut grads, *t, dt)?;
                }
                Op::AddScalars(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g)?;
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, delta: Tensor) -> Result<()> {
    match &mut grads[id.0] {
        Some(g) => g.accumulate(&delta),
        slot => {
            *slot = Some(delta);
            Ok(())
        }
    }
}

/// Matmul helpers always return rank-2 tensors; leaves may be rank-1.
fn reshape_like(mut t: Tensor, like: &Tensor) -> Tensor {
    if t.shape() != like.shape() && t.len() == like.len() {
        t = Tensor::new(like.shape().to_vec(), t.data().to_vec()).expect("same length");
    }
    t
}

/// Gradients from one backward pass, indexed by node id.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Gradient of a leaf, treating untouched leaves as zero.
    pub fn of(&self, id: NodeId, like: &Tensor) -> Tensor {
        match self.get(id) {
            Some(g) => g.clone(),
            None => Tensor::zeros(like.shape().to_vec()),
        }
    }
}
