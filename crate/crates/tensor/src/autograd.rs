//! Reverse-mode gradient accumulation over the implicit op graph.

use std::collections::HashSet;

use crate::error::{Result, TensorError};
use crate::kernels::{self, ConvSpec};
use crate::tensor::Tensor;

/// Recorded producer of a tensor. Holds handles to the inputs plus whatever
/// metadata the backward rule needs.
#[derive(Clone)]
pub(crate) enum Op {
    Add(Tensor, Tensor),
    Sub(Tensor, Tensor),
    Mul(Tensor, Tensor),
    Scale(Tensor, f64),
    AddBias {
        x: Tensor,
        bias: Tensor,
    },
    Matmul(Tensor, Tensor),
    Permute {
        x: Tensor,
        axes: Vec<usize>,
    },
    Reshape(Tensor),
    Narrow {
        x: Tensor,
        dim: usize,
        start: usize,
        len: usize,
    },
    Concat {
        parts: Vec<Tensor>,
        dim: usize,
    },
    SoftmaxLastDim(Tensor),
    Gelu(Tensor),
    SumAll(Tensor),
    BroadcastLast {
        x: Tensor,
        n: usize,
    },
    BroadcastFirst {
        x: Tensor,
        n: usize,
    },
    Conv2d {
        x: Tensor,
        weight: Tensor,
        bias: Tensor,
        spec: ConvSpec,
    },
    UpsampleBilinear {
        x: Tensor,
    },
    CrossEntropy {
        logits: Tensor,
        targets: Vec<Option<u32>>,
        valid: usize,
    },
}

impl Op {
    pub(crate) fn parents(&self) -> Vec<Tensor> {
        match self {
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Matmul(a, b) => {
                vec![a.clone(), b.clone()]
            }
            Op::Scale(a, _) => vec![a.clone()],
            Op::AddBias { x, bias } => vec![x.clone(), bias.clone()],
            Op::Permute { x, .. }
            | Op::Narrow { x, .. }
            | Op::BroadcastLast { x, .. }
            | Op::BroadcastFirst { x, .. }
            | Op::UpsampleBilinear { x } => vec![x.clone()],
            Op::Reshape(x) | Op::SoftmaxLastDim(x) | Op::Gelu(x) | Op::SumAll(x) => {
                vec![x.clone()]
            }
            Op::Concat { parts, .. } => parts.clone(),
            Op::Conv2d {
                x, weight, bias, ..
            } => vec![x.clone(), weight.clone(), bias.clone()],
            Op::CrossEntropy { logits, .. } => vec![logits.clone()],
        }
    }
}

/// Post-order over the graph rooted at `loss`: parents before consumers.
fn topo_order(loss: &Tensor) -> Vec<Tensor> {
    enum Frame {
        Enter(Tensor),
        Exit(Tensor),
    }
    let mut order = Vec::new();
    let mut visited = HashSet::new();
    let mut stack = vec![Frame::Enter(loss.clone())];
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Enter(t) => {
                if !visited.insert(t.ptr_id()) {
                    continue;
                }
                stack.push(Frame::Exit(t.clone()));
                let parents = t.inner.borrow().op.as_ref().map(|op| op.parents());
                if let Some(parents) = parents {
                    for p in parents {
                        stack.push(Frame::Enter(p));
                    }
                }
            }
            Frame::Exit(t) => order.push(t),
        }
    }
    order
}

pub(crate) fn run_backward(loss: &Tensor) -> Result<()> {
    {
        let inner = loss.inner.borrow();
        if inner.data.len() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: inner.shape.clone(),
            });
        }
        if inner.backward_done {
            return Err(TensorError::BackwardTwice);
        }
        if !inner.requires_grad {
            return Err(TensorError::NoGrad);
        }
    }
    let order = topo_order(loss);
    loss.accumulate_grad(&[1.0]);
    for node in order.iter().rev() {
        let (op, grad) = {
            let inner = node.inner.borrow();
            let Some(op) = inner.op.clone() else { continue };
            let Some(grad) = inner.grad.clone() else {
                continue;
            };
            (op, grad)
        };
        propagate(node, &op, &grad);
    }
    loss.inner.borrow_mut().backward_done = true;
    Ok(())
}

/// Distributes `grad` (gradient of the loss w.r.t. `node`) onto the parents.
fn propagate(node: &Tensor, op: &Op, grad: &[f64]) {
    match op {
        Op::Add(a, b) => {
            a.accumulate_grad(grad);
            b.accumulate_grad(grad);
        }
        Op::Sub(a, b) => {
            a.accumulate_grad(grad);
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            b.accumulate_grad(&neg);
        }
        Op::Mul(a, b) => {
            let da: Vec<f64> = {
                let bd = b.inner.borrow();
                grad.iter().zip(&bd.data).map(|(g, v)| g * v).collect()
            };
            let db: Vec<f64> = {
                let ad = a.inner.borrow();
                grad.iter().zip(&ad.data).map(|(g, v)| g * v).collect()
            };
            a.accumulate_grad(&da);
            b.accumulate_grad(&db);
        }
        Op::Scale(a, factor) => {
            let da: Vec<f64> = grad.iter().map(|g| g * factor).collect();
            a.accumulate_grad(&da);
        }
        Op::AddBias { x, bias } => {
            x.accumulate_grad(grad);
            let last = bias.numel();
            let mut db = vec![0.0; last];
            for (i, g) in grad.iter().enumerate() {
                db[i % last] += *g;
            }
            bias.accumulate_grad(&db);
        }
        Op::Matmul(a, b) => {
            let (m, k) = {
                let s = a.shape();
                (s[0], s[1])
            };
            let n = b.shape()[1];
            let (da, db) = {
                let ad = a.inner.borrow();
                let bd = b.inner.borrow();
                kernels::matmul_backward(&ad.data, &bd.data, grad, m, k, n)
            };
            a.accumulate_grad(&da);
            b.accumulate_grad(&db);
        }
        Op::Permute { x, axes } => {
            let mut inverse = vec![0usize; axes.len()];
            for (i, &a) in axes.iter().enumerate() {
                inverse[a] = i;
            }
            let (dx, _) = kernels::permute_raw(grad, &node.shape(), &inverse);
            x.accumulate_grad(&dx);
        }
        Op::Reshape(x) => x.accumulate_grad(grad),
        Op::Narrow {
            x,
            dim,
            start,
            len,
        } => {
            let xshape = x.shape();
            let mut dx = vec![0.0; x.numel()];
            kernels::place_slab(&mut dx, &xshape, *dim, *start, grad, *len, false);
            x.accumulate_grad(&dx);
        }
        Op::Concat { parts, dim } => {
            let out_shape = node.shape();
            let mut offset = 0;
            for p in parts {
                let len = p.shape()[*dim];
                let dp = kernels::narrow_raw(grad, &out_shape, *dim, offset, len);
                p.accumulate_grad(&dp);
                offset += len;
            }
        }
        Op::SoftmaxLastDim(x) => {
            let shape = node.shape();
            let last = *shape.last().expect("rank >= 1");
            let dx = {
                let y = node.inner.borrow();
                kernels::softmax_lastdim_backward(&y.data, grad, last)
            };
            x.accumulate_grad(&dx);
        }
        Op::Gelu(x) => {
            let dx: Vec<f64> = {
                let xd = x.inner.borrow();
                xd.data
                    .iter()
                    .zip(grad)
                    .map(|(&v, g)| g * kernels::gelu_grad(v))
                    .collect()
            };
            x.accumulate_grad(&dx);
        }
        Op::SumAll(x) => {
            let dx = vec![grad[0]; x.numel()];
            x.accumulate_grad(&dx);
        }
        Op::BroadcastLast { x, n } => {
            let mut dx = vec![0.0; x.numel()];
            for (i, chunk) in grad.chunks_exact(*n).enumerate() {
                dx[i] = chunk.iter().sum();
            }
            x.accumulate_grad(&dx);
        }
        Op::BroadcastFirst { x, n } => {
            let m = x.numel();
            let mut dx = vec![0.0; m];
            for rep in 0..*n {
                for i in 0..m {
                    dx[i] += grad[rep * m + i];
                }
            }
            x.accumulate_grad(&dx);
        }
        Op::Conv2d {
            x,
            weight,
            bias,
            spec,
        } => {
            let xs = x.shape();
            let ws = weight.shape();
            let os = node.shape();
            let (dx, dw, db) = {
                let xd = x.inner.borrow();
                let wd = weight.inner.borrow();
                kernels::conv2d_backward(
                    &xd.data,
                    (xs[0], xs[1], xs[2], xs[3]),
                    &wd.data,
                    (ws[0], ws[1], ws[2], ws[3]),
                    grad,
                    spec,
                    (os[2], os[3]),
                )
            };
            x.accumulate_grad(&dx);
            weight.accumulate_grad(&dw);
            bias.accumulate_grad(&db);
        }
        Op::UpsampleBilinear { x } => {
            let xs = x.shape();
            let os = node.shape();
            let dx = kernels::upsample_bilinear_backward(
                grad,
                (xs[0], xs[1], xs[2], xs[3]),
                (os[2], os[3]),
            );
            x.accumulate_grad(&dx);
        }
        Op::CrossEntropy {
            logits,
            targets,
            valid,
        } => {
            let k = logits.shape()[1];
            let dl = {
                let ld = logits.inner.borrow();
                kernels::cross_entropy_backward(&ld.data, k, targets, *valid, grad[0])
            };
            logits.accumulate_grad(&dl);
        }
    }
}
