use std::cell::RefCell;
use std::rc::Rc;

use crate::autograd::{self, Op};
use crate::error::{Result, TensorError};
use crate::kernels::{self, ConvSpec};

/// Dense row-major f64 tensor, optionally participating in the gradient tape.
///
/// `Tensor` is a cheap handle: cloning shares the underlying buffer and graph
/// node. Ops return fresh tensors linked to their inputs; calling
/// [`Tensor::backward`] on a scalar result accumulates gradients into every
/// reachable tensor that requires them. A tape is single-threaded; values move
/// across threads by copying out the data (`to_vec`) once no backward is
/// pending.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) inner: Rc<RefCell<Inner>>,
}

pub(crate) struct Inner {
    pub(crate) data: Vec<f64>,
    pub(crate) shape: Vec<usize>,
    pub(crate) requires_grad: bool,
    pub(crate) grad: Option<Vec<f64>>,
    pub(crate) op: Option<Op>,
    pub(crate) backward_done: bool,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let inner = self.inner.borrow();
        f.debug_struct("Tensor")
            .field("shape", &inner.shape)
            .field("requires_grad", &inner.requires_grad)
            .finish_non_exhaustive()
    }
}

fn check_shape(op: &'static str, shape: &[usize], len: usize) -> Result<()> {
    if shape.is_empty() || shape.iter().any(|&e| e == 0) {
        return Err(TensorError::InvalidShape {
            op,
            shape: shape.to_vec(),
            reason: "every extent must be >= 1".into(),
        });
    }
    let numel: usize = shape.iter().product();
    if numel != len {
        return Err(TensorError::InvalidShape {
            op,
            shape: shape.to_vec(),
            reason: format!("shape holds {numel} elements but buffer has {len}"),
        });
    }
    Ok(())
}

fn check_finite(op: &'static str, data: &[f64]) -> Result<()> {
    for (i, v) in data.iter().enumerate() {
        if !v.is_finite() {
            return Err(TensorError::NonFinite { op, index: i });
        }
    }
    Ok(())
}

impl Tensor {
    // ── construction ────────────────────────────────────────────────────────

    pub fn from_vec(data: Vec<f64>, shape: &[usize]) -> Result<Tensor> {
        check_shape("from_vec", shape, data.len())?;
        check_finite("from_vec", &data)?;
        Ok(Self::leaf(data, shape.to_vec(), false))
    }

    pub fn zeros(shape: &[usize]) -> Result<Tensor> {
        check_shape("zeros", shape, shape.iter().product())?;
        Ok(Self::leaf(
            vec![0.0; shape.iter().product()],
            shape.to_vec(),
            false,
        ))
    }

    pub fn full(shape: &[usize], value: f64) -> Result<Tensor> {
        Self::from_vec(vec![value; shape.iter().product()], shape)
    }

    pub fn scalar(value: f64) -> Tensor {
        Self::from_vec(vec![value], &[1]).expect("scalar is always valid")
    }

    /// Marks this leaf as gradient-tracked and returns it.
    pub fn with_grad(self) -> Tensor {
        self.inner.borrow_mut().requires_grad = true;
        self
    }

    pub(crate) fn leaf(data: Vec<f64>, shape: Vec<usize>, requires_grad: bool) -> Tensor {
        Tensor {
            inner: Rc::new(RefCell::new(Inner {
                data,
                shape,
                requires_grad,
                grad: None,
                op: None,
                backward_done: false,
            })),
        }
    }

    fn from_op(op_name: &'static str, data: Vec<f64>, shape: Vec<usize>, op: Op) -> Result<Tensor> {
        check_finite(op_name, &data)?;
        let requires_grad = op.parents().iter().any(|p| p.requires_grad());
        Ok(Tensor {
            inner: Rc::new(RefCell::new(Inner {
                data,
                shape,
                requires_grad,
                grad: None,
                op: requires_grad.then_some(op),
                backward_done: false,
            })),
        })
    }

    // ── accessors ───────────────────────────────────────────────────────────

    pub fn shape(&self) -> Vec<usize> {
        self.inner.borrow().shape.clone()
    }

    pub fn rank(&self) -> usize {
        self.inner.borrow().shape.len()
    }

    pub fn numel(&self) -> usize {
        self.inner.borrow().data.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.inner.borrow().data.clone()
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.borrow().requires_grad
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.inner.borrow().grad.clone()
    }

    pub fn item(&self) -> Result<f64> {
        let inner = self.inner.borrow();
        if inner.data.len() != 1 {
            return Err(TensorError::InvalidShape {
                op: "item",
                shape: inner.shape.clone(),
                reason: "expected a single element".into(),
            });
        }
        Ok(inner.data[0])
    }

    pub fn get_flat(&self, index: usize) -> f64 {
        self.inner.borrow().data[index]
    }

    /// Overwrites one element in place. Intended for finite-difference probes
    /// and parameter updates on leaves.
    pub fn set_flat(&self, index: usize, value: f64) {
        self.inner.borrow_mut().data[index] = value;
    }

    pub fn fill(&self, value: f64) {
        self.inner.borrow_mut().data.fill(value);
    }

    /// Replaces the whole buffer; the shape must stay compatible.
    pub fn set_data(&self, data: Vec<f64>) -> Result<()> {
        let mut inner = self.inner.borrow_mut();
        if data.len() != inner.data.len() {
            return Err(TensorError::InvalidShape {
                op: "set_data",
                shape: inner.shape.clone(),
                reason: format!("buffer length {} != {}", data.len(), inner.data.len()),
            });
        }
        check_finite("set_data", &data)?;
        inner.data = data;
        Ok(())
    }

    /// A fresh leaf with copied data, detached from any graph.
    pub fn detach(&self) -> Tensor {
        let inner = self.inner.borrow();
        Self::leaf(inner.data.clone(), inner.shape.clone(), false)
    }

    /// Clears the accumulated gradient and re-arms backward.
    pub fn zero_grad(&self) {
        let mut inner = self.inner.borrow_mut();
        inner.grad = None;
        inner.backward_done = false;
    }

    pub(crate) fn ptr_id(&self) -> usize {
        Rc::as_ptr(&self.inner) as usize
    }

    pub(crate) fn accumulate_grad(&self, delta: &[f64]) {
        let mut inner = self.inner.borrow_mut();
        if !inner.requires_grad {
            return;
        }
        let n = inner.data.len();
        let grad = inner.grad.get_or_insert_with(|| vec![0.0; n]);
        for (g, d) in grad.iter_mut().zip(delta) {
            *g += *d;
        }
    }

    // ── autodiff ────────────────────────────────────────────────────────────

    /// Reverse-mode accumulation from a scalar loss into every reachable
    /// gradient-tracked tensor. Running it twice on the same tensor without
    /// [`Tensor::zero_grad`] is an error.
    pub fn backward(&self) -> Result<()> {
        autograd::run_backward(self)
    }

    // ── elementwise ops ─────────────────────────────────────────────────────

    fn binary_check(&self, other: &Tensor, op: &'static str) -> Result<()> {
        let (ls, rs) = (self.shape(), other.shape());
        if ls != rs {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: ls,
                rhs: rs,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.binary_check(other, "add")?;
        let data: Vec<f64> = {
            let a = self.inner.borrow();
            let b = other.inner.borrow();
            a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect()
        };
        Tensor::from_op("add", data, self.shape(), Op::Add(self.clone(), other.clone()))
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.binary_check(other, "sub")?;
        let data: Vec<f64> = {
            let a = self.inner.borrow();
            let b = other.inner.borrow();
            a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect()
        };
        Tensor::from_op("sub", data, self.shape(), Op::Sub(self.clone(), other.clone()))
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.binary_check(other, "mul")?;
        let data: Vec<f64> = {
            let a = self.inner.borrow();
            let b = other.inner.borrow();
            a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect()
        };
        Tensor::from_op("mul", data, self.shape(), Op::Mul(self.clone(), other.clone()))
    }

    pub fn scale(&self, factor: f64) -> Result<Tensor> {
        let data: Vec<f64> = self.inner.borrow().data.iter().map(|x| x * factor).collect();
        Tensor::from_op("scale", data, self.shape(), Op::Scale(self.clone(), factor))
    }

    /// Broadcast-adds a rank-1 bias over the last dimension.
    pub fn add_bias(&self, bias: &Tensor) -> Result<Tensor> {
        let shape = self.shape();
        let bshape = bias.shape();
        let last = *shape.last().expect("tensors are never rank 0");
        if bshape.len() != 1 || bshape[0] != last {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                lhs: shape,
                rhs: bshape,
            });
        }
        let data: Vec<f64> = {
            let x = self.inner.borrow();
            let b = bias.inner.borrow();
            x.data
                .iter()
                .enumerate()
                .map(|(i, v)| v + b.data[i % last])
                .collect()
        };
        Tensor::from_op(
            "add_bias",
            data,
            shape,
            Op::AddBias {
                x: self.clone(),
                bias: bias.clone(),
            },
        )
    }

    pub fn gelu(&self) -> Result<Tensor> {
        let data: Vec<f64> = self
            .inner
            .borrow()
            .data
            .iter()
            .map(|&v| kernels::gelu(v))
            .collect();
        Tensor::from_op("gelu", data, self.shape(), Op::Gelu(self.clone()))
    }

    // ── linear algebra ──────────────────────────────────────────────────────

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (ls, rs) = (self.shape(), other.shape());
        if ls.len() != 2 || rs.len() != 2 || ls[1] != rs[0] {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: ls,
                rhs: rs,
            });
        }
        let (m, k, n) = (ls[0], ls[1], rs[1]);
        let data = {
            let a = self.inner.borrow();
            let b = other.inner.borrow();
            kernels::matmul(&a.data, &b.data, m, k, n)
        };
        Tensor::from_op(
            "matmul",
            data,
            vec![m, n],
            Op::Matmul(self.clone(), other.clone()),
        )
    }

    /// Transposes a rank-2 tensor.
    pub fn transpose(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(TensorError::InvalidShape {
                op: "transpose",
                shape: self.shape(),
                reason: "expected rank 2".into(),
            });
        }
        self.permute(&[1, 0])
    }

    pub fn permute(&self, axes: &[usize]) -> Result<Tensor> {
        let shape = self.shape();
        let mut seen = vec![false; shape.len()];
        let valid = axes.len() == shape.len()
            && axes.iter().all(|&a| {
                if a >= shape.len() || seen[a] {
                    false
                } else {
                    seen[a] = true;
                    true
                }
            });
        if !valid {
            return Err(TensorError::InvalidArgument {
                op: "permute",
                reason: format!("axes {axes:?} is not a permutation of 0..{}", shape.len()),
            });
        }
        let (data, out_shape) = kernels::permute_raw(&self.inner.borrow().data, &shape, axes);
        Tensor::from_op(
            "permute",
            data,
            out_shape,
            Op::Permute {
                x: self.clone(),
                axes: axes.to_vec(),
            },
        )
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        check_shape("reshape", shape, self.numel())?;
        let data = self.inner.borrow().data.clone();
        Tensor::from_op("reshape", data, shape.to_vec(), Op::Reshape(self.clone()))
    }

    pub fn narrow(&self, dim: usize, start: usize, len: usize) -> Result<Tensor> {
        let shape = self.shape();
        if dim >= shape.len() || len == 0 || start + len > shape[dim] {
            return Err(TensorError::InvalidArgument {
                op: "narrow",
                reason: format!(
                    "range {start}..{} out of bounds for dim {dim} of {shape:?}",
                    start + len
                ),
            });
        }
        let data = kernels::narrow_raw(&self.inner.borrow().data, &shape, dim, start, len);
        let mut out_shape = shape;
        out_shape[dim] = len;
        Tensor::from_op(
            "narrow",
            data,
            out_shape,
            Op::Narrow {
                x: self.clone(),
                dim,
                start,
                len,
            },
        )
    }

    pub fn concat(parts: &[Tensor], dim: usize) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(TensorError::InvalidArgument {
                op: "concat",
                reason: "no tensors given".into(),
            });
        }
        let first = parts[0].shape();
        if dim >= first.len() {
            return Err(TensorError::InvalidArgument {
                op: "concat",
                reason: format!("dim {dim} out of bounds for rank {}", first.len()),
            });
        }
        let mut total = 0;
        for p in parts {
            let s = p.shape();
            let compatible = s.len() == first.len()
                && s.iter()
                    .zip(&first)
                    .enumerate()
                    .all(|(d, (a, b))| d == dim || a == b);
            if !compatible {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    lhs: first,
                    rhs: s,
                });
            }
            total += s[dim];
        }
        let mut out_shape = first;
        out_shape[dim] = total;
        let mut data = vec![0.0; out_shape.iter().product()];
        let mut offset = 0;
        for p in parts {
            let ps = p.shape();
            kernels::place_slab(
                &mut data,
                &out_shape,
                dim,
                offset,
                &p.inner.borrow().data,
                ps[dim],
                false,
            );
            offset += ps[dim];
        }
        Tensor::from_op(
            "concat",
            data,
            out_shape,
            Op::Concat {
                parts: parts.to_vec(),
                dim,
            },
        )
    }

    // ── broadcasts ──────────────────────────────────────────────────────────

    /// Repeats the tensor `n` times along a new trailing dimension.
    pub fn broadcast_last(&self, n: usize) -> Result<Tensor> {
        if n == 0 {
            return Err(TensorError::InvalidArgument {
                op: "broadcast_last",
                reason: "extent must be >= 1".into(),
            });
        }
        let mut shape = self.shape();
        let data: Vec<f64> = {
            let inner = self.inner.borrow();
            let mut out = Vec::with_capacity(inner.data.len() * n);
            for &v in &inner.data {
                out.extend(std::iter::repeat(v).take(n));
            }
            out
        };
        shape.push(n);
        Tensor::from_op(
            "broadcast_last",
            data,
            shape,
            Op::BroadcastLast { x: self.clone(), n },
        )
    }

    /// Repeats the tensor `n` times along a new leading dimension.
    pub fn broadcast_first(&self, n: usize) -> Result<Tensor> {
        if n == 0 {
            return Err(TensorError::InvalidArgument {
                op: "broadcast_first",
                reason: "extent must be >= 1".into(),
            });
        }
        let mut shape = self.shape();
        let data: Vec<f64> = {
            let inner = self.inner.borrow();
            let mut out = Vec::with_capacity(inner.data.len() * n);
            for _ in 0..n {
                out.extend_from_slice(&inner.data);
            }
            out
        };
        shape.insert(0, n);
        Tensor::from_op(
            "broadcast_first",
            data,
            shape,
            Op::BroadcastFirst { x: self.clone(), n },
        )
    }

    // ── reductions and nonlinear maps ───────────────────────────────────────

    pub fn sum_all(&self) -> Result<Tensor> {
        let total: f64 = self.inner.borrow().data.iter().sum();
        Tensor::from_op("sum_all", vec![total], vec![1], Op::SumAll(self.clone()))
    }

    pub fn mean_all(&self) -> Result<Tensor> {
        let n = self.numel();
        self.sum_all()?.scale(1.0 / n as f64)
    }

    /// Numerically stable softmax over the last dimension.
    pub fn softmax_lastdim(&self) -> Result<Tensor> {
        let shape = self.shape();
        let last = *shape.last().expect("tensors are never rank 0");
        let data = {
            let inner = self.inner.borrow();
            kernels::softmax_lastdim(&inner.data, last)
                .map_err(|index| TensorError::NonFinite {
                    op: "softmax_lastdim",
                    index,
                })?
        };
        Tensor::from_op(
            "softmax_lastdim",
            data,
            shape,
            Op::SoftmaxLastDim(self.clone()),
        )
    }

    // ── structured ops ──────────────────────────────────────────────────────

    /// 2-D convolution of `self` (B×Cin×H×W) with `weight`
    /// (Cout×Cin/g×kh×kw) and `bias` (Cout).
    pub fn conv2d(&self, weight: &Tensor, bias: &Tensor, spec: &ConvSpec) -> Result<Tensor> {
        let xs = self.shape();
        let ws = weight.shape();
        if xs.len() != 4 || ws.len() != 4 {
            return Err(TensorError::InvalidShape {
                op: "conv2d",
                shape: if xs.len() != 4 { xs } else { ws },
                reason: "expected rank 4".into(),
            });
        }
        if spec.groups == 0 || spec.stride == 0 || spec.dilation == 0 {
            return Err(TensorError::InvalidArgument {
                op: "conv2d",
                reason: "stride, dilation and groups must be >= 1".into(),
            });
        }
        let (bs, cin, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let (cout, cin_g, kh, kw) = (ws[0], ws[1], ws[2], ws[3]);
        if cin % spec.groups != 0 || cout % spec.groups != 0 {
            return Err(TensorError::InvalidArgument {
                op: "conv2d",
                reason: format!(
                    "channels (in {cin}, out {cout}) must be divisible by groups {}",
                    spec.groups
                ),
            });
        }
        if cin_g != cin / spec.groups {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                lhs: xs,
                rhs: ws,
            });
        }
        if bias.shape() != [cout] {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                lhs: vec![cout],
                rhs: bias.shape(),
            });
        }
        let (oh, ow) = match (
            kernels::conv_out_extent(h, kh, spec),
            kernels::conv_out_extent(w, kw, spec),
        ) {
            (Some(oh), Some(ow)) if oh > 0 && ow > 0 => (oh, ow),
            _ => {
                return Err(TensorError::InvalidShape {
                    op: "conv2d",
                    shape: xs,
                    reason: format!("kernel {kh}x{kw} does not fit with {spec:?}"),
                })
            }
        };
        let data = {
            let x = self.inner.borrow();
            let wg = weight.inner.borrow();
            let b = bias.inner.borrow();
            kernels::conv2d(
                &x.data,
                (bs, cin, h, w),
                &wg.data,
                (cout, cin_g, kh, kw),
                &b.data,
                spec,
                (oh, ow),
            )
        };
        Tensor::from_op(
            "conv2d",
            data,
            vec![bs, cout, oh, ow],
            Op::Conv2d {
                x: self.clone(),
                weight: weight.clone(),
                bias: bias.clone(),
                spec: *spec,
            },
        )
    }

    /// Bilinear resampling (align_corners = false) of a B×C×H×W tensor.
    pub fn upsample_bilinear(&self, out_h: usize, out_w: usize) -> Result<Tensor> {
        let xs = self.shape();
        if xs.len() != 4 {
            return Err(TensorError::InvalidShape {
                op: "upsample_bilinear",
                shape: xs,
                reason: "expected rank 4".into(),
            });
        }
        if out_h == 0 || out_w == 0 {
            return Err(TensorError::InvalidArgument {
                op: "upsample_bilinear",
                reason: "output extents must be >= 1".into(),
            });
        }
        let (bs, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let data = kernels::upsample_bilinear(
            &self.inner.borrow().data,
            (bs, c, h, w),
            (out_h, out_w),
        );
        Tensor::from_op(
            "upsample_bilinear",
            data,
            vec![bs, c, out_h, out_w],
            Op::UpsampleBilinear { x: self.clone() },
        )
    }

    /// Mean negative log-likelihood of `targets` under row-wise softmax.
    /// `self` is M×K logits; `None` marks an ignored row.
    pub fn cross_entropy(&self, targets: &[Option<u32>]) -> Result<Tensor> {
        let shape = self.shape();
        if shape.len() != 2 {
            return Err(TensorError::InvalidShape {
                op: "cross_entropy",
                shape,
                reason: "expected rank-2 logits".into(),
            });
        }
        let (m, k) = (shape[0], shape[1]);
        if targets.len() != m {
            return Err(TensorError::InvalidArgument {
                op: "cross_entropy",
                reason: format!("{} targets for {m} rows", targets.len()),
            });
        }
        let mut valid = 0usize;
        for (i, t) in targets.iter().enumerate() {
            if let Some(t) = t {
                if *t as usize >= k {
                    return Err(TensorError::LabelOutOfRange {
                        index: i,
                        label: *t,
                        classes: k,
                    });
                }
                valid += 1;
            }
        }
        if valid == 0 {
            return Err(TensorError::AllIgnored);
        }
        let loss = kernels::cross_entropy(&self.inner.borrow().data, k, targets, valid);
        Tensor::from_op(
            "cross_entropy",
            vec![loss],
            vec![1],
            Op::CrossEntropy {
                logits: self.clone(),
                targets: targets.to_vec(),
                valid,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity_leaves_matrix_unchanged() {
        let eye = Tensor::from_vec(
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            &[3, 3],
        )
        .unwrap();
        let m = Tensor::from_vec((1..=9).map(f64::from).collect(), &[3, 3]).unwrap();
        assert_eq!(eye.matmul(&m).unwrap().to_vec(), m.to_vec());
    }

    #[test]
    fn matmul_hand_arithmetic() {
        let a = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[2, 2]).unwrap();
        let b = Tensor::from_vec(vec![0.0, 1.0], &[2, 1]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().to_vec(), vec![2.0, 4.0]);
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]).unwrap();
        let b = Tensor::zeros(&[4, 2]).unwrap();
        let msg = a.matmul(&b).unwrap_err().to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[4, 2]"), "{msg}");
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let y = Tensor::zeros(&[3])
            .unwrap()
            .softmax_lastdim()
            .unwrap()
            .to_vec();
        for v in y {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let y = Tensor::from_vec(vec![1000.0, 0.0], &[2])
            .unwrap()
            .softmax_lastdim()
            .unwrap()
            .to_vec();
        assert!((y[0] - 1.0).abs() < 1e-12 && y[1] < 1e-12);
    }

    #[test]
    fn conv2d_1x1_identity_weight_is_identity() {
        let x = Tensor::from_vec((0..16).map(f64::from).collect(), &[1, 1, 4, 4]).unwrap();
        let w = Tensor::from_vec(vec![1.0], &[1, 1, 1, 1]).unwrap();
        let b = Tensor::zeros(&[1]).unwrap();
        let y = x.conv2d(&w, &b, &ConvSpec::default()).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn conv2d_box_kernel_counts_neighbours() {
        let x = Tensor::full(&[1, 1, 5, 5], 1.0).unwrap();
        let w = Tensor::full(&[1, 1, 3, 3], 1.0).unwrap();
        let b = Tensor::zeros(&[1]).unwrap();
        let spec = ConvSpec {
            padding: 1,
            ..ConvSpec::default()
        };
        let y = x.conv2d(&w, &b, &spec).unwrap();
        assert_eq!(y.shape(), vec![1, 1, 5, 5]);
        assert_eq!(y.to_vec()[2 * 5 + 2], 9.0);
        assert_eq!(y.to_vec()[0], 4.0); // corner sees a 2x2 window
    }

    #[test]
    fn conv2d_channel_mismatch_is_error() {
        let x = Tensor::zeros(&[1, 3, 4, 4]).unwrap();
        let w = Tensor::zeros(&[2, 2, 1, 1]).unwrap();
        let b = Tensor::zeros(&[2]).unwrap();
        assert!(x.conv2d(&w, &b, &ConvSpec::default()).is_err());
    }

    #[test]
    fn conv2d_indivisible_groups_is_error() {
        let x = Tensor::zeros(&[1, 3, 4, 4]).unwrap();
        let w = Tensor::zeros(&[2, 1, 1, 1]).unwrap();
        let b = Tensor::zeros(&[2]).unwrap();
        let spec = ConvSpec {
            groups: 2,
            ..ConvSpec::default()
        };
        assert!(x.conv2d(&w, &b, &spec).is_err());
    }

    #[test]
    fn narrow_and_concat_roundtrip() {
        let x = Tensor::from_vec((0..12).map(f64::from).collect(), &[2, 6]).unwrap();
        let lo = x.narrow(1, 0, 2).unwrap();
        let hi = x.narrow(1, 2, 4).unwrap();
        let back = Tensor::concat(&[lo, hi], 1).unwrap();
        assert_eq!(back.to_vec(), x.to_vec());
    }

    #[test]
    fn permute_then_inverse_is_identity() {
        let x = Tensor::from_vec((0..24).map(f64::from).collect(), &[2, 3, 4]).unwrap();
        let y = x.permute(&[2, 0, 1]).unwrap();
        assert_eq!(y.shape(), vec![4, 2, 3]);
        let back = y.permute(&[1, 2, 0]).unwrap();
        assert_eq!(back.to_vec(), x.to_vec());
    }

    #[test]
    fn broadcast_shapes() {
        let x = Tensor::from_vec(vec![1.0, 2.0], &[2]).unwrap();
        assert_eq!(
            x.broadcast_last(3).unwrap().to_vec(),
            vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]
        );
        assert_eq!(
            x.broadcast_first(2).unwrap().to_vec(),
            vec![1.0, 2.0, 1.0, 2.0]
        );
    }

    #[test]
    fn cross_entropy_rejects_bad_targets() {
        let logits = Tensor::zeros(&[2, 3]).unwrap();
        assert!(matches!(
            logits.cross_entropy(&[Some(3), Some(0)]),
            Err(TensorError::LabelOutOfRange { label: 3, .. })
        ));
        assert!(matches!(
            logits.cross_entropy(&[None, None]),
            Err(TensorError::AllIgnored)
        ));
    }

    #[test]
    fn constructors_reject_non_finite() {
        assert!(Tensor::from_vec(vec![1.0, f64::NAN], &[2]).is_err());
        assert!(Tensor::from_vec(vec![f64::INFINITY], &[1]).is_err());
    }
}
