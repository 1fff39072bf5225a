//! Raw numeric kernels working on flat row-major buffers.
//!
//! Forward and backward pairs live next to each other so the index
//! arithmetic stays in sync. All loops run in a fixed order; results are
//! bit-reproducible for identical inputs.

/// Row-major strides for a shape.
pub fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

// ── structural ops ──────────────────────────────────────────────────────────

/// Reorders axes; returns the new buffer and its shape.
pub fn permute_raw(x: &[f64], shape: &[usize], axes: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let in_strides = strides_of(shape);
    let out_strides = strides_of(&out_shape);
    let mut out = vec![0.0; x.len()];
    for (of, slot) in out.iter_mut().enumerate() {
        let mut rem = of;
        let mut inf = 0;
        for (d, &axis) in axes.iter().enumerate() {
            inf += (rem / out_strides[d]) * in_strides[axis];
            rem %= out_strides[d];
        }
        *slot = x[inf];
    }
    (out, out_shape)
}

/// Copies the `start..start+len` slab of `dim` out of `x`.
pub fn narrow_raw(x: &[f64], shape: &[usize], dim: usize, start: usize, len: usize) -> Vec<f64> {
    let outer: usize = shape[..dim].iter().product();
    let inner: usize = shape[dim + 1..].iter().product();
    let extent = shape[dim];
    let mut out = Vec::with_capacity(outer * len * inner);
    for o in 0..outer {
        let base = (o * extent + start) * inner;
        out.extend_from_slice(&x[base..base + len * inner]);
    }
    out
}

/// Writes `src` (a slab spanning `len` along `dim`) into `dst` at `offset`.
/// With `accumulate`, adds instead of overwriting.
pub fn place_slab(
    dst: &mut [f64],
    dst_shape: &[usize],
    dim: usize,
    offset: usize,
    src: &[f64],
    len: usize,
    accumulate: bool,
) {
    let outer: usize = dst_shape[..dim].iter().product();
    let inner: usize = dst_shape[dim + 1..].iter().product();
    let extent = dst_shape[dim];
    let block = len * inner;
    for o in 0..outer {
        let dst_base = (o * extent + offset) * inner;
        let src_base = o * block;
        let d = &mut dst[dst_base..dst_base + block];
        let s = &src[src_base..src_base + block];
        if accumulate {
            for (dv, sv) in d.iter_mut().zip(s) {
                *dv += *sv;
            }
        } else {
            d.copy_from_slice(s);
        }
    }
}

// ── matmul ──────────────────────────────────────────────────────────────────

/// C[m×n] = A[m×k] · B[k×n].
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for l in 0..k {
            let a_il = a[i * k + l];
            let b_row = &b[l * n..(l + 1) * n];
            let c_row = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                c_row[j] += a_il * b_row[j];
            }
        }
    }
    c
}

/// dA[m×k] += G[m×n] · Bᵀ, dB[k×n] += Aᵀ · G[m×n].
pub fn matmul_backward(
    a: &[f64],
    b: &[f64],
    g: &[f64],
    m: usize,
    k: usize,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut da = vec![0.0; m * k];
    let mut db = vec![0.0; k * n];
    for i in 0..m {
        for l in 0..k {
            let mut acc = 0.0;
            for j in 0..n {
                acc += g[i * n + j] * b[l * n + j];
            }
            da[i * k + l] = acc;
        }
    }
    for l in 0..k {
        for i in 0..m {
            let a_il = a[i * k + l];
            for j in 0..n {
                db[l * n + j] += a_il * g[i * n + j];
            }
        }
    }
    (da, db)
}

// ── softmax over the last dimension ─────────────────────────────────────────

/// Max-subtracted softmax over each contiguous slice of length `last`.
/// Returns the flat index of the first NaN input, if any.
pub fn softmax_lastdim(x: &[f64], last: usize) -> Result<Vec<f64>, usize> {
    let mut y = vec![0.0; x.len()];
    for (r, row) in x.chunks_exact(last).enumerate() {
        let mut max = f64::NEG_INFINITY;
        for (j, &v) in row.iter().enumerate() {
            if v.is_nan() {
                return Err(r * last + j);
            }
            if v > max {
                max = v;
            }
        }
        let out = &mut y[r * last..(r + 1) * last];
        let mut sum = 0.0;
        for (o, &v) in out.iter_mut().zip(row) {
            *o = (v - max).exp();
            sum += *o;
        }
        for o in out.iter_mut() {
            *o /= sum;
        }
    }
    Ok(y)
}

/// dx_i = y_i · (g_i − Σ_j g_j y_j), per row.
pub fn softmax_lastdim_backward(y: &[f64], g: &[f64], last: usize) -> Vec<f64> {
    let mut dx = vec![0.0; y.len()];
    for r in 0..y.len() / last {
        let yr = &y[r * last..(r + 1) * last];
        let gr = &g[r * last..(r + 1) * last];
        let mut dot = 0.0;
        for j in 0..last {
            dot += gr[j] * yr[j];
        }
        let dr = &mut dx[r * last..(r + 1) * last];
        for j in 0..last {
            dr[j] = yr[j] * (gr[j] - dot);
        }
    }
    dx
}

// ── GELU (tanh approximation) ───────────────────────────────────────────────

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

// ── 2-D convolution ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub stride: usize,
    pub padding: usize,
    pub dilation: usize,
    pub groups: usize,
}

impl Default for ConvSpec {
    fn default() -> Self {
        ConvSpec {
            stride: 1,
            padding: 0,
            dilation: 1,
            groups: 1,
        }
    }
}

/// Output spatial extent for one axis, or None when the kernel does not fit.
pub fn conv_out_extent(input: usize, kernel: usize, spec: &ConvSpec) -> Option<usize> {
    let span = spec.dilation * (kernel - 1) + 1;
    let padded = input + 2 * spec.padding;
    if padded < span {
        return None;
    }
    Some((padded - span) / spec.stride + 1)
}

#[allow(clippy::too_many_arguments)]
pub fn conv2d(
    x: &[f64],
    (bs, cin, h, w): (usize, usize, usize, usize),
    wgt: &[f64],
    (cout, cin_g, kh, kw): (usize, usize, usize, usize),
    bias: &[f64],
    spec: &ConvSpec,
    (oh, ow): (usize, usize),
) -> Vec<f64> {
    let cout_g = cout / spec.groups;
    let mut out = vec![0.0; bs * cout * oh * ow];
    for b in 0..bs {
        for gi in 0..spec.groups {
            for ocl in 0..cout_g {
                let oc = gi * cout_g + ocl;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = bias[oc];
                        for ic in 0..cin_g {
                            let icg = gi * cin_g + ic;
                            for ky in 0..kh {
                                let iy = (oy * spec.stride + ky * spec.dilation) as isize
                                    - spec.padding as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for kx in 0..kw {
                                    let ix = (ox * spec.stride + kx * spec.dilation) as isize
                                        - spec.padding as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    let xi = ((b * cin + icg) * h + iy as usize) * w + ix as usize;
                                    let wi = ((oc * cin_g + ic) * kh + ky) * kw + kx;
                                    acc += x[xi] * wgt[wi];
                                }
                            }
                        }
                        out[((b * cout + oc) * oh + oy) * ow + ox] = acc;
                    }
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward(
    x: &[f64],
    (bs, cin, h, w): (usize, usize, usize, usize),
    wgt: &[f64],
    (cout, cin_g, kh, kw): (usize, usize, usize, usize),
    g: &[f64],
    spec: &ConvSpec,
    (oh, ow): (usize, usize),
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let cout_g = cout / spec.groups;
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; wgt.len()];
    let mut db = vec![0.0; cout];
    for b in 0..bs {
        for gi in 0..spec.groups {
            for ocl in 0..cout_g {
                let oc = gi * cout_g + ocl;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let go = g[((b * cout + oc) * oh + oy) * ow + ox];
                        db[oc] += go;
                        for ic in 0..cin_g {
                            let icg = gi * cin_g + ic;
                            for ky in 0..kh {
                                let iy = (oy * spec.stride + ky * spec.dilation) as isize
                                    - spec.padding as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for kx in 0..kw {
                                    let ix = (ox * spec.stride + kx * spec.dilation) as isize
                                        - spec.padding as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    let xi = ((b * cin + icg) * h + iy as usize) * w + ix as usize;
                                    let wi = ((oc * cin_g + ic) * kh + ky) * kw + kx;
                                    dx[xi] += go * wgt[wi];
                                    dw[wi] += go * x[xi];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (dx, dw, db)
}

// ── bilinear resampling (align_corners = false) ─────────────────────────────

/// Per-output-coordinate interpolation taps: (lo index, hi index, hi weight).
pub fn bilinear_taps(input: usize, output: usize) -> Vec<(usize, usize, f64)> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
            let lo = (src.floor() as usize).min(input - 1);
            let hi = (lo + 1).min(input - 1);
            (lo, hi, src - lo as f64)
        })
        .collect()
}

pub fn upsample_bilinear(
    x: &[f64],
    (bs, c, h, w): (usize, usize, usize, usize),
    (oh, ow): (usize, usize),
) -> Vec<f64> {
    let ty = bilinear_taps(h, oh);
    let tx = bilinear_taps(w, ow);
    let mut out = vec![0.0; bs * c * oh * ow];
    for bc in 0..bs * c {
        let plane = &x[bc * h * w..(bc + 1) * h * w];
        let oplane = &mut out[bc * oh * ow..(bc + 1) * oh * ow];
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let v00 = plane[y0 * w + x0];
                let v01 = plane[y0 * w + x1];
                let v10 = plane[y1 * w + x0];
                let v11 = plane[y1 * w + x1];
                let top = v00 + fx * (v01 - v00);
                let bot = v10 + fx * (v11 - v10);
                oplane[oy * ow + ox] = top + fy * (bot - top);
            }
        }
    }
    out
}

pub fn upsample_bilinear_backward(
    g: &[f64],
    (bs, c, h, w): (usize, usize, usize, usize),
    (oh, ow): (usize, usize),
) -> Vec<f64> {
    let ty = bilinear_taps(h, oh);
    let tx = bilinear_taps(w, ow);
    let mut dx = vec![0.0; bs * c * h * w];
    for bc in 0..bs * c {
        let gplane = &g[bc * oh * ow..(bc + 1) * oh * ow];
        let dplane = &mut dx[bc * h * w..(bc + 1) * h * w];
        for (oy, &(y0, y1, fy)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in tx.iter().enumerate() {
                let go = gplane[oy * ow + ox];
                dplane[y0 * w + x0] += go * (1.0 - fy) * (1.0 - fx);
                dplane[y0 * w + x1] += go * (1.0 - fy) * fx;
                dplane[y1 * w + x0] += go * fy * (1.0 - fx);
                dplane[y1 * w + x1] += go * fy * fx;
            }
        }
    }
    dx
}

// ── cross entropy over rows ─────────────────────────────────────────────────

/// Mean of −log softmax(row)[target] over rows with a target.
/// Targets are pre-validated by the caller.
pub fn cross_entropy(logits: &[f64], k: usize, targets: &[Option<u32>], valid: usize) -> f64 {
    let mut total = 0.0;
    for (row, t) in logits.chunks_exact(k).zip(targets) {
        let Some(t) = t else { continue };
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[*t as usize];
    }
    total / valid as f64
}

/// dlogits = g · (softmax(row) − onehot(target)) / valid, zero for ignored rows.
pub fn cross_entropy_backward(
    logits: &[f64],
    k: usize,
    targets: &[Option<u32>],
    valid: usize,
    g: f64,
) -> Vec<f64> {
    let mut dl = vec![0.0; logits.len()];
    let scale = g / valid as f64;
    for (r, (row, t)) in logits.chunks_exact(k).zip(targets).enumerate() {
        let Some(t) = t else { continue };
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        let out = &mut dl[r * k..(r + 1) * k];
        for (o, &v) in out.iter_mut().zip(row) {
            *o = (v - max).exp();
            sum += *o;
        }
        for o in out.iter_mut() {
            *o /= sum;
        }
        out[*t as usize] -= 1.0;
        for o in out.iter_mut() {
            *o *= scale;
        }
    }
    dl
}
