//! Numeric ops against independent brute-force oracles.
//!
//! Every oracle here is written from the mathematical definition, separate
//! from the library kernels, so the two can disagree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tspkit_tensor::{ConvSpec, Tensor};

fn rand_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

// ── matmul ──────────────────────────────────────────────────────────────────

fn matmul_oracle(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for l in 0..k {
                acc += a[i * k + l] * b[l * n + j];
            }
            c[i * n + j] = acc;
        }
    }
    c
}

#[test]
fn matmul_matches_triple_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (m, k, n) = (
            rng.random_range(1..=8),
            rng.random_range(1..=8),
            rng.random_range(1..=8),
        );
        let a = rand_vec(&mut rng, m * k, -2.0, 2.0);
        let b = rand_vec(&mut rng, k * n, -2.0, 2.0);
        let got = Tensor::from_vec(a.clone(), &[m, k])
            .unwrap()
            .matmul(&Tensor::from_vec(b.clone(), &[k, n]).unwrap())
            .unwrap()
            .to_vec();
        let want = matmul_oracle(&a, &b, m, k, n);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "matmul {m}x{k}x{n}: {g} vs {w}");
        }
    }
}

#[test]
fn matmul_random_5x4_4x3_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(5443);
    let a = rand_vec(&mut rng, 20, -3.0, 3.0);
    let b = rand_vec(&mut rng, 12, -3.0, 3.0);
    let got = Tensor::from_vec(a.clone(), &[5, 4])
        .unwrap()
        .matmul(&Tensor::from_vec(b.clone(), &[4, 3]).unwrap())
        .unwrap()
        .to_vec();
    let want = matmul_oracle(&a, &b, 5, 4, 3);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
}

// ── softmax ─────────────────────────────────────────────────────────────────

fn softmax_oracle(row: &[f64]) -> Vec<f64> {
    let sum: f64 = row.iter().map(|v| v.exp()).sum();
    row.iter().map(|v| v.exp() / sum).collect()
}

#[test]
fn softmax_matches_direct_formula_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let row = rand_vec(&mut rng, n, -6.0, 6.0);
        let got = Tensor::from_vec(row.clone(), &[n])
            .unwrap()
            .softmax_lastdim()
            .unwrap()
            .to_vec();
        let want = softmax_oracle(&row);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "softmax: {g} vs {w}");
        }
    }
}

// ── conv2d ──────────────────────────────────────────────────────────────────

struct ConvCase {
    x: Vec<f64>,
    w: Vec<f64>,
    bias: Vec<f64>,
    bs: usize,
    cin: usize,
    h: usize,
    wd: usize,
    cout: usize,
    k: usize,
    spec: ConvSpec,
}

/// Direct definition: six nested loops over the output and the kernel taps,
/// with explicit zero padding and group bookkeeping.
fn conv_oracle(c: &ConvCase) -> (Vec<f64>, usize, usize) {
    let g = c.spec.groups;
    let (cin_g, cout_g) = (c.cin / g, c.cout / g);
    let span = c.spec.dilation * (c.k - 1) + 1;
    let oh = (c.h + 2 * c.spec.padding - span) / c.spec.stride + 1;
    let ow = (c.wd + 2 * c.spec.padding - span) / c.spec.stride + 1;
    let mut out = vec![0.0; c.bs * c.cout * oh * ow];
    for b in 0..c.bs {
        for oc in 0..c.cout {
            let group = oc / cout_g;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = c.bias[oc];
                    for ic in 0..cin_g {
                        for ky in 0..c.k {
                            for kx in 0..c.k {
                                let iy = (oy * c.spec.stride + ky * c.spec.dilation) as isize
                                    - c.spec.padding as isize;
                                let ix = (ox * c.spec.stride + kx * c.spec.dilation) as isize
                                    - c.spec.padding as isize;
                                if iy < 0 || ix < 0 || iy >= c.h as isize || ix >= c.wd as isize {
                                    continue;
                                }
                                let xv = c.x[((b * c.cin + group * cin_g + ic) * c.h
                                    + iy as usize)
                                    * c.wd
                                    + ix as usize];
                                let wv = c.w[((oc * cin_g + ic) * c.k + ky) * c.k + kx];
                                acc += xv * wv;
                            }
                        }
                    }
                    out[((b * c.cout + oc) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    (out, oh, ow)
}

fn run_conv(c: &ConvCase) -> Vec<f64> {
    let x = Tensor::from_vec(c.x.clone(), &[c.bs, c.cin, c.h, c.wd]).unwrap();
    let w = Tensor::from_vec(
        c.w.clone(),
        &[c.cout, c.cin / c.spec.groups, c.k, c.k],
    )
    .unwrap();
    let bias = Tensor::from_vec(c.bias.clone(), &[c.cout]).unwrap();
    x.conv2d(&w, &bias, &c.spec).unwrap().to_vec()
}

#[test]
fn conv2d_matches_six_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..40 {
        let groups = [1, 1, 2][rng.random_range(0..3)];
        let cin = groups * rng.random_range(1..=2);
        let cout = groups * rng.random_range(1..=2);
        let k = rng.random_range(1..=3);
        let dilation = rng.random_range(1..=2);
        let span = dilation * (k - 1) + 1;
        let h = rng.random_range(span..=8);
        let wd = rng.random_range(span..=8);
        let case = ConvCase {
            x: rand_vec(&mut rng, cin * h * wd, -2.0, 2.0),
            w: rand_vec(&mut rng, cout * (cin / groups) * k * k, -2.0, 2.0),
            bias: rand_vec(&mut rng, cout, -1.0, 1.0),
            bs: 1,
            cin,
            h,
            wd,
            cout,
            k,
            spec: ConvSpec {
                stride: rng.random_range(1..=2),
                padding: rng.random_range(0..=2),
                dilation,
                groups,
            },
        };
        let got = run_conv(&case);
        let (want, _, _) = conv_oracle(&case);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "conv: {g} vs {w}");
        }
    }
}

#[test]
fn conv2d_dilation_2_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(312);
    let case = ConvCase {
        x: rand_vec(&mut rng, 2 * 7 * 7, -1.0, 1.0),
        w: rand_vec(&mut rng, 3 * 2 * 3 * 3, -1.0, 1.0),
        bias: rand_vec(&mut rng, 3, -1.0, 1.0),
        bs: 1,
        cin: 2,
        h: 7,
        wd: 7,
        cout: 3,
        k: 3,
        spec: ConvSpec {
            stride: 1,
            padding: 2,
            dilation: 2,
            groups: 1,
        },
    };
    let got = run_conv(&case);
    let (want, oh, ow) = conv_oracle(&case);
    assert_eq!((oh, ow), (7, 7));
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-10);
    }
}

// ── bilinear resampling ─────────────────────────────────────────────────────

#[test]
fn upsample_2x2_to_4x4_matches_per_pixel_oracle() {
    // align_corners=false: src = (dst + 0.5) / 2 - 0.5, clamped at the border.
    // For 2 -> 4 the per-axis source positions are [0, 0.25, 0.75, 1].
    let x = Tensor::from_vec(vec![0.0, 1.0, 2.0, 3.0], &[1, 1, 2, 2]).unwrap();
    let got = x.upsample_bilinear(4, 4).unwrap().to_vec();
    let pos = [0.0, 0.25, 0.75, 1.0];
    for (oy, &sy) in pos.iter().enumerate() {
        for (ox, &sx) in pos.iter().enumerate() {
            // value(y, x) = 2y + x on the source grid
            let want = 2.0 * sy + sx;
            let g = got[oy * 4 + ox];
            assert!((g - want).abs() < 1e-12, "({oy},{ox}): {g} vs {want}");
        }
    }
}

#[test]
fn upsample_same_size_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = rand_vec(&mut rng, 2 * 3 * 5 * 4, -2.0, 2.0);
    let x = Tensor::from_vec(data.clone(), &[2, 3, 5, 4]).unwrap();
    assert_eq!(x.upsample_bilinear(5, 4).unwrap().to_vec(), data);
}

#[test]
fn upsample_constant_stays_constant() {
    let x = Tensor::full(&[1, 2, 3, 3], 2.5).unwrap();
    for v in x.upsample_bilinear(7, 5).unwrap().to_vec() {
        assert!((v - 2.5).abs() < 1e-12);
    }
}

// ── cross entropy ───────────────────────────────────────────────────────────

fn cross_entropy_oracle(logits: &[f64], k: usize, targets: &[Option<u32>]) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    for (row, t) in logits.chunks(k).zip(targets) {
        let Some(t) = t else { continue };
        let p = softmax_oracle(row);
        total += -p[*t as usize].ln();
        count += 1;
    }
    total / count as f64
}

#[test]
fn cross_entropy_matches_per_row_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for _ in 0..100 {
        let m = rng.random_range(1..=10);
        let k = rng.random_range(2..=6);
        let logits = rand_vec(&mut rng, m * k, -4.0, 4.0);
        let targets: Vec<Option<u32>> = (0..m)
            .map(|_| {
                if rng.random_range(0..4) == 0 {
                    None
                } else {
                    Some(rng.random_range(0..k as u32))
                }
            })
            .collect();
        if targets.iter().all(Option::is_none) {
            continue;
        }
        let got = Tensor::from_vec(logits.clone(), &[m, k])
            .unwrap()
            .cross_entropy(&targets)
            .unwrap()
            .item()
            .unwrap();
        let want = cross_entropy_oracle(&logits, k, &targets);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}
