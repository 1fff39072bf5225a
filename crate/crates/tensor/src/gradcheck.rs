//! Central finite-difference verification of analytic gradients.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

/// Below this magnitude the relative error switches to an absolute scale:
/// central differences in f64 carry ~1e-10 of noise, so ratios against
/// near-zero gradients would be meaningless.
const REL_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Finite-difference step h.
    pub step: f64,
    /// Pass threshold on the max relative error.
    pub tolerance: f64,
    /// Probe at most this many elements per input (None = all of them).
    pub samples_per_tensor: Option<usize>,
    /// Seed for probe selection and the scalarizing projection.
    pub seed: u64,
    /// Negative-control hook: adds this delta to every analytic gradient
    /// before comparison, so a wired-up check can be proven able to fail.
    pub sabotage: Option<f64>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            tolerance: 1e-4,
            samples_per_tensor: None,
            seed: 0x7359,
            sabotage: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub probes: usize,
    pub tolerance: f64,
    /// (input index, flat element index) of the worst probe.
    pub worst: Option<(usize, usize)>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "max rel err {:.3e} over {} probes (tolerance {:.1e}): {}",
            self.max_rel_err,
            self.probes,
            self.tolerance,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

/// Compares the analytic gradient of `f` at `inputs` against central finite
/// differences. `f` may return any shape; non-scalar outputs are contracted
/// to a scalar with a fixed random projection so that every output element
/// influences the check. `f` is evaluated twice up front and must reproduce
/// its output bit-for-bit.
pub fn grad_check<F>(f: F, inputs: &[Tensor], cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: Fn(&[Tensor]) -> Result<Tensor>,
{
    for (i, t) in inputs.iter().enumerate() {
        if !t.requires_grad() {
            return Err(TensorError::InvalidArgument {
                op: "grad_check",
                reason: format!("input {i} is not gradient-tracked"),
            });
        }
    }

    let first = f(inputs)?;
    let second = f(inputs)?;
    let (a, b) = (first.to_vec(), second.to_vec());
    if a.len() != b.len() {
        return Err(TensorError::NonDeterministic {
            index: 0,
            first: a.len() as f64,
            second: b.len() as f64,
        });
    }
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        if x.to_bits() != y.to_bits() {
            return Err(TensorError::NonDeterministic {
                index: i,
                first: *x,
                second: *y,
            });
        }
    }

    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let projection = if first.numel() == 1 {
        None
    } else {
        let weights: Vec<f64> = (0..first.numel())
            .map(|_| rng.random_range(0.5..1.5))
            .collect();
        Some(Tensor::from_vec(weights, &first.shape())?)
    };
    let scalarize = |out: Tensor| -> Result<Tensor> {
        match &projection {
            Some(w) => out.mul(w)?.sum_all(),
            None => Ok(out),
        }
    };

    for t in inputs {
        t.zero_grad();
    }
    let loss = scalarize(f(inputs)?)?;
    loss.backward()?;
    let mut analytic: Vec<Vec<f64>> = inputs
        .iter()
        .map(|t| t.grad().unwrap_or_else(|| vec![0.0; t.numel()]))
        .collect();
    if let Some(delta) = cfg.sabotage {
        for g in analytic.iter_mut().flatten() {
            *g += delta;
        }
    }

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        probes: 0,
        tolerance: cfg.tolerance,
        worst: None,
    };
    for (ti, t) in inputs.iter().enumerate() {
        let n = t.numel();
        let indices: Vec<usize> = match cfg.samples_per_tensor {
            Some(k) if k < n => rand::seq::index::sample(&mut rng, n, k).into_vec(),
            _ => (0..n).collect(),
        };
        for j in indices {
            let orig = t.get_flat(j);
            t.set_flat(j, orig + cfg.step);
            let plus = scalarize(f(inputs)?)?.item()?;
            t.set_flat(j, orig - cfg.step);
            let minus = scalarize(f(inputs)?)?.item()?;
            t.set_flat(j, orig);
            let numeric = (plus - minus) / (2.0 * cfg.step);
            let a = analytic[ti][j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            report.probes += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = Some((ti, j));
            }
        }
    }
    for t in inputs {
        t.zero_grad();
    }
    Ok(report)
}
