//! Uniform sub-sampling for finite-sum problems and a-priori sample sizes.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::Oracle;

/// Requested batch size: absolute count or fraction of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSize {
    Count(usize),
    Ratio(f64),
}

impl SampleSize {
    /// Resolved size for `n` components. Ratios round up and never go below one.
    pub fn resolve(&self, n: usize, with_replacement: bool) -> Result<usize> {
        let size = match *self {
            SampleSize::Count(0) => return Err(Error::usage("sample size must be at least 1")),
            SampleSize::Count(k) => k,
            SampleSize::Ratio(r) if r > 0.0 && r <= 1.0 => ((r * n as f64).ceil() as usize).max(1),
            SampleSize::Ratio(r) => {
                return Err(Error::usage(format!("sample ratio {r} is outside (0, 1]")))
            }
        };
        if !with_replacement && size > n {
            return Err(Error::usage(format!(
                "cannot draw {size} of {n} components without replacement"
            )));
        }
        Ok(size)
    }
}

/// Independent random streams within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleRole {
    Gradient = 0,
    Hessian = 1,
    Curvature = 2,
}

/// Deterministic generator keyed by `(seed, iteration, role)`.
pub fn stream_rng(seed: u64, iteration: u64, role: SampleRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration.wrapping_mul(4).wrapping_add(role as u64));
    rng
}

/// `size` i.i.d. uniform draws from `0..n`, with replacement.
pub fn draw_sample<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Vec<usize> {
    assert!(
        n >= 1 && size >= 1,
        "draw_sample needs n >= 1 and size >= 1"
    );
    (0..size).map(|_| rng.gen_range(0..n)).collect()
}

/// `size` distinct uniform indices from `0..n`, in draw order.
pub fn draw_sample_without_replacement<R: Rng + ?Sized>(
    n: usize,
    size: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if size == 0 || size > n {
        return Err(Error::usage(format!(
            "cannot draw {size} distinct indices from {n}"
        )));
    }
    Ok(index::sample(rng, n, size).into_vec())
}

/// Which estimates are sub-sampled, and how. `None` means exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    pub gradient: Option<SampleSize>,
    pub hessian: Option<SampleSize>,
    pub with_replacement: bool,
    /// Draw fresh batches every outer iteration; otherwise the first
    /// iteration's batches are reused throughout.
    pub resample_each_iteration: bool,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self::exact(42)
    }
}

impl SampleConfig {
    pub fn exact(seed: u64) -> Self {
        Self {
            gradient: None,
            hessian: None,
            with_replacement: true,
            resample_each_iteration: true,
            seed,
        }
    }

    /// Exact gradient, sub-sampled Hessian.
    pub fn sub_hessian(hessian: SampleSize, seed: u64) -> Self {
        Self {
            hessian: Some(hessian),
            ..Self::exact(seed)
        }
    }

    /// Both estimates sub-sampled.
    pub fn inexact(gradient: SampleSize, hessian: SampleSize, seed: u64) -> Self {
        Self {
            gradient: Some(gradient),
            hessian: Some(hessian),
            ..Self::exact(seed)
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for size in [self.gradient, self.hessian].into_iter().flatten() {
            size.resolve(n, self.with_replacement)?;
        }
        Ok(())
    }

    fn draw(
        &self,
        size: Option<SampleSize>,
        n: usize,
        iteration: u64,
        role: SampleRole,
    ) -> Result<Option<Vec<usize>>> {
        let Some(size) = size else { return Ok(None) };
        let k = size.resolve(n, self.with_replacement)?;
        let key = if self.resample_each_iteration {
            iteration
        } else {
            0
        };
        let mut rng = stream_rng(self.seed, key, role);
        let sample = if self.with_replacement {
            draw_sample(n, k, &mut rng)
        } else {
            draw_sample_without_replacement(n, k, &mut rng)?
        };
        Ok(Some(sample))
    }

    pub fn gradient_sample(&self, n: usize, iteration: u64) -> Result<Option<Vec<usize>>> {
        self.draw(self.gradient, n, iteration, SampleRole::Gradient)
    }

    pub fn hessian_sample(&self, n: usize, iteration: u64) -> Result<Option<Vec<usize>>> {
        self.draw(self.hessian, n, iteration, SampleRole::Hessian)
    }
}

/// Mean of component gradients over `sample`.
pub fn sampled_gradient(oracle: &Oracle<'_>, x: &[f64], sample: &[usize]) -> Result<Vec<f64>> {
    oracle.sampled_gradient(x, sample)
}

/// Mean of component Hessian-vector products over `sample`.
pub fn sampled_hvp(
    oracle: &Oracle<'_>,
    x: &[f64],
    v: &[f64],
    sample: &[usize],
) -> Result<Vec<f64>> {
    oracle.sampled_hvp(x, v, sample)
}

/// Target accuracy of the sub-sampled estimates and the allowed failure
/// probability; all three lie in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyBudget {
    pub gradient_error: f64,
    pub hessian_error: f64,
    pub failure_probability: f64,
}

/// `ceil` that ignores relative excess below `1e-12`, so values that are
/// integers up to rounding are not bumped to the next integer.
fn ceil_tolerant(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Uniform sample sizes that meet the budget with probability
/// `1 - failure_probability`, given per-component bounds
/// `||grad f_i|| <= K_g` and `||hess f_i|| <= K_H`:
///
/// ```text
/// |S_g| = ceil(16 K_g^2 / delta_g^2 * ln(1/delta))
/// |S_H| = ceil(16 K_H^2 / delta_H^2 * ln(2d/delta))
/// ```
pub fn uniform_sample_sizes(
    budget: AccuracyBudget,
    gradient_bound: f64,
    hessian_bound: f64,
    dim: usize,
) -> Result<(usize, usize)> {
    let AccuracyBudget {
        gradient_error: dg,
        hessian_error: dh,
        failure_probability: delta,
    } = budget;
    for (name, v) in [("delta_g", dg), ("delta_H", dh), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::usage(format!("{name} = {v} must lie in (0, 1)")));
        }
    }
    if !(gradient_bound > 0.0 && gradient_bound.is_finite())
        || !(hessian_bound > 0.0 && hessian_bound.is_finite())
        || dim == 0
    {
        return Err(Error::usage("bounds and dimension must be positive"));
    }
    let sg = 16.0 * gradient_bound.powi(2) / dg.powi(2) * (1.0 / delta).ln();
    let sh = 16.0 * hessian_bound.powi(2) / dh.powi(2) * (2.0 * dim as f64 / delta).ln();
    Ok((ceil_tolerant(sg), ceil_tolerant(sh)))
}
