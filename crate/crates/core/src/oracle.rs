//! Objective access and propagation accounting.
//!
//! Optimizers and sub-problem solvers only ever see an [`Oracle`]: function
//! values, gradients and Hessian-vector products, either exact (all
//! components) or averaged over an index sample. Every per-component call is
//! charged to a [`PropLedger`], which is the cost unit used to compare
//! methods.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, LinearOperator};

/// A smooth objective `F(x) = (1/n) sum_i f_i(x)`.
///
/// Problems without finite-sum structure report a single component whose
/// value is `F` itself. Component methods are called with `i < num_components()`
/// and vectors of length `dim()`; range checking happens in [`Oracle`].
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn num_components(&self) -> usize {
        1
    }

    fn has_exact_hessian(&self) -> bool {
        true
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64;

    /// `out += weight * grad f_i(x)`
    fn add_component_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]);

    /// `out += weight * hess f_i(x) v`
    fn add_component_hvp(&self, i: usize, x: &[f64], v: &[f64], weight: f64, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub exact_hessian: bool,
    pub components: usize,
}

impl Capabilities {
    pub fn finite_sum(&self) -> bool {
        self.components > 1
    }
}

/// Cost of one per-component call of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropWeights {
    pub function: u64,
    pub gradient: u64,
    pub hvp: u64,
}

impl Default for PropWeights {
    fn default() -> Self {
        Self {
            function: 1,
            gradient: 2,
            hvp: 4,
        }
    }
}

/// Raw per-component call counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PropCounts {
    pub function: u64,
    pub gradient: u64,
    pub hvp: u64,
}

/// Thread-safe tally of per-component oracle calls.
#[derive(Debug, Default)]
pub struct PropLedger {
    weights: PropWeights,
    function: AtomicU64,
    gradient: AtomicU64,
    hvp: AtomicU64,
}

impl PropLedger {
    pub fn new(weights: PropWeights) -> Self {
        Self {
            weights,
            ..Self::default()
        }
    }

    pub fn weights(&self) -> PropWeights {
        self.weights
    }

    pub fn charge_function(&self, count: u64) {
        self.function.fetch_add(count, Ordering::Relaxed);
    }

    pub fn charge_gradient(&self, count: u64) {
        self.gradient.fetch_add(count, Ordering::Relaxed);
    }

    pub fn charge_hvp(&self, count: u64) {
        self.hvp.fetch_add(count, Ordering::Relaxed);
    }

    pub fn counts(&self) -> PropCounts {
        PropCounts {
            function: self.function.load(Ordering::Relaxed),
            gradient: self.gradient.load(Ordering::Relaxed),
            hvp: self.hvp.load(Ordering::Relaxed),
        }
    }

    /// Weighted total, `w_f * #f + w_g * #g + w_h * #hvp`.
    pub fn cumulative(&self) -> u64 {
        let c = self.counts();
        self.weights.function * c.function
            + self.weights.gradient * c.gradient
            + self.weights.hvp * c.hvp
    }
}

/// How per-component sums are reduced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Reduction {
    #[default]
    Sequential,
    /// Fixed-size chunks summed on the rayon pool, partials combined in
    /// chunk order.
    Parallel,
}

const PARALLEL_CHUNK: usize = 2048;

/// Accounting front-end over an [`Objective`].
pub struct Oracle<'p> {
    problem: &'p dyn Objective,
    ledger: PropLedger,
    reduction: Reduction,
}

impl<'p> Oracle<'p> {
    pub fn new(problem: &'p dyn Objective) -> Self {
        Self::with_weights(problem, PropWeights::default())
    }

    pub fn with_weights(problem: &'p dyn Objective, weights: PropWeights) -> Self {
        Self {
            problem,
            ledger: PropLedger::new(weights),
            reduction: Reduction::Sequential,
        }
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn problem(&self) -> &'p dyn Objective {
        self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn num_components(&self) -> usize {
        self.problem.num_components()
    }

    pub fn capabilities(&self) -> Capabilities {
        Capabilities {
            exact_hessian: self.problem.has_exact_hessian(),
            components: self.problem.num_components(),
        }
    }

    pub fn ledger(&self) -> &PropLedger {
        &self.ledger
    }

    /// `F(x)` over all components.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let n = self.num_components();
        let total = self.reduce_scalar(n, |k| self.problem.component_value(k, x));
        self.ledger.charge_function(n as u64);
        let value = total / n as f64;
        if !value.is_finite() {
            return Err(Error::numerical("function value", value));
        }
        Ok(value)
    }

    /// Mean of component values over `sample`.
    pub fn sampled_eval(&self, x: &[f64], sample: &[usize]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_sample(sample)?;
        let total =
            self.reduce_scalar(sample.len(), |k| self.problem.component_value(sample[k], x));
        self.ledger.charge_function(sample.len() as u64);
        let value = total / sample.len() as f64;
        if !value.is_finite() {
            return Err(Error::numerical("sampled function value", value));
        }
        Ok(value)
    }

    /// `grad F(x)`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let n = self.num_components();
        let g = self.reduce_vector(n, |k, out| {
            self.problem.add_component_gradient(k, x, 1.0, out)
        });
        self.ledger.charge_gradient(n as u64);
        finish_mean(g, n, "gradient")
    }

    /// `(1/|S|) sum_{i in S} grad f_i(x)`.
    pub fn sampled_gradient(&self, x: &[f64], sample: &[usize]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.check_sample(sample)?;
        let g = self.reduce_vector(sample.len(), |k, out| {
            self.problem.add_component_gradient(sample[k], x, 1.0, out)
        });
        self.ledger.charge_gradient(sample.len() as u64);
        finish_mean(g, sample.len(), "sampled gradient")
    }

    /// `hess F(x) v`.
    pub fn hvp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.check_dim(v)?;
        let n = self.num_components();
        let hv = self.reduce_vector(n, |k, out| {
            self.problem.add_component_hvp(k, x, v, 1.0, out)
        });
        self.ledger.charge_hvp(n as u64);
        finish_mean(hv, n, "Hessian-vector product")
    }

    /// `(1/|S|) sum_{i in S} hess f_i(x) v`.
    pub fn sampled_hvp(&self, x: &[f64], v: &[f64], sample: &[usize]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.check_dim(v)?;
        self.check_sample(sample)?;
        let hv = self.reduce_vector(sample.len(), |k, out| {
            self.problem.add_component_hvp(sample[k], x, v, 1.0, out)
        });
        self.ledger.charge_hvp(sample.len() as u64);
        finish_mean(hv, sample.len(), "sampled Hessian-vector product")
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::dimension(self.dim(), v.len()));
        }
        Ok(())
    }

    fn check_sample(&self, sample: &[usize]) -> Result<()> {
        if sample.is_empty() {
            return Err(Error::usage("sample must be nonempty"));
        }
        let n = self.num_components();
        if let Some(&bad) = sample.iter().find(|&&i| i >= n) {
            return Err(Error::usage(format!(
                "sample index {bad} out of range for {n} components"
            )));
        }
        Ok(())
    }

    fn reduce_scalar<F>(&self, count: usize, term: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync,
    {
        match self.reduction {
            Reduction::Sequential => (0..count).map(&term).sum(),
            Reduction::Parallel => {
                let partials: Vec<f64> = (0..count.div_ceil(PARALLEL_CHUNK))
                    .into_par_iter()
                    .map(|c| {
                        let end = ((c + 1) * PARALLEL_CHUNK).min(count);
                        (c * PARALLEL_CHUNK..end).map(&term).sum()
                    })
                    .collect();
                partials.into_iter().sum()
            }
        }
    }

    fn reduce_vector<F>(&self, count: usize, add_term: F) -> Vec<f64>
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let d = self.dim();
        match self.reduction {
            Reduction::Sequential => {
                let mut out = vec![0.0; d];
                for k in 0..count {
                    add_term(k, &mut out);
                }
                out
            }
            Reduction::Parallel => {
                let partials: Vec<Vec<f64>> = (0..count.div_ceil(PARALLEL_CHUNK))
                    .into_par_iter()
                    .map(|c| {
                        let mut part = vec![0.0; d];
                        let end = ((c + 1) * PARALLEL_CHUNK).min(count);
                        for k in c * PARALLEL_CHUNK..end {
                            add_term(k, &mut part);
                        }
                        part
                    })
                    .collect();
                let mut out = vec![0.0; d];
                for part in &partials {
                    linalg::axpy(1.0, part, &mut out);
                }
                out
            }
        }
    }
}

fn finish_mean(mut v: Vec<f64>, count: usize, context: &str) -> Result<Vec<f64>> {
    linalg::scale(1.0 / count as f64, &mut v);
    linalg::check_finite(context, &v)?;
    Ok(v)
}

/// The Hessian at a fixed point, exact or averaged over a fixed index
/// sample, exposed as a linear operator. Every application is charged.
pub struct HessianOperator<'a, 'p> {
    oracle: &'a Oracle<'p>,
    x: &'a [f64],
    sample: Option<&'a [usize]>,
}

impl<'a, 'p> HessianOperator<'a, 'p> {
    pub fn exact(oracle: &'a Oracle<'p>, x: &'a [f64]) -> Self {
        Self {
            oracle,
            x,
            sample: None,
        }
    }

    pub fn sampled(oracle: &'a Oracle<'p>, x: &'a [f64], sample: &'a [usize]) -> Self {
        Self {
            oracle,
            x,
            sample: Some(sample),
        }
    }

    /// Number of components averaged in one application.
    pub fn batch_size(&self) -> usize {
        self.sample
            .map_or(self.oracle.num_components(), |s| s.len())
    }
}

impl LinearOperator for HessianOperator<'_, '_> {
    fn dim(&self) -> usize {
        self.oracle.dim()
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self.sample {
            Some(s) => self.oracle.sampled_hvp(self.x, v, s),
            None => self.oracle.hvp(self.x, v),
        }
    }
}
