//! Outer loops of the inexact trust-region and adaptive cubic
//! regularization methods.
//!
//! Each iteration refreshes the (possibly sub-sampled) gradient and Hessian,
//! checks approximate second-order optimality, solves the local model, and
//! accepts or rejects the step from the agreement ratio computed with the
//! exact objective.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{self, LinearOperator};
use crate::negcurv::{approx_min_eig, EigEstimate, EigOptions};
use crate::oracle::{HessianOperator, Oracle};
use crate::sampling::{stream_rng, SampleConfig, SampleRole};
use crate::subproblem::{
    solve_cubic_subproblem, solve_tr_subproblem, ArcMode, CgOptions, CubicLanczosOptions,
    CubicModel, SubproblemResult, SubproblemStatus, TrModel, TrSolveOptions,
};

/// Consecutive degenerate or stalled iterations before giving up.
const STALL_LIMIT: usize = 50;
const MIN_RADIUS: f64 = 1e-14;
const MAX_SIGMA: f64 = 1e14;
/// Representability guards: long success streaks would otherwise underflow
/// the regularization or overflow the radius.
const SIGMA_FLOOR: f64 = 1e-290;
const RADIUS_CEILING: f64 = 1e290;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub eps_g: f64,
    pub eps_h: f64,
    /// Acceptance threshold on the agreement ratio.
    pub eta: f64,
    /// Radius / regularization update factor.
    pub gamma: f64,
    pub delta0: f64,
    pub sigma0: f64,
    /// Curvature quality target of the eigen estimates.
    pub nu: f64,
    /// Replace small gradients by zero in the model (uses the alternative
    /// model branch).
    pub zero_small_grad: bool,
    pub arc_mode: ArcMode,
    /// Keep the regularization fixed at this value.
    pub fixed_sigma: Option<f64>,
    pub max_iter: usize,
    /// Stop once the propagation ledger reaches this value.
    pub max_props: Option<u64>,
    pub sampling: SampleConfig,
    pub eig: EigOptions,
    pub cg: CgOptions,
    pub lanczos: CubicLanczosOptions,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eps_g: 1e-5,
            eps_h: 1e-3,
            eta: 0.1,
            gamma: 2.0,
            delta0: 1.0,
            sigma0: 10.0,
            nu: 0.9,
            zero_small_grad: false,
            arc_mode: ArcMode::Lanczos,
            fixed_sigma: None,
            max_iter: 1000,
            max_props: None,
            sampling: SampleConfig::default(),
            eig: EigOptions::default(),
            cg: CgOptions::default(),
            lanczos: CubicLanczosOptions::default(),
        }
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("{name} = {v} must lie in (0, 1)")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::usage(format!(
            "{name} = {v} must be positive and finite"
        )))
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        open_unit("eps_g", self.eps_g)?;
        open_unit("eps_h", self.eps_h)?;
        open_unit("nu", self.nu)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::usage(format!(
                "eta = {} must lie in (0, 1]",
                self.eta
            )));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::usage(format!(
                "gamma = {} must exceed 1",
                self.gamma
            )));
        }
        positive("delta0", self.delta0)?;
        positive("sigma0", self.sigma0)?;
        if let Some(s) = self.fixed_sigma {
            positive("fixed sigma", s)?;
        }
        if self.max_iter == 0 {
            return Err(Error::usage("max_iter must be at least 1"));
        }
        if self.eig.max_dim == 0 || !(self.eig.tol > 0.0) {
            return Err(Error::usage(
                "eigen solver needs positive tolerance and dimension",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepOutcome {
    Accepted,
    Rejected,
    /// The model predicted no decrease; handled as a rejection.
    Degenerate,
    /// Optimality certified; no step taken.
    Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Ledger total after the iteration.
    pub props: u64,
    /// Objective at the iterate after this iteration's update.
    pub loss: f64,
    /// Norm of the gradient estimate used by the model.
    pub grad_norm: f64,
    /// Radius or regularization used in this iteration.
    pub radius_or_sigma: f64,
    pub rho: Option<f64>,
    pub outcome: StepOutcome,
    pub step_norm: Option<f64>,
    pub status: Option<SubproblemStatus>,
    pub inner_iterations: usize,
    pub lambda_hat: Option<f64>,
    pub wall_ms: f64,
}

impl TraceRecord {
    pub fn success(&self) -> bool {
        self.outcome == StepOutcome::Accepted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminationReason {
    Optimality,
    MaxIterations,
    PropBudget,
    Numerical,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::Optimality => "optimality",
            TerminationReason::MaxIterations => "max-iterations",
            TerminationReason::PropBudget => "prop-budget",
            TerminationReason::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub x: Vec<f64>,
    pub final_loss: f64,
    pub termination: TerminationReason,
    /// Diagnostic for numerical terminations.
    pub message: Option<String>,
    pub trace: Vec<TraceRecord>,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.trace
            .iter()
            .filter(|r| r.outcome != StepOutcome::Terminal)
            .count()
    }

    pub fn total_props(&self) -> u64 {
        self.trace.last().map_or(0, |r| r.props)
    }
}

/// Predicted decreases at or below this are treated as no decrease.
pub fn degeneracy_threshold(f_old: f64) -> f64 {
    100.0 * f64::EPSILON * (1.0 + f_old.abs())
}

/// Agreement ratio `(f_old - f_new) / (-model_value)`.
pub fn compute_rho(f_old: f64, f_new: f64, model_value: f64) -> Result<f64> {
    let threshold = degeneracy_threshold(f_old);
    let decrease = -model_value;
    if !(decrease > threshold) {
        return Err(Error::DegenerateModel {
            decrease,
            threshold,
        });
    }
    Ok((f_old - f_new) / decrease)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    TrustRegion,
    Cubic,
}

pub fn run_tr(oracle: &Oracle<'_>, x0: &[f64], config: &OptimizerConfig) -> Result<RunResult> {
    run(oracle, x0, config, Method::TrustRegion)
}

pub fn run_arc(oracle: &Oracle<'_>, x0: &[f64], config: &OptimizerConfig) -> Result<RunResult> {
    run(oracle, x0, config, Method::Cubic)
}

struct Iterate<'a> {
    gradient: Vec<f64>,
    hessian_sample: Option<Vec<usize>>,
    oracle: &'a Oracle<'a>,
}

fn numerical_stop(
    x: Vec<f64>,
    f: f64,
    trace: Vec<TraceRecord>,
    message: String,
) -> Result<RunResult> {
    Ok(RunResult {
        x,
        final_loss: f,
        termination: TerminationReason::Numerical,
        message: Some(message),
        trace,
    })
}

fn run(
    oracle: &Oracle<'_>,
    x0: &[f64],
    config: &OptimizerConfig,
    method: Method,
) -> Result<RunResult> {
    config.validate()?;
    let d = oracle.dim();
    if x0.len() != d {
        return Err(Error::usage(format!(
            "starting point has length {} but the problem has dimension {d}",
            x0.len()
        )));
    }
    linalg::check_finite("starting point", x0)?;
    let n = oracle.num_components();
    config.sampling.validate(n)?;

    let clock = Instant::now();
    let elapsed_ms = || clock.elapsed().as_secs_f64() * 1e3;
    let mut x = x0.to_vec();
    let mut f = oracle.eval(&x)?;
    let mut param = match method {
        Method::TrustRegion => config.delta0,
        Method::Cubic => config.fixed_sigma.unwrap_or(config.sigma0),
    };
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut degenerate_run = 0;
    let mut stalled_run = 0;

    for t in 0.. {
        if t >= config.max_iter {
            return Ok(finish(x, f, TerminationReason::MaxIterations, trace));
        }
        if let Some(budget) = config.max_props {
            if oracle.ledger().cumulative() >= budget {
                return Ok(finish(x, f, TerminationReason::PropBudget, trace));
            }
        }
        if !(param > 0.0 && param.is_finite()) {
            return numerical_stop(x, f, trace, format!("radius/regularization became {param}"));
        }

        let it = t as u64;
        let step = (|| -> Result<_> {
            let gradient = match config.sampling.gradient_sample(n, it)? {
                Some(s) => oracle.sampled_gradient(&x, &s)?,
                None => oracle.grad(&x)?,
            };
            let hessian_sample = config.sampling.hessian_sample(n, it)?;
            Ok(Iterate {
                gradient,
                hessian_sample,
                oracle,
            })
        })();
        let state = match step {
            Ok(s) => s,
            Err(Error::Numerical { context, value }) => {
                return numerical_stop(x, f, trace, format!("{context}: {value}"))
            }
            Err(e) => return Err(e),
        };
        let hessian: HessianOperator<'_, '_> = match &state.hessian_sample {
            Some(s) => HessianOperator::sampled(state.oracle, &x, s),
            None => HessianOperator::exact(state.oracle, &x),
        };
        let g = &state.gradient;
        let grad_norm = linalg::norm(g);

        let attempt = iterate_model(&hessian, g, grad_norm, param, it, config, method);
        let (eig, sub) = match attempt {
            Ok(Attempt::Optimal(e)) => {
                trace.push(TraceRecord {
                    iteration: t,
                    props: oracle.ledger().cumulative(),
                    loss: f,
                    grad_norm,
                    radius_or_sigma: param,
                    rho: None,
                    outcome: StepOutcome::Terminal,
                    step_norm: None,
                    status: None,
                    inner_iterations: e.iterations,
                    lambda_hat: Some(e.value),
                    wall_ms: elapsed_ms(),
                });
                return Ok(finish(x, f, TerminationReason::Optimality, trace));
            }
            Ok(Attempt::Step(e, s)) => (e, s),
            Err(Error::Numerical { context, value }) => {
                return numerical_stop(x, f, trace, format!("{context}: {value}"))
            }
            Err(e) => return Err(e),
        };

        let lambda_hat = eig
            .as_ref()
            .map(|e| e.value)
            .or_else(|| sub.curvature_hint.as_ref().map(|e| e.value));
        let inner = sub.inner_iterations + eig.as_ref().map_or(0, |e| e.iterations + 1);
        let step_norm = linalg::norm(&sub.step);
        let used = param;

        let (outcome, rho) = if !(-sub.model_value > degeneracy_threshold(f)) {
            (StepOutcome::Degenerate, None)
        } else {
            let trial = linalg::add(&x, &sub.step);
            match oracle.eval(&trial) {
                Ok(f_trial) => {
                    let rho = compute_rho(f, f_trial, sub.model_value)?;
                    if rho >= config.eta {
                        x = trial;
                        f = f_trial;
                        (StepOutcome::Accepted, Some(rho))
                    } else {
                        (StepOutcome::Rejected, Some(rho))
                    }
                }
                // a trial point outside the domain of finiteness is a rejection
                Err(Error::Numerical { .. }) => (StepOutcome::Rejected, None),
                Err(e) => return Err(e),
            }
        };

        let accepted = outcome == StepOutcome::Accepted;
        if config.fixed_sigma.is_none() || method == Method::TrustRegion {
            param = match (method, accepted) {
                (Method::TrustRegion, true) => (param * config.gamma).min(RADIUS_CEILING),
                (Method::TrustRegion, false) => param / config.gamma,
                (Method::Cubic, true) => (param / config.gamma).max(SIGMA_FLOOR),
                (Method::Cubic, false) => param * config.gamma,
            };
        }

        trace.push(TraceRecord {
            iteration: t,
            props: oracle.ledger().cumulative(),
            loss: f,
            grad_norm,
            radius_or_sigma: used,
            rho,
            outcome,
            step_norm: Some(step_norm),
            status: Some(sub.status),
            inner_iterations: inner,
            lambda_hat,
            wall_ms: elapsed_ms(),
        });

        degenerate_run = if outcome == StepOutcome::Degenerate {
            degenerate_run + 1
        } else {
            0
        };
        let collapsed = match method {
            Method::TrustRegion => param < MIN_RADIUS,
            Method::Cubic => param > MAX_SIGMA,
        };
        stalled_run = if !accepted && collapsed {
            stalled_run + 1
        } else {
            0
        };
        if degenerate_run >= STALL_LIMIT {
            return numerical_stop(
                x,
                f,
                trace,
                format!("{STALL_LIMIT} consecutive iterations with a degenerate model"),
            );
        }
        if stalled_run >= STALL_LIMIT {
            return numerical_stop(
                x,
                f,
                trace,
                format!("{STALL_LIMIT} consecutive rejections with radius/regularization {param}"),
            );
        }
    }
    unreachable!("the iteration loop only exits by returning")
}

fn finish(
    x: Vec<f64>,
    f: f64,
    termination: TerminationReason,
    trace: Vec<TraceRecord>,
) -> RunResult {
    RunResult {
        x,
        final_loss: f,
        termination,
        message: None,
        trace,
    }
}

enum Attempt {
    Optimal(EigEstimate),
    Step(Option<EigEstimate>, SubproblemResult),
}

/// Optimality test and sub-problem solve for one iteration.
fn iterate_model(
    hessian: &HessianOperator<'_, '_>,
    g: &[f64],
    grad_norm: f64,
    param: f64,
    iteration: u64,
    config: &OptimizerConfig,
    method: Method,
) -> Result<Attempt> {
    let mut eig = None;
    if grad_norm <= config.eps_g {
        let mut rng = stream_rng(config.sampling.seed, iteration, SampleRole::Curvature);
        let e = approx_min_eig(hessian, &config.eig, &mut rng)?;
        if e.converged && e.value >= -config.eps_h {
            return Ok(Attempt::Optimal(e));
        }
        eig = Some(e);
    }
    // the alternative model branch needs a direction of negative curvature
    let zeroed = config.zero_small_grad
        && grad_norm <= config.eps_g
        && eig.as_ref().is_some_and(|e| e.value < 0.0);
    let op: &dyn LinearOperator = hessian;
    let sub = match method {
        Method::TrustRegion => {
            let mut model = TrModel::new(g, op, param)?;
            if zeroed {
                model = model.zeroed();
            }
            let options = TrSolveOptions {
                cg: CgOptions {
                    curvature_hint: eig.is_none(),
                    ..config.cg
                },
                eps_h: config.eps_h,
            };
            solve_tr_subproblem(&model, eig.as_ref(), &options)?
        }
        Method::Cubic => {
            let mut model = CubicModel::new(g, op, param)?;
            if zeroed {
                model = model.zeroed();
            }
            solve_cubic_subproblem(
                &model,
                config.arc_mode,
                eig.as_ref(),
                config.eps_h,
                &config.lanczos,
            )?
        }
    };
    Ok(Attempt::Step(eig, sub))
}
