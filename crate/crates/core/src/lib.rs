//! Matrix-free inexact trust-region and adaptive cubic regularization
//! methods for smooth non-convex problems, with sub-sampled oracles for
//! finite sums.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data_io;
pub mod error;
pub mod linalg;
pub mod negcurv;
pub mod optimizers;
pub mod oracle;
pub mod problems;
pub mod sampling;
pub mod subproblem;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{DenseSymmetric, LinearOperator};
pub use negcurv::{approx_min_eig, EigEstimate, EigOptions};
pub use optimizers::{
    compute_rho, run_arc, run_tr, OptimizerConfig, RunResult, StepOutcome, TerminationReason,
    TraceRecord,
};
pub use oracle::{HessianOperator, Objective, Oracle, PropLedger, PropWeights, Reduction};
pub use sampling::{SampleConfig, SampleSize};
