//! Approximate solvers for the trust-region and cubic-regularized models.

pub mod cubic;
pub mod secular;
pub mod tr;

use crate::negcurv::EigEstimate;

pub use cubic::{
    cauchy_point_arc, eigen_point_arc, lanczos_cubic, solve_cubic_subproblem, ArcMode,
    CubicLanczosOptions, CubicModel, KrylovFactorization, ThetaRule,
};
pub use secular::{subspace_cubic_solve, SubspaceSolution};
pub use tr::{
    cauchy_point_tr, eigen_point_tr, solve_tr_subproblem, steihaug_cg, CgOptions, TrModel,
    TrSolveOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubproblemStatus {
    /// Converged strictly inside the region (or the cubic stationarity test passed).
    Interior,
    /// Stopped on the trust-region boundary.
    Boundary,
    /// CG met a direction of non-positive curvature.
    NegativeCurvatureExit,
    /// The eigen point was the best candidate.
    EigenStep,
    /// The Cauchy point was used.
    CauchyFallback,
}

impl SubproblemStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubproblemStatus::Interior => "interior",
            SubproblemStatus::Boundary => "boundary",
            SubproblemStatus::NegativeCurvatureExit => "negative-curvature-exit",
            SubproblemStatus::EigenStep => "eigen-step",
            SubproblemStatus::CauchyFallback => "cauchy-fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub step: Vec<f64>,
    pub model_value: f64,
    pub status: SubproblemStatus,
    /// Operator applications spent by the solver.
    pub inner_iterations: usize,
    /// Whether the solver's own stopping test was met.
    pub converged: bool,
    /// Most-negative curvature direction seen in the solver's Krylov space,
    /// if any was negative.
    pub curvature_hint: Option<EigEstimate>,
}

/// Index of the smallest model value; ties keep the earliest.
pub(crate) fn best_candidate(candidates: Vec<SubproblemResult>) -> SubproblemResult {
    let mut best: Option<SubproblemResult> = None;
    for c in candidates {
        match &best {
            Some(b) if b.model_value <= c.model_value => {}
            _ => best = Some(c),
        }
    }
    best.expect("at least one candidate")
}
