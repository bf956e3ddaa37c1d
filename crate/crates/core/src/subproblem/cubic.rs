//! Cubic-regularized model minimization: Cauchy point, eigen point and the
//! generalized Lanczos method.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, LinearOperator};
use crate::negcurv::{lift_unit, random_unit_vector, reorthogonalize, EigEstimate};
use crate::subproblem::secular::{subspace_cubic_solve, subspace_model};
use crate::subproblem::{best_candidate, SubproblemResult, SubproblemStatus};
use crate::tridiag::SymTridiagonal;

/// `m(s) = <g, s> + 0.5 <s, H s> + (sigma/3) ||s||^3`, or
/// `<s, H s> + (2 sigma/3) ||s||^3` when the gradient has been zeroed.
/// `gradient` always holds the pre-zeroing vector.
#[derive(Clone, Copy)]
pub struct CubicModel<'a> {
    pub gradient: &'a [f64],
    pub hessian: &'a dyn LinearOperator,
    pub sigma: f64,
    pub gradient_zeroed: bool,
}

impl<'a> CubicModel<'a> {
    pub fn new(gradient: &'a [f64], hessian: &'a dyn LinearOperator, sigma: f64) -> Result<Self> {
        if gradient.len() != hessian.dim() {
            return Err(Error::dimension(hessian.dim(), gradient.len()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::usage(format!(
                "regularization {sigma} must be positive"
            )));
        }
        Ok(Self {
            gradient,
            hessian,
            sigma,
            gradient_zeroed: false,
        })
    }

    pub fn zeroed(mut self) -> Self {
        self.gradient_zeroed = true;
        self
    }

    pub fn value(&self, s: &[f64]) -> Result<f64> {
        let shs = self.hessian.quadratic_form(s)?;
        let cube = linalg::norm(s).powi(3);
        Ok(if self.gradient_zeroed {
            shs + 2.0 * self.sigma / 3.0 * cube
        } else {
            linalg::dot(self.gradient, s) + 0.5 * shs + self.sigma / 3.0 * cube
        })
    }

    /// Gradient of the standard model, `g + H s + sigma ||s|| s`.
    pub fn model_gradient(&self, s: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.hessian.apply(s)?;
        linalg::axpy(1.0, self.gradient, &mut out);
        linalg::axpy(self.sigma * linalg::norm(s), s, &mut out);
        Ok(out)
    }

    fn require_gradient(&self, what: &str) -> Result<f64> {
        if self.gradient_zeroed {
            return Err(Error::usage(format!(
                "{what} is undefined for the zeroed-gradient model"
            )));
        }
        let gn = linalg::norm(self.gradient);
        if gn == 0.0 {
            return Err(Error::usage(format!("{what} needs a non-zero gradient")));
        }
        Ok(gn)
    }
}

/// Global minimizer of the model along `-g`. Its norm is the positive root
/// of `sigma r^2 + K r - ||g|| = 0` with `K = <g, H g> / ||g||^2`.
pub fn cauchy_point_arc(model: &CubicModel<'_>) -> Result<SubproblemResult> {
    let gn = model.require_gradient("Cauchy point")?;
    let g = model.gradient;
    let sigma = model.sigma;
    let ghg = linalg::dot(g, &model.hessian.apply(g)?);
    let k = ghg / (gn * gn);
    let root = (k * k + 4.0 * sigma * gn).sqrt();
    // rationalized where the textbook form cancels
    let r = if k > 0.0 {
        2.0 * gn / (root + k)
    } else {
        (root - k) / (2.0 * sigma)
    };
    let alpha = r / gn;
    let model_value = -alpha * gn * gn + 0.5 * alpha * alpha * ghg + sigma / 3.0 * r.powi(3);
    Ok(SubproblemResult {
        step: linalg::scaled(-alpha, g),
        model_value,
        status: SubproblemStatus::CauchyFallback,
        inner_iterations: 1,
        converged: true,
        curvature_hint: None,
    })
}

/// Global minimizer of the model along `u`.
pub fn eigen_point_arc(model: &CubicModel<'_>, eig: &EigEstimate) -> Result<SubproblemResult> {
    let lam = eig.value;
    if !(lam < 0.0) {
        return Err(Error::usage(format!(
            "eigen point needs negative curvature, estimate is {lam}"
        )));
    }
    if eig.vector.len() != model.gradient.len() {
        return Err(Error::dimension(model.gradient.len(), eig.vector.len()));
    }
    let sigma = model.sigma;
    let a = linalg::dot(model.gradient, &eig.vector);
    let (alpha, model_value) = if model.gradient_zeroed {
        // 2 alpha lam + 2 sigma |alpha| alpha = 0
        let r = -lam / sigma;
        let alpha = if a > 0.0 { -r } else { r };
        (alpha, lam * r * r + 2.0 * sigma / 3.0 * r.powi(3))
    } else {
        // phi(alpha) = a alpha + lam alpha^2 / 2 + sigma |alpha|^3 / 3; one
        // local minimizer on each half-line at most
        let phi = |x: f64| a * x + 0.5 * lam * x * x + sigma / 3.0 * x.abs().powi(3);
        let mut best: Option<(f64, f64)> = None;
        let disc_pos = lam * lam - 4.0 * sigma * a;
        if disc_pos >= 0.0 {
            let x = (-lam + disc_pos.sqrt()) / (2.0 * sigma);
            best = Some((x, phi(x)));
        }
        let disc_neg = lam * lam + 4.0 * sigma * a;
        if disc_neg >= 0.0 {
            let x = (lam - disc_neg.sqrt()) / (2.0 * sigma);
            let v = phi(x);
            // on a tie prefer the side that opposes the linear term
            let better = match best {
                None => true,
                Some((_, bv)) => v < bv || (v == bv && a > 0.0),
            };
            if better {
                best = Some((x, v));
            }
        }
        best.expect("one half-line always has a minimizer")
    };
    Ok(SubproblemResult {
        step: linalg::scaled(alpha, &eig.vector),
        model_value,
        status: SubproblemStatus::EigenStep,
        inner_iterations: 0,
        converged: true,
        curvature_hint: None,
    })
}

/// Stopping rule for the Lanczos solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaRule {
    /// Stop once `||grad m(s)|| <= (min(1, ||s||) / 5) ||g||`.
    Standard,
    /// Grow the space to `max_dim` (or the full dimension) regardless.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicLanczosOptions {
    pub theta_rule: ThetaRule,
    /// `None` uses `min(d, 200)`.
    pub max_dim: Option<usize>,
    /// Seed for restart vectors after an invariant subspace is found.
    pub restart_seed: u64,
}

impl Default for CubicLanczosOptions {
    fn default() -> Self {
        Self {
            theta_rule: ThetaRule::Standard,
            max_dim: None,
            restart_seed: 0x5eed,
        }
    }
}

/// Orthonormal Krylov basis and the projected tridiagonal.
#[derive(Debug, Clone, Default)]
pub struct KrylovFactorization {
    pub basis: Vec<Vec<f64>>,
    pub tridiagonal: SymTridiagonal,
    pub beta0: f64,
}

impl KrylovFactorization {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `sum_j y_j q_j`
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.basis[0].len()];
        for (q, yj) in self.basis.iter().zip(y) {
            linalg::axpy(*yj, q, &mut s);
        }
        s
    }
}

/// Generalized Lanczos: the model is minimized exactly on growing Krylov
/// spaces started at `g`. The model gradient norm at the lifted step is
/// `beta_k |y_k|` (the component leaving the subspace), so the stopping test
/// needs no extra operator application.
///
/// When the space becomes invariant before the cap, the solver either stops
/// (the subspace step is then exact) or, with [`ThetaRule::Off`], restarts
/// from a random vector orthogonal to the basis so that the full space,
/// including hard cases, is reachable.
pub fn lanczos_cubic(
    model: &CubicModel<'_>,
    options: &CubicLanczosOptions,
) -> Result<(SubproblemResult, KrylovFactorization)> {
    let gn = model.require_gradient("Lanczos solver")?;
    let g = model.gradient;
    let d = g.len();
    let sigma = model.sigma;
    let cap = options.max_dim.unwrap_or(d.min(200)).min(d).max(1);

    let mut fact = KrylovFactorization {
        basis: vec![linalg::scaled(1.0 / gn, g)],
        tridiagonal: SymTridiagonal::default(),
        beta0: gn,
    };
    let mut rng = None;
    let mut beta_prev = 0.0;
    let mut hvps = 0;
    let converged;
    let mut y;

    loop {
        let k = fact.basis.len() - 1;
        let mut w = model.hessian.apply(&fact.basis[k])?;
        hvps += 1;
        let alpha = linalg::dot(&w, &fact.basis[k]);
        linalg::axpy(-alpha, &fact.basis[k], &mut w);
        if k > 0 {
            linalg::axpy(-beta_prev, &fact.basis[k - 1], &mut w);
        }
        reorthogonalize(&mut w, &fact.basis);
        fact.tridiagonal.push(alpha, beta_prev);
        let beta = linalg::norm(&w);

        let sol = subspace_cubic_solve(&fact.tridiagonal, gn, sigma)?;
        y = sol.y;
        let grad_norm = beta * y[k].abs();
        let step_norm = norm(&y);
        let invariant = beta <= 1e-12 * fact.tridiagonal.max_abs().max(f64::MIN_POSITIVE);

        if options.theta_rule == ThetaRule::Standard
            && (grad_norm <= step_norm.min(1.0) / 5.0 * gn || invariant)
        {
            converged = true;
            break;
        }
        if fact.basis.len() >= cap {
            converged =
                options.theta_rule == ThetaRule::Off || grad_norm <= step_norm.min(1.0) / 5.0 * gn;
            break;
        }
        if invariant {
            let rng = rng.get_or_insert_with(|| ChaCha8Rng::seed_from_u64(options.restart_seed));
            let mut v = random_unit_vector(d, rng);
            reorthogonalize(&mut v, &fact.basis);
            let nv = linalg::norm(&v);
            linalg::scale(1.0 / nv, &mut v);
            fact.basis.push(v);
            beta_prev = 0.0;
        } else {
            linalg::scale(1.0 / beta, &mut w);
            fact.basis.push(w);
            beta_prev = beta;
        }
    }

    let step = fact.lift(&y);
    let model_value = subspace_model(&fact.tridiagonal, gn, sigma, &y);

    let theta = fact.tridiagonal.min_eigenvalue();
    let curvature_hint = (theta < 0.0).then(|| {
        let z = fact.tridiagonal.bottom_eigenvector(theta);
        EigEstimate {
            value: theta,
            vector: lift_unit(&fact.basis, &z),
            converged: false,
            iterations: fact.dim(),
            ritz_history: vec![theta],
        }
    });

    Ok((
        SubproblemResult {
            step,
            model_value,
            status: SubproblemStatus::Interior,
            inner_iterations: hvps,
            converged,
            curvature_hint,
        },
        fact,
    ))
}

fn norm(v: &[f64]) -> f64 {
    linalg::norm(v)
}

/// Which sub-problem solver the cubic method uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArcMode {
    /// Cauchy point only.
    Cauchy,
    /// Generalized Lanczos with the stationarity test.
    Lanczos,
}

impl ArcMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArcMode::Cauchy => "cauchy",
            ArcMode::Lanczos => "lanczos",
        }
    }
}

impl std::str::FromStr for ArcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cauchy" => Ok(ArcMode::Cauchy),
            "lanczos" => Ok(ArcMode::Lanczos),
            other => Err(Error::usage(format!("unknown arc mode `{other}`"))),
        }
    }
}

/// Dispatches on the model branch and mode; in Lanczos mode the result is
/// compared with the eigen points of `eig` and of the Krylov space.
pub fn solve_cubic_subproblem(
    model: &CubicModel<'_>,
    mode: ArcMode,
    eig: Option<&EigEstimate>,
    eps_h: f64,
    options: &CubicLanczosOptions,
) -> Result<SubproblemResult> {
    if model.gradient_zeroed {
        return match eig {
            Some(e) if e.value < 0.0 => eigen_point_arc(model, e),
            _ => Err(Error::usage(
                "zeroed-gradient model needs a negative-curvature estimate",
            )),
        };
    }
    if linalg::norm(model.gradient) == 0.0 {
        // stationary model: only curvature can make progress
        if let Some(e) = eig.filter(|e| e.value < 0.0) {
            return eigen_point_arc(model, e);
        }
        return Ok(SubproblemResult {
            step: vec![0.0; model.gradient.len()],
            model_value: 0.0,
            status: SubproblemStatus::Interior,
            inner_iterations: 0,
            converged: true,
            curvature_hint: None,
        });
    }
    match mode {
        ArcMode::Cauchy => cauchy_point_arc(model),
        ArcMode::Lanczos => {
            let (lanczos, _) = lanczos_cubic(model, options)?;
            let hint = lanczos.curvature_hint.clone();
            let mut candidates = vec![lanczos];
            for e in eig.into_iter().chain(hint.as_ref()) {
                if e.value < -eps_h {
                    candidates.push(eigen_point_arc(model, e)?);
                }
            }
            let mut best = best_candidate(candidates);
            if best.curvature_hint.is_none() {
                best.curvature_hint = hint;
            }
            Ok(best)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseSymmetric;

    fn estimate(value: f64, vector: Vec<f64>) -> EigEstimate {
        EigEstimate {
            value,
            vector,
            converged: true,
            iterations: 1,
            ritz_history: vec![value],
        }
    }

    #[test]
    fn cauchy_with_zero_hessian() {
        let h = DenseSymmetric::from_diagonal(&[0.0, 0.0]);
        let g = [1.0, 0.0];
        let m = CubicModel::new(&g, &h, 1.0).unwrap();
        let r = cauchy_point_arc(&m).unwrap();
        assert!((linalg::norm(&r.step) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cauchy_with_identity() {
        let h = DenseSymmetric::identity(2);
        let g = [1.0, 0.0];
        let m = CubicModel::new(&g, &h, 1.0).unwrap();
        let r = cauchy_point_arc(&m).unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((linalg::norm(&r.step) - golden).abs() < 1e-15);
        assert!((m.value(&r.step).unwrap() - r.model_value).abs() < 1e-15);
    }

    #[test]
    fn eigen_point_zeroed_model() {
        let h = DenseSymmetric::from_diagonal(&[1.0, -2.0]);
        let g = [0.0, 0.5];
        let m = CubicModel::new(&g, &h, 1.0).unwrap().zeroed();
        let r = eigen_point_arc(&m, &estimate(-2.0, vec![0.0, 1.0])).unwrap();
        assert_eq!(r.step, vec![0.0, -2.0]);
        assert!((r.model_value + 8.0 / 3.0).abs() < 1e-15);
        assert!((m.value(&r.step).unwrap() + 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_point_scale_invariance() {
        let h = DenseSymmetric::from_diagonal(&[1.0, -2.0]);
        let g = [0.0, 0.0];
        for c in [0.5, 3.0, 40.0] {
            let hc = h.scaled(c);
            let m = CubicModel::new(&g, &hc, c).unwrap().zeroed();
            let r = eigen_point_arc(&m, &estimate(-2.0 * c, vec![0.0, 1.0])).unwrap();
            assert!((linalg::norm(&r.step) - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lanczos_one_dimensional_space_suffices() {
        let h = DenseSymmetric::identity(3);
        let g = [1.0, 0.0, 0.0];
        let sigma = 1e-3;
        let m = CubicModel::new(&g, &h, sigma).unwrap();
        let (r, fact) = lanczos_cubic(&m, &CubicLanczosOptions::default()).unwrap();
        assert_eq!(fact.dim(), 1);
        assert!(r.converged);
        let sn = linalg::norm(&r.step);
        assert!((r.step[0] + 1.0 / (1.0 + sigma * sn)).abs() < 1e-12);
    }

    #[test]
    fn lanczos_hard_case_full_space() {
        let h = DenseSymmetric::from_diagonal(&[1.0, 2.0, -1.0]);
        let g = [1.0, 1.0, 0.0];
        let m = CubicModel::new(&g, &h, 1.0).unwrap();
        let opts = CubicLanczosOptions {
            theta_rule: ThetaRule::Off,
            ..Default::default()
        };
        let (r, fact) = lanczos_cubic(&m, &opts).unwrap();
        assert_eq!(fact.dim(), 3);
        assert!(r.step[2].abs() > 0.1, "{:?}", r.step);
        let direct = m.value(&r.step).unwrap();
        assert!((direct - r.model_value).abs() < 1e-12);
    }

    #[test]
    fn cauchy_mode_is_cauchy_point() {
        let h = DenseSymmetric::from_diagonal(&[1.0, -0.5]);
        let g = [0.3, 0.4];
        let m = CubicModel::new(&g, &h, 2.0).unwrap();
        let a =
            solve_cubic_subproblem(&m, ArcMode::Cauchy, None, 1e-3, &Default::default()).unwrap();
        let b = cauchy_point_arc(&m).unwrap();
        assert_eq!(a, b);
    }
}
