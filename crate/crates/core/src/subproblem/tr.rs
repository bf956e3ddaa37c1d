//! Trust-region model minimization: Cauchy point, eigen point and
//! Steihaug-Toint truncated CG.

use crate::error::{Error, Result};
use crate::linalg::{self, LinearOperator};
use crate::negcurv::{lift_unit, EigEstimate};
use crate::subproblem::{best_candidate, SubproblemResult, SubproblemStatus};
use crate::tridiag::SymTridiagonal;

/// `m(s) = <g, s> + 0.5 <s, H s>`, or `<s, H s>` when the gradient has
/// been zeroed. `gradient` always holds the pre-zeroing vector; it fixes the
/// sign of eigen steps in the zeroed branch.
#[derive(Clone, Copy)]
pub struct TrModel<'a> {
    pub gradient: &'a [f64],
    pub hessian: &'a dyn LinearOperator,
    pub radius: f64,
    pub gradient_zeroed: bool,
}

impl<'a> TrModel<'a> {
    pub fn new(gradient: &'a [f64], hessian: &'a dyn LinearOperator, radius: f64) -> Result<Self> {
        if gradient.len() != hessian.dim() {
            return Err(Error::dimension(hessian.dim(), gradient.len()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::usage(format!(
                "trust-region radius {radius} must be positive"
            )));
        }
        Ok(Self {
            gradient,
            hessian,
            radius,
            gradient_zeroed: false,
        })
    }

    pub fn zeroed(mut self) -> Self {
        self.gradient_zeroed = true;
        self
    }

    pub fn value(&self, s: &[f64]) -> Result<f64> {
        let shs = self.hessian.quadratic_form(s)?;
        Ok(if self.gradient_zeroed {
            shs
        } else {
            linalg::dot(self.gradient, s) + 0.5 * shs
        })
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

/// Minimizer of the model along `-g` within the region.
pub fn cauchy_point_tr(model: &TrModel<'_>) -> Result<SubproblemResult> {
    let gn = model.require_gradient("Cauchy point")?;
    let g = model.gradient;
    let hg = model.hessian.apply(g)?;
    let curvature = linalg::dot(g, &hg) / (gn * gn);
    let alpha = if curvature <= 0.0 {
        model.radius
    } else {
        model.radius.min(gn / curvature)
    };
    let step = linalg::scaled(-alpha / gn, g);
    let model_value = -alpha * gn + 0.5 * alpha * alpha * curvature;
    let status = if alpha == model.radius {
        SubproblemStatus::Boundary
    } else {
        SubproblemStatus::Interior
    };
    Ok(SubproblemResult {
        step,
        model_value,
        status,
        inner_iterations: 1,
        converged: true,
        curvature_hint: None,
    })
}

/// Minimizer of the model along `u` within the region; always on the boundary.
pub fn eigen_point_tr(model: &TrModel<'_>, eig: &EigEstimate) -> Result<SubproblemResult> {
    if !(eig.value < 0.0) {
        return Err(Error::usage(format!(
            "eigen point needs negative curvature, estimate is {}",
            eig.value
        )));
    }
    if eig.vector.len() != model.gradient.len() {
        return Err(Error::dimension(model.gradient.len(), eig.vector.len()));
    }
    let delta = model.radius;
    let a = linalg::dot(model.gradient, &eig.vector);
    // both branches: move against the linear term; ties take +u
    let alpha = if a > 0.0 { -delta } else { delta };
    let model_value = if model.gradient_zeroed {
        delta * delta * eig.value
    } else {
        -a.abs() * delta + 0.5 * delta * delta * eig.value
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

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CgOptions {
    /// Relative residual tolerance; `None` uses `min(0.5, sqrt(||g||))`.
    pub tol: Option<f64>,
    /// Iteration cap; `None` uses `min(2d, 250)`.
    pub max_iter: Option<usize>,
    /// Extract a negative-curvature direction from the CG coefficients
    /// (one extra operator application when one is found).
    pub curvature_hint: bool,
}

/// Positive root `tau` of `||s + tau p|| = radius`, for `||s|| <= radius`.
fn boundary_step(s: &[f64], p: &[f64], radius: f64) -> f64 {
    let pp = linalg::dot(p, p);
    let sp = linalg::dot(s, p);
    let c = (linalg::dot(s, s) - radius * radius).min(0.0);
    let disc = (sp * sp - pp * c).max(0.0).sqrt();
    if sp >= 0.0 {
        if sp + disc == 0.0 {
            0.0
        } else {
            -c / (sp + disc)
        }
    } else {
        (disc - sp) / pp
    }
}

/// Steihaug-Toint CG on the standard model.
///
/// Returns the final iterate; every CG iterate decreases the model, so the
/// first iterate (the Cauchy step) bounds the returned value from above. A
/// zero gradient returns the zero step.
pub fn steihaug_cg(model: &TrModel<'_>, options: &CgOptions) -> Result<SubproblemResult> {
    if model.gradient_zeroed {
        return Err(Error::usage(
            "CG is undefined for the zeroed-gradient model",
        ));
    }
    let g = model.gradient;
    let d = g.len();
    let delta = model.radius;
    let gn = linalg::norm(g);
    if gn == 0.0 {
        return Ok(SubproblemResult {
            step: vec![0.0; d],
            model_value: 0.0,
            status: SubproblemStatus::Interior,
            inner_iterations: 0,
            converged: true,
            curvature_hint: None,
        });
    }
    let forcing = options.tol.unwrap_or_else(|| 0.5_f64.min(gn.sqrt()));
    let tol = forcing * gn;
    let max_iter = options.max_iter.unwrap_or_else(|| (2 * d).min(250)).max(1);

    let mut s = vec![0.0; d];
    let mut r = g.to_vec(); // r = g + H s
    let mut p = linalg::scaled(-1.0, g);
    let mut rr = gn * gn;
    let mut m = 0.0;
    let mut status = SubproblemStatus::Interior;
    let mut converged = false;
    let mut hvps = 0;

    // CG-Lanczos: q_j = r_j / ||r_j|| spans the same Krylov space
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut t = SymTridiagonal::default();
    let mut prev: Option<(f64, f64)> = None; // (alpha_{j-1}, beta_{j-1})

    for _ in 0..max_iter {
        let hp = model.hessian.apply(&p)?;
        hvps += 1;
        let curv = linalg::dot(&p, &hp);
        if options.curvature_hint {
            basis.push(linalg::scaled(1.0 / rr.sqrt(), &r));
            let mut diag = curv / rr;
            let mut off = 0.0;
            if let Some((a_prev, b_prev)) = prev {
                diag += b_prev / a_prev;
                off = -b_prev.sqrt() / a_prev;
            }
            t.push(diag, off);
        }
        let rp = linalg::dot(&r, &p);
        if curv <= 0.0 {
            let tau = boundary_step(&s, &p, delta);
            linalg::axpy(tau, &p, &mut s);
            m += tau * rp + 0.5 * tau * tau * curv;
            status = SubproblemStatus::NegativeCurvatureExit;
            converged = true;
            break;
        }
        let alpha = rr / curv;
        let trial = linalg::add(&s, &linalg::scaled(alpha, &p));
        if linalg::norm(&trial) >= delta {
            let tau = boundary_step(&s, &p, delta);
            linalg::axpy(tau, &p, &mut s);
            m += tau * rp + 0.5 * tau * tau * curv;
            status = SubproblemStatus::Boundary;
            converged = true;
            break;
        }
        s = trial;
        m += alpha * rp + 0.5 * alpha * alpha * curv;
        linalg::axpy(alpha, &hp, &mut r);
        let rr_next = linalg::dot(&r, &r);
        if rr_next.sqrt() <= tol {
            converged = true;
            break;
        }
        let beta = rr_next / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = -ri + beta * *pi;
        }
        rr = rr_next;
        prev = Some((alpha, beta));
    }

    // guard feasibility against rounding in the boundary root
    let sn = linalg::norm(&s);
    if sn > delta {
        linalg::scale(delta / sn, &mut s);
    }

    let mut curvature_hint = None;
    if options.curvature_hint && !t.is_empty() {
        let theta = t.min_eigenvalue();
        if theta < 0.0 {
            let z = t.bottom_eigenvector(theta);
            let u = lift_unit(&basis, &z);
            let value = model.hessian.quadratic_form(&u)?;
            hvps += 1;
            curvature_hint = Some(EigEstimate {
                value,
                vector: u,
                converged: false,
                iterations: t.len(),
                ritz_history: vec![theta],
            });
        }
    }

    Ok(SubproblemResult {
        step: s,
        model_value: m,
        status,
        inner_iterations: hvps,
        converged,
        curvature_hint,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrSolveOptions {
    pub cg: CgOptions,
    /// Curvature estimates below `-eps_h` produce an eigen candidate.
    pub eps_h: f64,
}

impl Default for TrSolveOptions {
    fn default() -> Self {
        Self {
            cg: CgOptions::default(),
            eps_h: 1e-3,
        }
    }
}

/// Best of the CG step and any eigen points available from `eig` or from
/// the CG Krylov space.
pub fn solve_tr_subproblem(
    model: &TrModel<'_>,
    eig: Option<&EigEstimate>,
    options: &TrSolveOptions,
) -> Result<SubproblemResult> {
    if model.gradient_zeroed {
        return match eig {
            Some(e) if e.value < 0.0 => eigen_point_tr(model, e),
            _ => Err(Error::usage(
                "zeroed-gradient model needs a negative-curvature estimate",
            )),
        };
    }
    let cg = steihaug_cg(model, &options.cg)?;
    let hint = cg.curvature_hint.clone();
    let mut candidates = vec![cg];
    for e in eig.into_iter().chain(hint.as_ref()) {
        if e.value < -options.eps_h {
            candidates.push(eigen_point_tr(model, e)?);
        }
    }
    let mut best = best_candidate(candidates);
    if best.curvature_hint.is_none() {
        best.curvature_hint = hint;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseSymmetric;

    fn unit(d: usize, j: usize) -> Vec<f64> {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        e
    }

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
    fn cauchy_interior_minimum() {
        let h = DenseSymmetric::identity(2);
        let g = [1.0, 0.0];
        let m = TrModel::new(&g, &h, 10.0).unwrap();
        let r = cauchy_point_tr(&m).unwrap();
        assert_eq!(r.step, vec![-1.0, 0.0]);
        assert_eq!(r.model_value, -0.5);
    }

    #[test]
    fn cauchy_concave_direction_hits_boundary() {
        let h = DenseSymmetric::identity(2).scaled(-1.0);
        let g = [1.0, 0.0];
        let m = TrModel::new(&g, &h, 2.0).unwrap();
        let r = cauchy_point_tr(&m).unwrap();
        assert_eq!(r.step, vec![-2.0, 0.0]);
        assert_eq!(r.model_value, -4.0);
        assert_eq!(r.status, SubproblemStatus::Boundary);
    }

    #[test]
    fn cauchy_rejects_zero_gradient() {
        let h = DenseSymmetric::identity(2);
        let g = [0.0, 0.0];
        let m = TrModel::new(&g, &h, 1.0).unwrap();
        assert!(matches!(cauchy_point_tr(&m), Err(Error::Usage(_))));
    }

    #[test]
    fn eigen_point_zeroed_model() {
        let h = DenseSymmetric::from_diagonal(&[1.0, -2.0]);
        let g = [0.3, 0.0];
        let m = TrModel::new(&g, &h, 3.0).unwrap().zeroed();
        let r = eigen_point_tr(&m, &estimate(-2.0, unit(2, 1))).unwrap();
        assert_eq!(r.step[1].abs(), 3.0);
        assert_eq!(r.model_value, -18.0);
        assert_eq!(m.value(&r.step).unwrap(), -18.0);
    }

    #[test]
    fn eigen_point_standard_model_sign() {
        let h = DenseSymmetric::from_diagonal(&[1.0, -2.0]);
        let g = [0.0, 1.0];
        let m = TrModel::new(&g, &h, 1.0).unwrap();
        let r = eigen_point_tr(&m, &estimate(-2.0, unit(2, 1))).unwrap();
        assert_eq!(r.step, vec![0.0, -1.0]);
        assert_eq!(r.model_value, -2.0);
        assert!(matches!(
            eigen_point_tr(&m, &estimate(0.5, unit(2, 1))),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn cg_identity_gives_newton_step() {
        let h = DenseSymmetric::identity(3);
        let g = [1.0, -2.0, 0.5];
        let m = TrModel::new(&g, &h, 1e6).unwrap();
        let r = steihaug_cg(&m, &CgOptions::default()).unwrap();
        for (s, gi) in r.step.iter().zip(&g) {
            assert!((s + gi).abs() < 1e-14);
        }
        assert_eq!(r.status, SubproblemStatus::Interior);
    }

    #[test]
    fn cg_negative_curvature_exit() {
        let h = DenseSymmetric::from_diagonal(&[-1.0, 2.0]);
        let g = [1.0, 0.0];
        let m = TrModel::new(&g, &h, 0.7).unwrap();
        let r = steihaug_cg(&m, &CgOptions::default()).unwrap();
        assert_eq!(r.status, SubproblemStatus::NegativeCurvatureExit);
        assert!((linalg::norm(&r.step) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn cg_lanczos_tridiagonal_matches_projection() {
        // Ritz hint must be a genuine Rayleigh quotient
        let h = DenseSymmetric::from_row_major(
            4,
            vec![
                2.0, 0.5, 0.0, 0.1, 0.5, -1.0, 0.3, 0.0, 0.0, 0.3, 1.5, 0.2, 0.1, 0.0, 0.2, 3.0,
            ],
        )
        .unwrap();
        let g = [0.2, 0.1, -0.3, 0.4];
        let m = TrModel::new(&g, &h, 100.0).unwrap();
        let opts = CgOptions {
            tol: Some(1e-14),
            max_iter: Some(4),
            curvature_hint: true,
        };
        let r = steihaug_cg(&m, &opts).unwrap();
        let hint = r.curvature_hint.expect("indefinite operator");
        let theta = hint.ritz_history[0];
        assert!(
            (hint.value - theta).abs() < 1e-10 * theta.abs(),
            "{} vs {}",
            hint.value,
            theta
        );
    }

    #[test]
    fn solver_requires_estimate_for_zeroed_model() {
        let h = DenseSymmetric::identity(2);
        let g = [0.0, 0.0];
        let m = TrModel::new(&g, &h, 1.0).unwrap().zeroed();
        assert!(matches!(
            solve_tr_subproblem(&m, None, &TrSolveOptions::default()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn boundary_root_is_stable() {
        let s = [0.6, 0.0];
        let p = [1.0, 1.0];
        let tau = boundary_step(&s, &p, 1.0);
        let end = [s[0] + tau * p[0], s[1] + tau * p[1]];
        assert!((linalg::norm(&end) - 1.0).abs() < 1e-15);
        let p = [-1.0, 0.2];
        let tau = boundary_step(&s, &p, 1.0);
        assert!(tau > 0.0);
        let end = [s[0] + tau * p[0], s[1] + tau * p[1]];
        assert!((linalg::norm(&end) - 1.0).abs() < 1e-15);
    }
}
