//! Global minimizer of the cubic model restricted to a Krylov subspace:
//!
//! ```text
//! psi(y) = beta0 * y[0] + 0.5 y^T T y + (sigma / 3) ||y||^3
//! ```
//!
//! The minimizer satisfies `(T + lambda I) y = -beta0 e1`, `lambda = sigma ||y||`
//! and `T + lambda I >= 0`. The root is found by safeguarded Newton on
//! `1/||y(lambda)|| - sigma/lambda`, which is concave and increasing above
//! `max(0, -lambda_min(T))`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

const MAX_ROOT_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSolution {
    pub y: Vec<f64>,
    /// Multiplier `sigma ||y||`.
    pub lambda: f64,
    pub hard_case: bool,
    pub iterations: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `psi(y)` as defined in the module docs.
pub fn subspace_model(t: &SymTridiagonal, beta0: f64, sigma: f64, y: &[f64]) -> f64 {
    beta0 * y[0] + 0.5 * t.quadratic_form(y) + sigma / 3.0 * norm(y).powi(3)
}

/// Minimum-norm solution of `(T + shift I) y = rhs` for singular `T + shift I`
/// whose null space is spanned by the unit vector `v`, with `rhs` orthogonal
/// to `v`.
fn singular_solve(t: &SymTridiagonal, shift: f64, v: &[f64], rhs: &[f64]) -> Vec<f64> {
    let k = t.len();
    let mu = t.max_abs().max(shift.abs()).max(1.0);
    let mut m = DMatrix::from_row_slice(k, k, &t.to_dense());
    for i in 0..k {
        m[(i, i)] += shift;
        for j in 0..k {
            m[(i, j)] += mu * v[i] * v[j];
        }
    }
    let b = DVector::from_column_slice(rhs);
    let x = match m.clone().cholesky() {
        Some(c) => c.solve(&b),
        None => m.lu().solve(&b).unwrap_or_else(|| DVector::zeros(k)),
    };
    let mut y: Vec<f64> = x.iter().copied().collect();
    let c: f64 = y.iter().zip(v).map(|(a, b)| a * b).sum();
    for (yi, vi) in y.iter_mut().zip(v) {
        *yi -= c * vi;
    }
    y
}

pub fn subspace_cubic_solve(
    t: &SymTridiagonal,
    beta0: f64,
    sigma: f64,
) -> Result<SubspaceSolution> {
    if t.is_empty() {
        return Err(Error::usage("empty tridiagonal"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::usage(format!("sigma = {sigma} must be positive")));
    }
    if !(beta0 >= 0.0 && beta0.is_finite()) {
        return Err(Error::usage(format!(
            "beta0 = {beta0} must be non-negative"
        )));
    }
    let k = t.len();
    let theta = t.min_eigenvalue();
    let lambda_low = (-theta).max(0.0);
    let mut rhs = vec![0.0; k];
    rhs[0] = -beta0;

    if beta0 == 0.0 {
        if theta >= 0.0 {
            return Ok(SubspaceSolution {
                y: vec![0.0; k],
                lambda: 0.0,
                hard_case: false,
                iterations: 0,
            });
        }
        let v = t.bottom_eigenvector(theta);
        let scale = lambda_low / sigma;
        return Ok(SubspaceSolution {
            y: v.iter().map(|vi| scale * vi).collect(),
            lambda: lambda_low,
            hard_case: true,
            iterations: 0,
        });
    }

    if theta < 0.0 {
        let v = t.bottom_eigenvector(theta);
        if v[0].abs() < 1e-12 {
            let yp = singular_solve(t, lambda_low, &v, &rhs);
            let np = norm(&yp);
            if sigma * np <= lambda_low {
                let radius = lambda_low / sigma;
                let tau = (radius * radius - np * np).max(0.0).sqrt();
                let sign = if v[0] > 0.0 { -1.0 } else { 1.0 };
                let y = yp.iter().zip(&v).map(|(a, b)| a + sign * tau * b).collect();
                return Ok(SubspaceSolution {
                    y,
                    lambda: lambda_low,
                    hard_case: true,
                    iterations: 0,
                });
            }
        }
    }

    // sigma ||y(hi)|| <= hi, since ||y(l)|| <= beta0 / (l + theta)
    let mut hi = (-theta + (theta * theta + 4.0 * sigma * beta0).sqrt()) / 2.0;
    hi = hi.max(lambda_low) * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE;
    let mut lo = lambda_low;
    let mut lambda = hi;
    let mut best: Option<(Vec<f64>, f64)> = None;

    for step in 1..=MAX_ROOT_STEPS {
        let Some(f) = t.factor(lambda) else {
            lo = lambda;
            lambda = 0.5 * (lo + hi);
            continue;
        };
        let y = f.solve(&rhs);
        let ny = norm(&y);
        let h = sigma * ny - lambda;
        best = Some((y.clone(), lambda));
        if h.abs() <= 1e-14 * lambda || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(SubspaceSolution {
                y,
                lambda,
                hard_case: false,
                iterations: step,
            });
        }
        if h > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let phi = 1.0 / ny - sigma / lambda;
        let dphi = f.inverse_quadratic(&y) / ny.powi(3) + sigma / (lambda * lambda);
        let mut next = lambda - phi / dphi;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        lambda = next;
    }
    let value = best.map(|(y, l)| sigma * norm(&y) - l).unwrap_or(f64::NAN);
    Err(Error::numerical(
        format!(
            "secular equation did not converge in {MAX_ROOT_STEPS} steps \
             (k = {k}, sigma = {sigma}, beta0 = {beta0}, bracket = [{lo}, {hi}]); residual"
        ),
        value,
    ))
}
