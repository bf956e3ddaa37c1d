//! Approximate most-negative curvature direction of a matrix-free operator.
//!
//! Lanczos tridiagonalization from a random unit vector with full
//! reorthogonalization. The smallest Ritz value is tracked as the Krylov
//! space grows; the run stops once it stagnates, the space becomes
//! invariant, or the dimension cap is reached. The returned value is the
//! Rayleigh quotient of the returned unit vector, recomputed with one extra
//! operator application.

use rand::Rng;

use crate::error::Result;
use crate::linalg::{self, LinearOperator};
use crate::tridiag::SymTridiagonal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Relative stagnation tolerance on the smallest Ritz value.
    pub tol: f64,
    /// Cap on the Krylov dimension (further capped by `d`).
    pub max_dim: usize,
    /// Consecutive stagnant steps required to declare convergence.
    pub stagnation_steps: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_dim: 100,
            stagnation_steps: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigEstimate {
    /// `<u, H u>`
    pub value: f64,
    /// Unit vector `u`.
    pub vector: Vec<f64>,
    pub converged: bool,
    /// Lanczos steps taken.
    pub iterations: usize,
    /// Smallest Ritz value after each Lanczos step.
    pub ritz_history: Vec<f64>,
}

/// Uniformly distributed unit vector (normalized Gaussian, Box-Muller).
pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..d)
            .map(|_| {
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let nv = linalg::norm(&v);
        if nv > 0.0 {
            linalg::scale(1.0 / nv, &mut v);
            return v;
        }
    }
}

/// Classical Gram-Schmidt against `basis`, applied twice.
pub(crate) fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = linalg::dot(w, q);
            linalg::axpy(-c, q, w);
        }
    }
}

/// `sum_j z_j q_j`, normalized.
pub(crate) fn lift_unit(basis: &[Vec<f64>], z: &[f64]) -> Vec<f64> {
    let d = basis[0].len();
    let mut u = vec![0.0; d];
    for (q, zj) in basis.iter().zip(z) {
        linalg::axpy(*zj, q, &mut u);
    }
    let nu = linalg::norm(&u);
    linalg::scale(1.0 / nu, &mut u);
    u
}

pub fn approx_min_eig<H, R>(op: &H, options: &EigOptions, rng: &mut R) -> Result<EigEstimate>
where
    H: LinearOperator + ?Sized,
    R: Rng + ?Sized,
{
    let d = op.dim();
    let cap = options.max_dim.min(d).max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cap);
    basis.push(random_unit_vector(d, rng));
    let mut t = SymTridiagonal::default();
    let mut history: Vec<f64> = Vec::with_capacity(cap);
    let mut beta_prev = 0.0;
    let mut stagnant = 0;
    let mut converged = false;

    loop {
        let k = basis.len() - 1;
        let mut w = op.apply(&basis[k])?;
        let alpha = linalg::dot(&w, &basis[k]);
        linalg::axpy(-alpha, &basis[k], &mut w);
        if k > 0 {
            linalg::axpy(-beta_prev, &basis[k - 1], &mut w);
        }
        reorthogonalize(&mut w, &basis);
        t.push(alpha, beta_prev);

        let theta = t.min_eigenvalue();
        if let Some(&prev) = history.last() {
            let floor = 1e-12 * t.max_abs();
            if (theta - prev).abs() <= options.tol * theta.abs().max(floor) {
                stagnant += 1;
            } else {
                stagnant = 0;
            }
        }
        history.push(theta);
        if stagnant >= options.stagnation_steps || basis.len() == d {
            converged = true;
            break;
        }
        if basis.len() == cap {
            break;
        }
        let beta = linalg::norm(&w);
        if beta <= 1e-12 * t.max_abs().max(f64::MIN_POSITIVE) {
            // invariant subspace: Ritz values are exact eigenvalues
            converged = true;
            break;
        }
        linalg::scale(1.0 / beta, &mut w);
        basis.push(w);
        beta_prev = beta;
    }

    let theta = *history.last().expect("at least one Lanczos step");
    let z = t.bottom_eigenvector(theta);
    let u = lift_unit(&basis, &z);
    let value = op.quadratic_form(&u)?;
    Ok(EigEstimate {
        value,
        vector: u,
        converged,
        iterations: history.len(),
        ritz_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseSymmetric;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_with_negative_entry() {
        let h = DenseSymmetric::from_diagonal(&[1.0, -2.0, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = approx_min_eig(&h, &EigOptions::default(), &mut rng).unwrap();
        assert!(e.converged);
        assert!(e.value <= 0.9 * -2.0);
        assert!(e.vector[1].abs() > 1.0 - 1e-8, "{:?}", e.vector);
        assert!((linalg::norm(&e.vector) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positive_definite_has_no_negative_curvature() {
        let h = DenseSymmetric::from_diagonal(&[1.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = approx_min_eig(&h, &EigOptions::default(), &mut rng).unwrap();
        assert!(e.value >= 1.0 - 1e-6);
    }

    #[test]
    fn deterministic_given_seed() {
        let h = DenseSymmetric::from_diagonal(&[4.0, -1.0, 0.5, 2.0, -0.3]);
        let a = approx_min_eig(
            &h,
            &EigOptions::default(),
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        let b = approx_min_eig(
            &h,
            &EigOptions::default(),
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_dimensional_operator() {
        let h = DenseSymmetric::from_diagonal(&[-5.0]);
        let e = approx_min_eig(
            &h,
            &EigOptions::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(e.value, -5.0);
        assert!(e.converged);
    }
}
