//! Small analytic test problems with known structure.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseSymmetric, LinearOperator};
use crate::oracle::Objective;

/// Regularity constants of a problem, available only where they can be
/// computed in closed form. Optimizers never read these.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    /// Hessian Lipschitz constant `L_F`.
    pub hessian_lipschitz: f64,
    /// Bound on `||hess F(x)||`, `K_F`.
    pub hessian_bound: f64,
    /// Per-component gradient bound `K_g`, if globally bounded.
    pub component_gradient_bound: Option<f64>,
    /// Per-component Hessian bound `K_H`.
    pub component_hessian_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticProblem {
    /// `0.5 x^T A x - b^T x`
    Quadratic { a: DenseSymmetric, b: Vec<f64> },
    /// Chained Rosenbrock `sum_j b (x_{j+1} - x_j^2)^2 + (a - x_j)^2`.
    Rosenbrock { a: f64, b: f64, dim: usize },
    /// `0.5 sum_j c_j x_j^2 + (q/4) sum_j x_j^4`; the origin is a saddle
    /// with the given curvatures. `q = 0` is the pure quadratic saddle.
    Saddle { curvatures: Vec<f64>, quartic: f64 },
}

/// Pure quadratic saddle `F(x) = 0.5 sum_j c_j x_j^2`.
pub fn make_saddle_problem(curvatures: &[f64]) -> Result<SyntheticProblem> {
    if curvatures.is_empty() {
        return Err(Error::usage("saddle problem needs at least one curvature"));
    }
    if curvatures.iter().any(|c| !c.is_finite()) {
        return Err(Error::usage("curvatures must be finite"));
    }
    if curvatures.iter().all(|&c| c >= 0.0) {
        return Err(Error::usage(
            "all curvatures are non-negative: the origin is not a saddle",
        ));
    }
    Ok(SyntheticProblem::Saddle {
        curvatures: curvatures.to_vec(),
        quartic: 0.0,
    })
}

/// Saddle with a separable quartic term, bounded below whenever `quartic > 0`.
pub fn make_confined_saddle(curvatures: &[f64], quartic: f64) -> Result<SyntheticProblem> {
    if !(quartic >= 0.0 && quartic.is_finite()) {
        return Err(Error::usage(
            "quartic coefficient must be finite and non-negative",
        ));
    }
    match make_saddle_problem(curvatures)? {
        SyntheticProblem::Saddle { curvatures, .. } => Ok(SyntheticProblem::Saddle {
            curvatures,
            quartic,
        }),
        _ => unreachable!(),
    }
}

pub fn make_quadratic(a: DenseSymmetric, b: Vec<f64>) -> Result<SyntheticProblem> {
    if b.len() != a.dim() {
        return Err(Error::dimension(a.dim(), b.len()));
    }
    Ok(SyntheticProblem::Quadratic { a, b })
}

pub fn make_rosenbrock(dim: usize) -> Result<SyntheticProblem> {
    if dim < 2 {
        return Err(Error::usage("Rosenbrock needs dimension >= 2"));
    }
    Ok(SyntheticProblem::Rosenbrock {
        a: 1.0,
        b: 100.0,
        dim,
    })
}

fn spectral_norm(a: &DenseSymmetric) -> f64 {
    let n = a.dim();
    let m = DMatrix::from_row_slice(n, n, a.as_row_major());
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

impl SyntheticProblem {
    pub fn theory_constants(&self) -> Option<TheoryConstants> {
        match self {
            SyntheticProblem::Quadratic { a, .. } => {
                let k = spectral_norm(a);
                Some(TheoryConstants {
                    hessian_lipschitz: 0.0,
                    hessian_bound: k,
                    component_gradient_bound: None,
                    component_hessian_bound: k,
                })
            }
            SyntheticProblem::Saddle {
                curvatures,
                quartic,
            } if *quartic == 0.0 => {
                let k = curvatures.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()));
                Some(TheoryConstants {
                    hessian_lipschitz: 0.0,
                    hessian_bound: k,
                    component_gradient_bound: None,
                    component_hessian_bound: k,
                })
            }
            _ => None,
        }
    }

    /// Dense Hessian at `x`, row-major.
    pub fn dense_hessian(&self, x: &[f64]) -> DenseSymmetric {
        let d = self.dim();
        let mut data = vec![0.0; d * d];
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            let mut col = vec![0.0; d];
            self.add_component_hvp(0, x, &e, 1.0, &mut col);
            for i in 0..d {
                data[i * d + j] = col[i];
            }
        }
        DenseSymmetric::from_row_major(d, data).expect("square by construction")
    }
}

impl Objective for SyntheticProblem {
    fn dim(&self) -> usize {
        match self {
            SyntheticProblem::Quadratic { b, .. } => b.len(),
            SyntheticProblem::Rosenbrock { dim, .. } => *dim,
            SyntheticProblem::Saddle { curvatures, .. } => curvatures.len(),
        }
    }

    fn component_value(&self, _i: usize, x: &[f64]) -> f64 {
        match self {
            SyntheticProblem::Quadratic { a, b } => {
                0.5 * linalg::dot(x, &a.mul_vec(x)) - linalg::dot(b, x)
            }
            SyntheticProblem::Rosenbrock { a, b, dim } => (0..dim - 1)
                .map(|j| {
                    let t = x[j + 1] - x[j] * x[j];
                    let u = a - x[j];
                    b * t * t + u * u
                })
                .sum(),
            SyntheticProblem::Saddle {
                curvatures,
                quartic,
            } => curvatures
                .iter()
                .zip(x)
                .map(|(c, xj)| 0.5 * c * xj * xj + 0.25 * quartic * xj.powi(4))
                .sum(),
        }
    }

    fn add_component_gradient(&self, _i: usize, x: &[f64], w: f64, out: &mut [f64]) {
        match self {
            SyntheticProblem::Quadratic { a, b } => {
                let ax = a.mul_vec(x);
                for j in 0..x.len() {
                    out[j] += w * (ax[j] - b[j]);
                }
            }
            SyntheticProblem::Rosenbrock { a, b, dim } => {
                for j in 0..dim - 1 {
                    let t = x[j + 1] - x[j] * x[j];
                    out[j] += w * (-4.0 * b * x[j] * t - 2.0 * (a - x[j]));
                    out[j + 1] += w * 2.0 * b * t;
                }
            }
            SyntheticProblem::Saddle {
                curvatures,
                quartic,
            } => {
                for (j, c) in curvatures.iter().enumerate() {
                    out[j] += w * (c * x[j] + quartic * x[j].powi(3));
                }
            }
        }
    }

    fn add_component_hvp(&self, _i: usize, x: &[f64], v: &[f64], w: f64, out: &mut [f64]) {
        match self {
            SyntheticProblem::Quadratic { a, .. } => {
                linalg::axpy(w, &a.mul_vec(v), out);
            }
            SyntheticProblem::Rosenbrock { b, dim, .. } => {
                for j in 0..dim - 1 {
                    // Hessian block of term j on (x_j, x_{j+1})
                    let h00 = 12.0 * b * x[j] * x[j] - 4.0 * b * x[j + 1] + 2.0;
                    let h01 = -4.0 * b * x[j];
                    let h11 = 2.0 * b;
                    out[j] += w * (h00 * v[j] + h01 * v[j + 1]);
                    out[j + 1] += w * (h01 * v[j] + h11 * v[j + 1]);
                }
            }
            SyntheticProblem::Saddle {
                curvatures,
                quartic,
            } => {
                for (j, c) in curvatures.iter().enumerate() {
                    if *quartic == 0.0 {
                        out[j] += w * c * v[j];
                    } else {
                        out[j] += w * (c + 3.0 * quartic * x[j] * x[j]) * v[j];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Oracle;

    #[test]
    fn quadratic_value_and_gradient() {
        let p = make_quadratic(DenseSymmetric::identity(2), vec![0.0, 0.0]).unwrap();
        let o = Oracle::new(&p);
        assert_eq!(o.eval(&[3.0, 4.0]).unwrap(), 12.5);
        assert_eq!(o.grad(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn quadratic_hvp() {
        let p = make_quadratic(DenseSymmetric::from_diagonal(&[1.0, 2.0]), vec![0.0; 2]).unwrap();
        let o = Oracle::new(&p);
        assert_eq!(o.hvp(&[5.0, -1.0], &[1.0, 1.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(o.hvp(&[5.0, -1.0], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rosenbrock_minimum() {
        let p = make_rosenbrock(2).unwrap();
        let o = Oracle::new(&p);
        assert_eq!(o.eval(&[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(o.grad(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn saddle_structure() {
        let p = make_saddle_problem(&[1.0, -2.0, 3.0]).unwrap();
        let o = Oracle::new(&p);
        assert_eq!(o.grad(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        let x = [0.3, -7.0, 2.5];
        for (j, c) in [1.0, -2.0, 3.0].iter().enumerate() {
            let mut e = vec![0.0; 3];
            e[j] = 1.0;
            let mut expected = vec![0.0; 3];
            expected[j] = *c;
            assert_eq!(o.hvp(&x, &e).unwrap(), expected);
        }
        let k = p.theory_constants().unwrap();
        assert_eq!(k.hessian_lipschitz, 0.0);
        assert_eq!(k.hessian_bound, 3.0);
    }

    #[test]
    fn saddle_requires_negative_curvature() {
        assert!(matches!(
            make_saddle_problem(&[1.0, 0.0, 2.0]),
            Err(Error::Usage(_))
        ));
        assert!(make_saddle_problem(&[1.0, -1e-9]).is_ok());
    }

    #[test]
    fn quadratic_constants_use_spectral_norm() {
        let a = DenseSymmetric::from_row_major(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let p = make_quadratic(a, vec![1.0, 0.0]).unwrap();
        let k = p.theory_constants().unwrap();
        assert!((k.hessian_bound - 3.0).abs() < 1e-14);
        assert_eq!(k.hessian_lipschitz, 0.0);
    }

    #[test]
    fn dense_hessian_of_rosenbrock_is_symmetric() {
        let p = make_rosenbrock(4).unwrap();
        let h = p.dense_hessian(&[0.1, -0.4, 1.2, 0.8]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h.get(i, j), h.get(j, i));
            }
        }
    }
}
