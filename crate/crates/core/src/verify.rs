//! Reference computations used to validate the production solvers, and the
//! fast self-check suite behind `newton check`.
//!
//! The references are deliberately naive: dense eigendecompositions,
//! bisection, golden-section search and central differences. None of them
//! share code with the solvers they check.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::{self, DenseSymmetric, LinearOperator};
use crate::negcurv::{approx_min_eig, EigOptions};
use crate::oracle::{Objective, Oracle};
use crate::problems::{synthetic_dataset, NlsProblem};
use crate::sampling::{uniform_sample_sizes, AccuracyBudget};
use crate::subproblem::{
    cauchy_point_arc, cauchy_point_tr, subspace_cubic_solve, CubicModel, TrModel,
};
use crate::tridiag::SymTridiagonal;

/// Central-difference gradient with step `h`.
pub fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|j| {
            xp[j] = x[j] + h;
            let fp = f(&xp);
            xp[j] = x[j] - h;
            let fm = f(&xp);
            xp[j] = x[j];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `(grad(x + h v) - grad(x - h v)) / 2h`
pub fn finite_difference_hvp<G: Fn(&[f64]) -> Vec<f64>>(
    grad: G,
    x: &[f64],
    v: &[f64],
    h: f64,
) -> Vec<f64> {
    let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let xm: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
    let gp = grad(&xp);
    let gm = grad(&xm);
    gp.iter()
        .zip(&gm)
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect()
}

/// `||a - b|| / max(||b||, floor)`
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    linalg::norm(&linalg::sub(a, b)) / linalg::norm(b).max(floor)
}

/// Minimizer of a unimodal `f` on `[a, b]`; returns `(x, f(x))`. Endpoints
/// are compared too, so monotone functions are handled.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    [(a, f(a)), (b, f(b)), (mid, f(mid))]
        .into_iter()
        .fold((mid, f(mid)), |best, c| if c.1 < best.1 { c } else { best })
}

/// Eigenvalues (ascending) and matching unit eigenvectors.
pub fn dense_eigen(h: &DenseSymmetric) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = h.dim();
    let m = DMatrix::from_row_slice(n, n, h.as_row_major());
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

pub fn dense_min_eigenvalue(h: &DenseSymmetric) -> f64 {
    dense_eigen(h).0[0]
}

pub fn spectral_norm(h: &DenseSymmetric) -> f64 {
    let (values, _) = dense_eigen(h);
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Global minimizer of `<g, s> + 0.5 <s, H s> + (sigma/3) ||s||^3` by
/// bisection on the secular equation in the eigenbasis of `H`. Returns the
/// minimizer and its model value.
pub fn dense_cubic_minimizer(h: &DenseSymmetric, g: &[f64], sigma: f64) -> (Vec<f64>, f64) {
    let (lam, vecs) = dense_eigen(h);
    let n = lam.len();
    let gh: Vec<f64> = vecs.iter().map(|v| linalg::dot(v, g)).collect();
    let gnorm = linalg::norm(g);
    let low = (-lam[0]).max(0.0);
    let scale = lam.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    // components in the bottom eigenspace
    let bottom: Vec<usize> = (0..n)
        .filter(|&i| lam[i] <= lam[0] + 1e-10 * scale)
        .collect();
    let coeffs = |l: f64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if lam[i] + l > 0.0 {
                    -gh[i] / (lam[i] + l)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let coef_norm = |c: &[f64]| c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let value = |s: &[f64]| {
        let hs = h.mul_vec(s);
        linalg::dot(g, s) + 0.5 * linalg::dot(s, &hs) + sigma / 3.0 * linalg::norm(s).powi(3)
    };
    let lift = |c: &[f64]| {
        let mut s = vec![0.0; n];
        for (v, ci) in vecs.iter().zip(c) {
            linalg::axpy(*ci, v, &mut s);
        }
        s
    };

    let orthogonal = bottom
        .iter()
        .all(|&i| gh[i].abs() <= 1e-13 * gnorm.max(1e-300));
    if orthogonal && lam[0] <= 0.0 {
        let c = coeffs(low);
        let cn = coef_norm(&c);
        if sigma * cn <= low {
            let mut c = c;
            let tau = ((low / sigma).powi(2) - cn * cn).max(0.0).sqrt();
            c[bottom[0]] = tau;
            let s = lift(&c);
            let v = value(&s);
            return (s, v);
        }
    }
    // g = 0 with H >= 0
    if gnorm == 0.0 {
        return (vec![0.0; n], 0.0);
    }
    let mut lo = low;
    let mut hi = low + 1.0;
    while sigma * coef_norm(&coeffs(hi)) > hi {
        hi = low + 2.0 * (hi - low);
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sigma * coef_norm(&coeffs(mid)) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = lift(&coeffs(hi));
    let v = value(&s);
    (s, v)
}

/// Dense tridiagonal wrapper for the subspace oracle.
pub fn dense_subspace_minimum(t: &SymTridiagonal, beta0: f64, sigma: f64) -> f64 {
    let k = t.len();
    let h = DenseSymmetric::from_row_major(k, t.to_dense()).expect("square");
    let mut g = vec![0.0; k];
    g[0] = beta0;
    dense_cubic_minimizer(&h, &g, sigma).1
}

/// Symmetric matrix with i.i.d. uniform `[-1, 1]` entries.
pub fn random_symmetric<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseSymmetric {
    let mut data = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = rng.gen_range(-1.0..1.0);
            data[i * d + j] = v;
            data[j * d + i] = v;
        }
    }
    DenseSymmetric::from_row_major(d, data).expect("square")
}

pub fn random_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Wraps an objective and adds a constant bias to every gradient entry.
/// Exists to exercise the negative path of the self-checks.
pub struct BiasedGradient<'a> {
    pub inner: &'a dyn Objective,
    pub bias: f64,
}

impl Objective for BiasedGradient<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn num_components(&self) -> usize {
        self.inner.num_components()
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        self.inner.component_value(i, x)
    }

    fn add_component_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]) {
        self.inner.add_component_gradient(i, x, weight, out);
        for o in out.iter_mut() {
            *o += weight * self.bias;
        }
    }

    fn add_component_hvp(&self, i: usize, x: &[f64], v: &[f64], weight: f64, out: &mut [f64]) {
        self.inner.add_component_hvp(i, x, v, weight, out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckOptions {
    /// Bias added to the analytic NLS gradient (0 for a normal run).
    pub gradient_perturbation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, limit: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst < limit,
        detail: format!("worst {worst:.3e} (limit {limit:.0e})"),
    }
}

fn check_nls_derivatives(options: &CheckOptions) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut worst_g: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    for trial in 0..20 {
        let data = synthetic_dataset(50, 10, 0.6, options.seed.wrapping_add(trial))?;
        let problem = NlsProblem::new(data);
        let biased = BiasedGradient {
            inner: &problem,
            bias: options.gradient_perturbation,
        };
        let o = Oracle::new(&biased);
        let w = random_vector(10, &mut rng);
        let v = random_vector(10, &mut rng);
        let h = 1e-6 * (1.0 + linalg::norm(&w));
        let fd = finite_difference_gradient(|x| o.eval(x).unwrap(), &w, h);
        worst_g = worst_g.max(relative_error(&o.grad(&w)?, &fd, 1e-8));
        let fdh = finite_difference_hvp(|x| o.grad(x).unwrap(), &w, &v, h);
        worst_h = worst_h.max(relative_error(&o.hvp(&w, &v)?, &fdh, 1e-8));
    }
    Ok(vec![
        outcome("nls gradient vs central differences", worst_g, 1e-5),
        outcome("nls hvp vs differenced gradient", worst_h, 1e-5),
    ])
}

fn check_hvp_symmetry(options: &CheckOptions) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x51);
    let problem = NlsProblem::new(synthetic_dataset(40, 8, 0.5, options.seed)?);
    let o = Oracle::new(&problem);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = random_vector(8, &mut rng);
        let u = random_vector(8, &mut rng);
        let v = random_vector(8, &mut rng);
        let a = linalg::dot(&u, &o.hvp(&x, &v)?);
        let b = linalg::dot(&v, &o.hvp(&x, &u)?);
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1e-300));
    }
    Ok(outcome("hvp symmetry", worst, 1e-10))
}

fn check_cauchy_points(options: &CheckOptions) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0xca);
    let mut worst_tr: f64 = 0.0;
    let mut worst_arc: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(1..=6);
        let h = random_symmetric(d, &mut rng);
        let g = random_vector(d, &mut rng);
        let gn = linalg::norm(&g);
        let radius = rng.gen_range(0.05..3.0);
        let tr = cauchy_point_tr(&TrModel::new(&g, &h, radius)?)?;
        let hg = h.mul_vec(&g);
        let ghg = linalg::dot(&g, &hg);
        let along = |a: f64| -a * gn + 0.5 * a * a * ghg / (gn * gn);
        let (_, brute) = golden_section(along, 0.0, radius, 1e-12);
        worst_tr = worst_tr.max((tr.model_value - brute).abs());

        let sigma = rng.gen_range(0.1..5.0);
        let arc = cauchy_point_arc(&CubicModel::new(&g, &h, sigma)?)?;
        let k = ghg / (gn * gn);
        let textbook = ((k * k + 4.0 * sigma * gn).sqrt() - k) / (2.0 * sigma);
        worst_arc = worst_arc.max((linalg::norm(&arc.step) - textbook).abs() / textbook);
    }
    Ok(vec![
        outcome(
            "trust-region Cauchy point vs golden section",
            worst_tr,
            1e-8,
        ),
        outcome("cubic Cauchy norm vs closed form", worst_arc, 1e-10),
    ])
}

fn check_secular(options: &CheckOptions) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x5ec);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.gen_range(1..=8);
        let diag = random_vector(k, &mut rng).iter().map(|v| 2.0 * v).collect();
        let off = random_vector(k - 1, &mut rng);
        let t = SymTridiagonal::new(diag, off);
        let beta0 = rng.gen_range(0.01..2.0);
        let sigma = rng.gen_range(0.1..5.0);
        let sol = subspace_cubic_solve(&t, beta0, sigma)?;
        let got = beta0 * sol.y[0]
            + 0.5 * t.quadratic_form(&sol.y)
            + sigma / 3.0 * linalg::norm(&sol.y).powi(3);
        let reference = dense_subspace_minimum(&t, beta0, sigma);
        worst = worst.max((got - reference).abs());
    }
    Ok(outcome(
        "subspace cubic solver vs dense secular oracle",
        worst,
        1e-8,
    ))
}

fn check_min_eig(options: &CheckOptions) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0xe16);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..50 {
        let h = random_symmetric(8, &mut rng);
        let lmin = dense_min_eigenvalue(&h);
        if lmin >= -1e-8 {
            continue;
        }
        let e = approx_min_eig(&h, &EigOptions::default(), &mut rng)?;
        // positive means the 0.9 target was missed
        worst = worst.max(e.value - 0.9 * lmin);
    }
    Ok(CheckOutcome {
        name: "Lanczos curvature vs dense eigenvalues",
        passed: worst <= 0.0,
        detail: format!("max(lambda_hat - 0.9 lambda_min) = {worst:.3e}"),
    })
}

fn check_sample_sizes() -> Result<CheckOutcome> {
    let budget = AccuracyBudget {
        gradient_error: 0.1,
        hessian_error: 0.1,
        failure_probability: 0.01,
    };
    let got = uniform_sample_sizes(budget, 1.0, 1.0, 50)?;
    Ok(CheckOutcome {
        name: "a-priori sample sizes",
        passed: got == (7369, 14737),
        detail: format!("{got:?}"),
    })
}

/// Runs every self-check. Errors inside a check count as failures.
pub fn run_checks(options: &CheckOptions) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let failed = |name: &'static str, e: crate::error::Error| CheckOutcome {
        name,
        passed: false,
        detail: e.to_string(),
    };
    match check_nls_derivatives(options) {
        Ok(v) => out.extend(v),
        Err(e) => out.push(failed("nls derivatives", e)),
    }
    out.push(check_hvp_symmetry(options).unwrap_or_else(|e| failed("hvp symmetry", e)));
    match check_cauchy_points(options) {
        Ok(v) => out.extend(v),
        Err(e) => out.push(failed("Cauchy points", e)),
    }
    out.push(check_secular(options).unwrap_or_else(|e| failed("subspace cubic solver", e)));
    out.push(check_min_eig(options).unwrap_or_else(|e| failed("Lanczos curvature", e)));
    out.push(check_sample_sizes().unwrap_or_else(|e| failed("sample sizes", e)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|a| (a - 0.3) * (a - 0.3), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(fx < 1e-12);
        let (x, _) = golden_section(|a| -a, 0.0, 2.0, 1e-12);
        assert_eq!(x, 2.0);
    }

    #[test]
    fn dense_cubic_scalar() {
        let h = DenseSymmetric::from_diagonal(&[2.0]);
        let (s, _) = dense_cubic_minimizer(&h, &[1.0], 1.0);
        assert!((s[0] - (1.0 - 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn dense_cubic_hard_case() {
        let h = DenseSymmetric::from_diagonal(&[1.0, -2.0]);
        let (s, _) = dense_cubic_minimizer(&h, &[1.0, 0.0], 1.0);
        assert!((s[0] + 1.0 / 3.0).abs() < 1e-12);
        assert!((s[1].abs() - (4.0f64 - 1.0 / 9.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn checks_pass_and_perturbation_is_caught() {
        let clean = run_checks(&CheckOptions::default());
        assert!(clean.iter().all(|c| c.passed), "{clean:?}");
        let perturbed = run_checks(&CheckOptions {
            gradient_perturbation: 1e-3,
            seed: 0,
        });
        assert!(perturbed.iter().any(|c| !c.passed));
    }
}
