//! Symmetric tridiagonal matrices produced by Lanczos-type processes.

/// `diag` has `k` entries, `off` has `k - 1` (off[i] couples rows i, i+1).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// `L D L^T` factors of `T + shift I`, unit lower bidiagonal `L`.
#[derive(Debug, Clone)]
pub struct Ldl {
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    /// Solves `(T + shift I) y = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.d.len();
        let mut z = rhs.to_vec();
        for i in 1..k {
            z[i] -= self.l[i - 1] * z[i - 1];
        }
        for (zi, di) in z.iter_mut().zip(&self.d) {
            *zi /= di;
        }
        for i in (0..k.saturating_sub(1)).rev() {
            z[i] -= self.l[i] * z[i + 1];
        }
        z
    }

    /// `y^T (T + shift I)^{-1} y`.
    pub fn inverse_quadratic(&self, y: &[f64]) -> f64 {
        let k = self.d.len();
        let mut z = y.to_vec();
        for i in 1..k {
            z[i] -= self.l[i - 1] * z[i - 1];
        }
        z.iter().zip(&self.d).map(|(zi, di)| zi * zi / di).sum()
    }
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(
            off.len() + 1 == diag.len() || (diag.is_empty() && off.is_empty()),
            "off-diagonal length must be one less than the diagonal"
        );
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Appends a row: `alpha` on the diagonal coupled by `beta` to the
    /// previous last row. `beta` is ignored for the first row.
    pub fn push(&mut self, alpha: f64, beta: f64) {
        if !self.diag.is_empty() {
            self.off.push(beta);
        }
        self.diag.push(alpha);
    }

    pub fn mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut out: Vec<f64> = self.diag.iter().zip(y).map(|(a, v)| a * v).collect();
        for i in 0..k.saturating_sub(1) {
            out[i] += self.off[i] * y[i + 1];
            out[i + 1] += self.off[i] * y[i];
        }
        out
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let k = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..k {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < k { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Largest absolute entry, used as a scale.
    pub fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.off)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.max_abs());
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let coupling = if i > 0 {
                self.off[i - 1] * self.off[i - 1] / q
            } else {
                0.0
            };
            q = self.diag[i] - x - coupling;
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Smallest eigenvalue by bisection on the Sturm count.
    pub fn min_eigenvalue(&self) -> f64 {
        assert!(!self.is_empty(), "empty tridiagonal has no eigenvalues");
        if self.len() == 1 {
            return self.diag[0];
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * scale {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `L D L^T` of `T + shift I`, or `None` unless every pivot is positive.
    pub fn factor(&self, shift: f64) -> Option<Ldl> {
        let k = self.len();
        let mut l = Vec::with_capacity(k.saturating_sub(1));
        let mut d = Vec::with_capacity(k);
        for i in 0..k {
            let mut di = self.diag[i] + shift;
            if i > 0 {
                let li = self.off[i - 1] / d[i - 1];
                di -= li * self.off[i - 1];
                l.push(li);
            }
            if !(di > 0.0) || !di.is_finite() {
                return None;
            }
            d.push(di);
        }
        Some(Ldl { l, d })
    }

    /// Unit eigenvector for the eigenvalue `theta` (expected to be the
    /// smallest), by shifted inverse iteration.
    pub fn bottom_eigenvector(&self, theta: f64) -> Vec<f64> {
        let k = self.len();
        if k == 1 {
            return vec![1.0];
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut gap = 1e-10 * scale;
        let factor = loop {
            if let Some(f) = self.factor(-(theta - gap)) {
                break f;
            }
            gap *= 10.0;
        };
        // deterministic start with no special structure
        let mut v: Vec<f64> = (0..k)
            .map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
            .collect();
        for _ in 0..4 {
            v = factor.solve(&v);
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= nv;
            }
        }
        v
    }

    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        y.iter().zip(self.mul_vec(y)).map(|(a, b)| a * b).sum()
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let k = self.len();
        let mut m = vec![0.0; k * k];
        for i in 0..k {
            m[i * k + i] = self.diag[i];
            if i + 1 < k {
                m[i * k + i + 1] = self.off[i];
                m[(i + 1) * k + i] = self.off[i];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(k: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; k], vec![-1.0; k - 1])
    }

    #[test]
    fn min_eigenvalue_of_laplacian() {
        // eigenvalues 2 - 2 cos(j pi / (k+1))
        let k = 9;
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (k as f64 + 1.0)).cos();
        let t = laplacian(k);
        assert!((t.min_eigenvalue() - exact).abs() < 1e-14);
        assert_eq!(t.count_below(exact - 1e-9), 0);
        assert_eq!(t.count_below(exact + 1e-9), 1);
        assert_eq!(t.count_below(10.0), k);
    }

    #[test]
    fn ldl_solves_and_detects_indefinite() {
        let t = laplacian(5);
        let f = t.factor(0.0).unwrap();
        let rhs = [1.0, -2.0, 0.5, 3.0, 1.0];
        let y = f.solve(&rhs);
        let back = t.mul_vec(&y);
        for (a, b) in back.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-13);
        }
        let iq = f.inverse_quadratic(&rhs);
        let direct: f64 = rhs.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((iq - direct).abs() < 1e-12 * direct.abs());
        assert!(t.factor(-1.0).is_none());
    }

    #[test]
    fn bottom_eigenvector_is_eigenvector() {
        let t = SymTridiagonal::new(vec![1.0, -3.0, 2.0, 0.5], vec![0.7, -1.1, 0.3]);
        let theta = t.min_eigenvalue();
        let v = t.bottom_eigenvector(theta);
        let tv = t.mul_vec(&v);
        for (a, b) in tv.iter().zip(&v) {
            assert!((a - theta * b).abs() < 1e-12);
        }
    }

    #[test]
    fn decoupled_blocks() {
        let t = SymTridiagonal::new(vec![1.0, 2.0, -4.0, 3.0], vec![0.5, 0.0, 1.0]);
        let theta = t.min_eigenvalue();
        let exact = (-1.0 - (49.0f64 + 4.0).sqrt()) / 2.0; // bottom of [[-4,1],[1,3]]
        assert!((theta - exact).abs() < 1e-13);
        let v = t.bottom_eigenvector(theta);
        assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
    }
}
