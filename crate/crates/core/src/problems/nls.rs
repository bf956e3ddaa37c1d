//! Non-linear least squares binary classification with a sigmoid link:
//! `F(w) = (1/n) sum_i (y_i - phi(<x_i, w>))^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data_io::Dataset;
use crate::error::{Error, Result};
use crate::oracle::Objective;

/// Logistic function evaluated without overflow for either sign of `z`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Residual `y - phi(z)` and the first two chain-rule coefficients:
/// `h'(z)` and `h''(z)` for `h(z) = (y - phi(z))^2`.
#[inline]
fn link_terms(y: f64, z: f64) -> (f64, f64, f64) {
    let p = sigmoid(z);
    let dp = p * (1.0 - p);
    let ddp = dp * (1.0 - 2.0 * p);
    let r = y - p;
    (r, -2.0 * r * dp, 2.0 * dp * dp - 2.0 * r * ddp)
}

#[derive(Debug, Clone)]
pub struct NlsProblem {
    data: Dataset,
}

impl NlsProblem {
    pub fn new(data: Dataset) -> Self {
        Self { data }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.data.n() {
            return Err(Error::usage(format!(
                "component {i} out of range for {} rows",
                self.data.n()
            )));
        }
        Ok(())
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.data.dim() {
            return Err(Error::dimension(self.data.dim(), v.len()));
        }
        Ok(())
    }

    /// `(y_i - phi(<x_i, w>))^2`
    pub fn component_value_checked(&self, i: usize, w: &[f64]) -> Result<f64> {
        self.check_index(i)?;
        self.check_len(w)?;
        Ok(self.component_value(i, w))
    }

    /// `-2 (y_i - phi(z)) phi'(z) x_i` with `z = <x_i, w>`.
    pub fn component_gradient(&self, i: usize, w: &[f64]) -> Result<Vec<f64>> {
        self.check_index(i)?;
        self.check_len(w)?;
        let mut out = vec![0.0; self.data.dim()];
        self.add_component_gradient(i, w, 1.0, &mut out);
        Ok(out)
    }

    /// `h_i''(z) <x_i, v> x_i`.
    pub fn component_hvp(&self, i: usize, w: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_index(i)?;
        self.check_len(w)?;
        self.check_len(v)?;
        let mut out = vec![0.0; self.data.dim()];
        self.add_component_hvp(i, w, v, 1.0, &mut out);
        Ok(out)
    }
}

impl Objective for NlsProblem {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn num_components(&self) -> usize {
        self.data.n()
    }

    fn component_value(&self, i: usize, w: &[f64]) -> f64 {
        let r = self.data.label(i) - sigmoid(self.data.dot_row(i, w));
        r * r
    }

    fn add_component_gradient(&self, i: usize, w: &[f64], weight: f64, out: &mut [f64]) {
        let (_, dh, _) = link_terms(self.data.label(i), self.data.dot_row(i, w));
        self.data.add_row(i, weight * dh, out);
    }

    fn add_component_hvp(&self, i: usize, w: &[f64], v: &[f64], weight: f64, out: &mut [f64]) {
        let xv = self.data.dot_row(i, v);
        if xv == 0.0 {
            return;
        }
        let (_, _, ddh) = link_terms(self.data.label(i), self.data.dot_row(i, w));
        self.data.add_row(i, weight * ddh * xv, out);
    }
}

/// Random binary classification data in the shape of the small LIBSVM
/// benchmarks: each feature present with probability `density`, values
/// uniform in `[-1, 1]`, labels drawn from a logistic model around a hidden
/// weight vector.
pub fn synthetic_dataset(n: usize, d: usize, density: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::usage("synthetic dataset needs n >= 1 and d >= 1"));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::usage("density must lie in (0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::new();
        let mut z = 0.0;
        for (j, t) in truth.iter().enumerate() {
            if rng.gen::<f64>() < density {
                let v: f64 = rng.gen_range(-1.0..1.0);
                z += v * t;
                row.push((j, v));
            }
        }
        labels.push(u8::from(rng.gen::<f64>() < sigmoid(z)));
        rows.push(row);
    }
    Dataset::from_rows(d, rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_row(label: u8, row: Vec<(usize, f64)>, d: usize) -> NlsProblem {
        NlsProblem::new(Dataset::from_rows(d, vec![row], vec![label]).unwrap())
    }

    #[test]
    fn value_at_zero_margin_is_quarter() {
        let p = single_row(1, vec![(0, 1.0)], 2);
        assert_eq!(p.component_value_checked(0, &[0.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn value_vanishes_in_the_negative_limit() {
        let p = single_row(0, vec![(0, 1.0)], 1);
        let v = p.component_value_checked(0, &[-800.0]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn value_at_margin_two() {
        // (1 - 1/(1+e^-2))^2 evaluated in extended precision offline
        let p = single_row(1, vec![(0, 1.0)], 1);
        let v = p.component_value_checked(0, &[2.0]).unwrap();
        assert!((v - 0.014_209_336_618_611_04).abs() < 1e-15, "{v}");
    }

    #[test]
    fn gradient_closed_form_at_zero() {
        let p = single_row(1, vec![(0, 1.0)], 3);
        let g = p.component_gradient(0, &[0.0; 3]).unwrap();
        assert_eq!(g, vec![-0.25, 0.0, 0.0]);
    }

    #[test]
    fn hvp_closed_form_at_zero() {
        let p = single_row(1, vec![(0, 1.0)], 2);
        let hv = p.component_hvp(0, &[0.0; 2], &[1.0, 0.0]).unwrap();
        assert_eq!(hv, vec![0.125, 0.0]);
    }

    #[test]
    fn hvp_orthogonal_direction_is_zero() {
        let p = single_row(0, vec![(0, 0.7), (2, -1.3)], 3);
        let hv = p
            .component_hvp(0, &[0.4, 1.0, -0.2], &[1.3, 5.0, 0.7])
            .unwrap();
        assert_eq!(hv, vec![0.0; 3]);
    }

    #[test]
    fn out_of_range_component_is_usage_error() {
        let p = single_row(1, vec![(0, 1.0)], 1);
        assert!(matches!(
            p.component_gradient(1, &[0.0]),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            p.component_value_checked(3, &[0.0]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        // y = 1, z -> +inf, residual underflows to exactly zero
        let p = single_row(1, vec![(0, 1.0)], 1);
        assert_eq!(p.component_gradient(0, &[800.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn synthetic_data_is_deterministic() {
        let a = synthetic_dataset(100, 5, 0.6, 3).unwrap();
        let b = synthetic_dataset(100, 5, 0.6, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 100);
        assert_eq!(a.dim(), 5);
    }
}
