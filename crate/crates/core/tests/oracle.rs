use newton_core::linalg::{dot, norm};
use newton_core::problems::{synthetic_dataset, NlsProblem};
use newton_core::sampling::{draw_sample, stream_rng, SampleRole};
use newton_core::verify::relative_error;
use newton_core::{Oracle, PropWeights, Reduction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problem(seed: u64) -> NlsProblem {
    NlsProblem::new(synthetic_dataset(40, 6, 0.7, seed).unwrap())
}

fn vec6() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hvp_is_linear(seed in 0u64..50, w in vec6(), u in vec6(), v in vec6(), a in -3.0..3.0f64) {
        let p = problem(seed);
        let o = Oracle::new(&p);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + y).collect();
        let lhs = o.hvp(&w, &combo).unwrap();
        let hu = o.hvp(&w, &u).unwrap();
        let hv = o.hvp(&w, &v).unwrap();
        let rhs: Vec<f64> = hu.iter().zip(&hv).map(|(x, y)| a * x + y).collect();
        prop_assert!(relative_error(&lhs, &rhs, 1e-12) < 1e-10);
    }

    #[test]
    fn hvp_is_symmetric(seed in 0u64..50, w in vec6(), u in vec6(), v in vec6()) {
        let p = problem(seed);
        let o = Oracle::new(&p);
        let a = dot(&u, &o.hvp(&w, &v).unwrap());
        let b = dot(&v, &o.hvp(&w, &u).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn parallel_reduction_matches(seed in 0u64..50, w in vec6()) {
        let p = problem(seed);
        let seq = Oracle::new(&p);
        let par = Oracle::new(&p).with_reduction(Reduction::Parallel);
        prop_assert!((seq.eval(&w).unwrap() - par.eval(&w).unwrap()).abs() < 1e-14);
        prop_assert!(relative_error(&seq.grad(&w).unwrap(), &par.grad(&w).unwrap(), 1e-12) < 1e-12);
    }
}

#[test]
fn sampled_gradient_is_unbiased() {
    let p = problem(3);
    let o = Oracle::new(&p);
    let w = vec![0.3, -0.2, 0.1, 0.5, -0.4, 0.2];
    let full = o.grad(&w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 4000;
    let mut mean = vec![0.0; 6];
    for _ in 0..trials {
        let s = draw_sample(40, 4, &mut rng);
        let g = o.sampled_gradient(&w, &s).unwrap();
        mean.iter_mut()
            .zip(&g)
            .for_each(|(m, x)| *m += x / trials as f64);
    }
    let err: Vec<f64> = mean.iter().zip(&full).map(|(a, b)| a - b).collect();
    assert!(
        norm(&err) < 0.05 * norm(&full).max(1e-3),
        "{mean:?} vs {full:?}"
    );
}

#[test]
fn draws_are_uniform() {
    let n = 10;
    let mut counts = [0usize; 10];
    let mut rng = stream_rng(5, 0, SampleRole::Gradient);
    let draws = 100_000;
    for i in draw_sample(n, draws, &mut rng) {
        counts[i] += 1;
    }
    let expected = draws as f64 / n as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 9 degrees of freedom, 0.999 quantile
    assert!(chi2 < 27.9, "chi2 = {chi2}");
}

#[test]
fn streams_are_independent_and_reproducible() {
    let a = draw_sample(1000, 20, &mut stream_rng(1, 3, SampleRole::Gradient));
    let b = draw_sample(1000, 20, &mut stream_rng(1, 3, SampleRole::Gradient));
    let c = draw_sample(1000, 20, &mut stream_rng(1, 3, SampleRole::Hessian));
    let d = draw_sample(1000, 20, &mut stream_rng(1, 4, SampleRole::Gradient));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_ne!(a, d);
}

#[test]
fn ledger_charges_weighted_propagations() {
    let p = problem(1);
    let o = Oracle::with_weights(&p, PropWeights::default());
    let w = vec![0.0; 6];
    o.eval(&w).unwrap();
    o.grad(&w).unwrap();
    o.hvp(&w, &w).unwrap();
    o.sampled_gradient(&w, &[0, 1, 1]).unwrap();
    o.sampled_hvp(&w, &w, &[2]).unwrap();
    assert_eq!(o.ledger().cumulative(), 40 + 2 * 40 + 4 * 40 + 2 * 3 + 4);
}
