use newton_core::verify::{dense_min_eigenvalue, random_symmetric};
use newton_core::{approx_min_eig, EigOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn lanczos_estimates_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let h = random_symmetric(8, &mut rng);
        let lmin = dense_min_eigenvalue(&h);
        let est = approx_min_eig(&h, &EigOptions::default(), &mut rng).unwrap();
        assert!(est.value >= lmin - 1e-10);
        assert!(est.converged);
        // the full Krylov space is reached or the estimate has stagnated
        if est.iterations == 8 {
            assert!((est.value - lmin).abs() < 1e-8, "{} vs {lmin}", est.value);
        }
        for pair in est.ritz_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{:?}", est.ritz_history);
        }
        let u = &est.vector;
        let unit: f64 = u.iter().map(|x| x * x).sum();
        assert!((unit - 1.0).abs() < 1e-12);
    }
}
