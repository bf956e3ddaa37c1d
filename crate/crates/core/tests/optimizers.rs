use newton_core::problems::{make_quadratic, make_rosenbrock, synthetic_dataset, NlsProblem};
use newton_core::subproblem::ArcMode;
use newton_core::{
    run_arc, run_tr, DenseSymmetric, OptimizerConfig, Oracle, SampleConfig, SampleSize,
    StepOutcome, TerminationReason,
};

fn nls() -> NlsProblem {
    NlsProblem::new(synthetic_dataset(500, 8, 0.6, 3).unwrap())
}

#[test]
fn trace_props_reconcile_with_ledger() {
    let p = nls();
    for arc in [false, true] {
        let oracle = Oracle::new(&p);
        let cfg = OptimizerConfig {
            sampling: SampleConfig::inexact(SampleSize::Ratio(0.2), SampleSize::Ratio(0.05), 1),
            max_iter: 30,
            ..OptimizerConfig::default()
        };
        let r = if arc {
            run_arc(&oracle, &[0.0; 8], &cfg)
        } else {
            run_tr(&oracle, &[0.0; 8], &cfg)
        }
        .unwrap();
        assert!(r.trace.windows(2).all(|w| w[0].props < w[1].props));
        assert_eq!(r.total_props(), oracle.ledger().cumulative());
        assert_eq!(r.trace.last().unwrap().loss, r.final_loss);
    }
}

#[test]
fn runs_are_reproducible() {
    let p = nls();
    let cfg = OptimizerConfig {
        sampling: SampleConfig::inexact(SampleSize::Ratio(0.1), SampleSize::Ratio(0.02), 9),
        max_iter: 25,
        ..OptimizerConfig::default()
    };
    let a = run_arc(&Oracle::new(&p), &[0.0; 8], &cfg).unwrap();
    let b = run_arc(&Oracle::new(&p), &[0.0; 8], &cfg).unwrap();
    assert_eq!(a, RunResultNoWall::strip(b.clone(), &a));
}

/// Wall-clock times are the only legitimately different field.
struct RunResultNoWall;

impl RunResultNoWall {
    fn strip(mut b: newton_core::RunResult, a: &newton_core::RunResult) -> newton_core::RunResult {
        for (rb, ra) in b.trace.iter_mut().zip(&a.trace) {
            rb.wall_ms = ra.wall_ms;
        }
        b
    }
}

#[test]
fn quadratic_model_agreement_is_exact() {
    let a = DenseSymmetric::from_row_major(3, vec![4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0])
        .unwrap();
    let q = make_quadratic(a, vec![1.0, -2.0, 0.5]).unwrap();
    let oracle = Oracle::new(&q);
    let cfg = OptimizerConfig {
        delta0: 0.1,
        eps_g: 1e-9,
        ..OptimizerConfig::default()
    };
    let r = run_tr(&oracle, &[3.0, 3.0, 3.0], &cfg).unwrap();
    assert_eq!(r.termination, TerminationReason::Optimality);
    for rec in r
        .trace
        .iter()
        .filter(|r| r.outcome == StepOutcome::Accepted)
    {
        let rho = rec.rho.unwrap();
        assert!((rho - 1.0).abs() < 1e-6, "rho = {rho}");
    }
}

#[test]
fn cauchy_mode_still_converges() {
    let p = make_rosenbrock(2).unwrap();
    let cfg = OptimizerConfig {
        arc_mode: ArcMode::Cauchy,
        max_iter: 20_000,
        eps_g: 1e-4,
        ..OptimizerConfig::default()
    };
    let r = run_arc(&Oracle::new(&p), &[-1.2, 1.0], &cfg).unwrap();
    assert_eq!(r.termination, TerminationReason::Optimality);
}

#[test]
fn budget_and_iteration_caps_stop_the_run() {
    let p = nls();
    let cfg = OptimizerConfig {
        max_props: Some(20_000),
        ..OptimizerConfig::default()
    };
    let r = run_tr(&Oracle::new(&p), &[0.0; 8], &cfg).unwrap();
    assert!(matches!(
        r.termination,
        TerminationReason::PropBudget | TerminationReason::Optimality
    ));
    let cfg = OptimizerConfig {
        max_iter: 2,
        ..OptimizerConfig::default()
    };
    let r = run_arc(&Oracle::new(&p), &[0.0; 8], &cfg).unwrap();
    assert_eq!(r.termination, TerminationReason::MaxIterations);
    assert_eq!(r.iterations(), 2);
}

#[test]
fn fixed_sigma_never_changes() {
    let p = nls();
    let cfg = OptimizerConfig {
        fixed_sigma: Some(3.0),
        max_iter: 15,
        sampling: SampleConfig::sub_hessian(SampleSize::Count(40), 2),
        ..OptimizerConfig::default()
    };
    let r = run_arc(&Oracle::new(&p), &[0.0; 8], &cfg).unwrap();
    assert!(r.trace.iter().all(|rec| rec.radius_or_sigma == 3.0));
}

#[test]
fn invalid_configuration_is_rejected() {
    let p = nls();
    for cfg in [
        OptimizerConfig {
            eta: 0.0,
            ..OptimizerConfig::default()
        },
        OptimizerConfig {
            gamma: 1.0,
            ..OptimizerConfig::default()
        },
        OptimizerConfig {
            delta0: -1.0,
            ..OptimizerConfig::default()
        },
        OptimizerConfig {
            nu: 1.0,
            ..OptimizerConfig::default()
        },
    ] {
        assert!(run_tr(&Oracle::new(&p), &[0.0; 8], &cfg).is_err());
    }
    assert!(run_tr(&Oracle::new(&p), &[0.0; 3], &OptimizerConfig::default()).is_err());
}
