//! Experiment harness behind the `newton` binary: single runs, method
//! comparison grids, regularization sweeps and the self-check suite.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use newton_core::data_io::{format_float, parse_libsvm, write_trace_csv, ParseOptions};
use newton_core::problems::{
    make_confined_saddle, make_quadratic, make_rosenbrock, synthetic_dataset, NlsProblem,
    SyntheticProblem,
};
use newton_core::subproblem::ArcMode;
use newton_core::verify::{run_checks, CheckOptions};
use newton_core::{
    run_arc, run_tr, DenseSymmetric, Objective, OptimizerConfig, Oracle, PropWeights, Reduction,
    RunResult, SampleConfig, SampleSize, TerminationReason,
};

#[derive(Debug, Parser)]
#[command(
    name = "newton",
    version,
    about = "Inexact trust-region and adaptive cubic regularization experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one optimizer and write its trace and summary.
    Run(RunArgs),
    /// Run several methods over several seeds on one problem.
    Compare(CompareArgs),
    /// Compare adaptive and fixed regularization over a list of values.
    SigmaSweep(SweepArgs),
    /// Run the built-in invariant checks.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Nonlinear least squares on a LIBSVM file (needs --data).
    Nls,
    /// Nonlinear least squares on generated data.
    SynthNls,
    /// 0.5 x^T diag(1, 10) x from (1, 1).
    Quadratic,
    /// Chained Rosenbrock from (-1.2, 1, -1.2, ...).
    Rosenbrock,
    /// Quadratic saddle with a quartic confinement, from e1.
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TrFull,
    TrSubh,
    TrInexact,
    ArcFull,
    ArcSubh,
    ArcInexact,
    ArcFixedSigma,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::TrFull => "tr-full",
            Method::TrSubh => "tr-subh",
            Method::TrInexact => "tr-inexact",
            Method::ArcFull => "arc-full",
            Method::ArcSubh => "arc-subh",
            Method::ArcInexact => "arc-inexact",
            Method::ArcFixedSigma => "arc-fixed-sigma",
        }
    }

    fn is_trust_region(&self) -> bool {
        matches!(self, Method::TrFull | Method::TrSubh | Method::TrInexact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcModeArg {
    Cauchy,
    Lanczos,
}

/// Problem selection. Defaults are listed in each help line.
#[derive(Debug, Clone, Default, Args)]
pub struct ProblemArgs {
    /// Problem to solve [default: quadratic]
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    /// LIBSVM file for --problem nls
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Scale every feature by its maximum absolute value at load time
    #[arg(long)]
    pub scale_features: bool,
    /// Map the larger label to 0 instead of 1
    #[arg(long)]
    pub flip_labels: bool,
    /// Rows of generated data for synth-nls [default: 1000]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Dimension for synth-nls and rosenbrock [default: 22 and 2]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Fraction of non-zero features for synth-nls [default: 0.6]
    #[arg(long)]
    pub density: Option<f64>,
    /// Seed of the generated data for synth-nls [default: 7]
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Saddle curvatures, comma separated [default: 1,-1]
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub curvatures: Option<Vec<f64>>,
    /// Saddle quartic confinement coefficient [default: 1]
    #[arg(long)]
    pub quartic: Option<f64>,
}

/// Optimizer settings shared by all experiment commands.
#[derive(Debug, Clone, Default, Args)]
pub struct TuningArgs {
    /// Gradient tolerance [default: 1e-5]
    #[arg(long)]
    pub eps_g: Option<f64>,
    /// Curvature tolerance [default: 1e-3]
    #[arg(long)]
    pub eps_h: Option<f64>,
    /// Acceptance threshold in (0, 1] [default: 0.1]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Radius / regularization update factor, > 1 [default: 2]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Initial trust-region radius [default: 1]
    #[arg(long)]
    pub delta0: Option<f64>,
    /// Initial cubic regularization [default: 10]
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Regularization for arc-fixed-sigma [default: the value of --sigma0]
    #[arg(long)]
    pub fixed_sigma: Option<f64>,
    /// Curvature quality target in (0, 1) [default: 0.9]
    #[arg(long)]
    pub nu: Option<f64>,
    /// Gradient sampling ratio for inexact methods [default: 0.1]
    #[arg(long)]
    pub grad_ratio: Option<f64>,
    /// Hessian sampling ratio for sub-sampled methods [default: 0.01]
    #[arg(long)]
    pub hess_ratio: Option<f64>,
    /// Cubic sub-problem solver [default: lanczos]
    #[arg(long, value_enum)]
    pub arc_mode: Option<ArcModeArg>,
    /// Drop the gradient from the model when it is below --eps-g
    #[arg(long)]
    pub zero_small_grad: bool,
    /// Outer iteration cap [default: 1000]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Propagation budget [default: none for run, 50 n w_f for compare and sigma-sweep]
    #[arg(long)]
    pub max_props: Option<u64>,
    /// Sum components on the thread pool (size from NEWTON_THREADS)
    #[arg(long)]
    pub parallel: bool,
    /// JSON file with any of the flags above (kebab-case keys); flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Method to run [default: tr-full]
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Random seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for trace.csv and summary.json [default: .]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fill the wall_ms column (makes traces non-reproducible)
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Methods, comma separated [default: tr-full,tr-subh,tr-inexact,arc-full,arc-subh,arc-inexact]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Seeds, comma separated [default: 42]
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Output CSV [default: compare.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Regularization values, comma separated [default: 1e-2,1e-1,1,1e1,1e2,1e3]
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<String>>,
    /// Seeds, comma separated [default: 42]
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Output CSV [default: sigma_sweep.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Bias added to the analytic gradient; a non-zero value must make the
    /// derivative checks fail
    #[arg(long, default_value_t = 0.0, hide = true)]
    pub perturb_gradient: f64,
    /// Seed for the random check instances
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

/// Keys accepted in a `--config` JSON file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<ProblemKind>,
    pub data: Option<PathBuf>,
    pub scale_features: Option<bool>,
    pub flip_labels: Option<bool>,
    pub samples: Option<usize>,
    pub dim: Option<usize>,
    pub density: Option<f64>,
    pub data_seed: Option<u64>,
    pub curvatures: Option<Vec<f64>>,
    pub quartic: Option<f64>,
    pub method: Option<Method>,
    pub eps_g: Option<f64>,
    pub eps_h: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub delta0: Option<f64>,
    pub sigma0: Option<f64>,
    pub fixed_sigma: Option<f64>,
    pub nu: Option<f64>,
    pub grad_ratio: Option<f64>,
    pub hess_ratio: Option<f64>,
    pub arc_mode: Option<ArcModeArg>,
    pub zero_small_grad: Option<bool>,
    pub max_iters: Option<usize>,
    pub max_props: Option<u64>,
    pub parallel: Option<bool>,
    pub seed: Option<u64>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Loaded objective with its starting point.
pub enum LoadedProblem {
    Nls(NlsProblem),
    Synthetic(SyntheticProblem),
}

impl LoadedProblem {
    pub fn objective(&self) -> &dyn Objective {
        match self {
            LoadedProblem::Nls(p) => p,
            LoadedProblem::Synthetic(p) => p,
        }
    }
}

/// Fully resolved settings of one problem and method family.
pub struct Experiment {
    pub problem_name: &'static str,
    pub problem: LoadedProblem,
    pub x0: Vec<f64>,
    pub tuning: Tuning,
}

/// Optimizer settings after merging flags, config file and defaults.
#[derive(Debug, Clone)]
pub struct Tuning {
    pub base: OptimizerConfig,
    pub grad_ratio: f64,
    pub hess_ratio: f64,
    pub parallel: bool,
}

impl Tuning {
    /// Configuration of `method` with sampling seeded by `seed`.
    pub fn config(&self, method: Method, seed: u64) -> OptimizerConfig {
        let sampling = match method {
            Method::TrFull | Method::ArcFull => SampleConfig::exact(seed),
            Method::TrSubh | Method::ArcSubh => {
                SampleConfig::sub_hessian(SampleSize::Ratio(self.hess_ratio), seed)
            }
            Method::TrInexact | Method::ArcInexact | Method::ArcFixedSigma => {
                SampleConfig::inexact(
                    SampleSize::Ratio(self.grad_ratio),
                    SampleSize::Ratio(self.hess_ratio),
                    seed,
                )
            }
        };
        let fixed_sigma = match method {
            Method::ArcFixedSigma => Some(self.base.fixed_sigma.unwrap_or(self.base.sigma0)),
            _ => None,
        };
        OptimizerConfig {
            sampling,
            fixed_sigma,
            ..self.base.clone()
        }
    }
}

fn resolve_tuning(t: &TuningArgs, file: &FileConfig) -> Result<Tuning> {
    let d = OptimizerConfig::default();
    let arc_mode = match t.arc_mode.or(file.arc_mode) {
        None | Some(ArcModeArg::Lanczos) => ArcMode::Lanczos,
        Some(ArcModeArg::Cauchy) => ArcMode::Cauchy,
    };
    let base = OptimizerConfig {
        eps_g: t.eps_g.or(file.eps_g).unwrap_or(d.eps_g),
        eps_h: t.eps_h.or(file.eps_h).unwrap_or(d.eps_h),
        eta: t.eta.or(file.eta).unwrap_or(d.eta),
        gamma: t.gamma.or(file.gamma).unwrap_or(d.gamma),
        delta0: t.delta0.or(file.delta0).unwrap_or(d.delta0),
        sigma0: t.sigma0.or(file.sigma0).unwrap_or(d.sigma0),
        nu: t.nu.or(file.nu).unwrap_or(d.nu),
        zero_small_grad: t.zero_small_grad || file.zero_small_grad.unwrap_or(false),
        arc_mode,
        fixed_sigma: t.fixed_sigma.or(file.fixed_sigma),
        max_iter: t.max_iters.or(file.max_iters).unwrap_or(d.max_iter),
        max_props: t.max_props.or(file.max_props),
        ..d
    };
    base.validate()?;
    let grad_ratio = t.grad_ratio.or(file.grad_ratio).unwrap_or(0.1);
    let hess_ratio = t.hess_ratio.or(file.hess_ratio).unwrap_or(0.01);
    for (name, r) in [("grad-ratio", grad_ratio), ("hess-ratio", hess_ratio)] {
        if !(r > 0.0 && r <= 1.0) {
            bail!("--{name} = {r} must lie in (0, 1]");
        }
    }
    Ok(Tuning {
        base,
        grad_ratio,
        hess_ratio,
        parallel: t.parallel || file.parallel.unwrap_or(false),
    })
}

fn alternating_start(dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| if j % 2 == 0 { -1.2 } else { 1.0 })
        .collect()
}

fn load_problem(
    p: &ProblemArgs,
    file: &FileConfig,
) -> Result<(&'static str, LoadedProblem, Vec<f64>)> {
    let kind = p.problem.or(file.problem).unwrap_or(ProblemKind::Quadratic);
    Ok(match kind {
        ProblemKind::Nls => {
            let path = p
                .data
                .clone()
                .or_else(|| file.data.clone())
                .context("--problem nls needs --data <file>")?;
            let options = ParseOptions {
                dim: None,
                flip_labels: p.flip_labels || file.flip_labels.unwrap_or(false),
                scale_features: p.scale_features || file.scale_features.unwrap_or(false),
            };
            let reader = BufReader::new(
                File::open(&path).with_context(|| format!("opening dataset {}", path.display()))?,
            );
            let data = parse_libsvm(reader, options)
                .with_context(|| format!("reading dataset {}", path.display()))?;
            let d = data.dim();
            (
                "nls",
                LoadedProblem::Nls(NlsProblem::new(data)),
                vec![0.0; d],
            )
        }
        ProblemKind::SynthNls => {
            let n = p.samples.or(file.samples).unwrap_or(1000);
            let d = p.dim.or(file.dim).unwrap_or(22);
            let density = p.density.or(file.density).unwrap_or(0.6);
            let seed = p.data_seed.or(file.data_seed).unwrap_or(7);
            let mut data = synthetic_dataset(n, d, density, seed)?;
            if p.scale_features || file.scale_features.unwrap_or(false) {
                data.scale_max_abs();
            }
            (
                "synth-nls",
                LoadedProblem::Nls(NlsProblem::new(data)),
                vec![0.0; d],
            )
        }
        ProblemKind::Quadratic => {
            let q = make_quadratic(DenseSymmetric::from_diagonal(&[1.0, 10.0]), vec![0.0; 2])?;
            ("quadratic", LoadedProblem::Synthetic(q), vec![1.0, 1.0])
        }
        ProblemKind::Rosenbrock => {
            let d = p.dim.or(file.dim).unwrap_or(2);
            (
                "rosenbrock",
                LoadedProblem::Synthetic(make_rosenbrock(d)?),
                alternating_start(d),
            )
        }
        ProblemKind::Saddle => {
            let c = p
                .curvatures
                .clone()
                .or_else(|| file.curvatures.clone())
                .unwrap_or_else(|| vec![1.0, -1.0]);
            let q = p.quartic.or(file.quartic).unwrap_or(1.0);
            let mut x0 = vec![0.0; c.len()];
            x0[0] = 1.0;
            (
                "saddle",
                LoadedProblem::Synthetic(make_confined_saddle(&c, q)?),
                x0,
            )
        }
    })
}

pub fn build_experiment(
    problem: &ProblemArgs,
    tuning: &TuningArgs,
) -> Result<(Experiment, FileConfig)> {
    let file = load_file_config(tuning.config.as_deref())?;
    let t = resolve_tuning(tuning, &file)?;
    let (problem_name, problem, x0) = load_problem(problem, &file)?;
    Ok((
        Experiment {
            problem_name,
            problem,
            x0,
            tuning: t,
        },
        file,
    ))
}

impl Experiment {
    pub fn num_components(&self) -> usize {
        self.problem.objective().num_components()
    }

    /// `50 n w_f`, the cost of fifty exact function passes.
    pub fn sweep_budget(&self) -> u64 {
        50 * self.num_components() as u64 * PropWeights::default().function
    }

    pub fn run(&self, method: Method, config: &OptimizerConfig) -> newton_core::Result<RunResult> {
        let reduction = if self.tuning.parallel {
            Reduction::Parallel
        } else {
            Reduction::Sequential
        };
        let oracle = Oracle::new(self.problem.objective()).with_reduction(reduction);
        if method.is_trust_region() {
            run_tr(&oracle, &self.x0, config)
        } else {
            run_arc(&oracle, &self.x0, config)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub problem: String,
    pub seed: u64,
    pub final_loss: f64,
    pub total_props: u64,
    pub iterations: usize,
    pub termination: String,
}

fn summarize(method: Method, problem: &str, seed: u64, r: &RunResult) -> Summary {
    Summary {
        method: method.name().to_string(),
        problem: problem.to_string(),
        seed,
        final_loss: r.final_loss,
        total_props: r.total_props(),
        iterations: r.iterations(),
        termination: r.termination.as_str().to_string(),
    }
}

fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Single run. Returns the termination reason for the exit code.
pub fn cmd_run(args: &RunArgs) -> Result<TerminationReason> {
    let (exp, file) = build_experiment(&args.problem, &args.tuning)?;
    let method = args.method.or(file.method).unwrap_or(Method::TrFull);
    let seed = args.seed.or(file.seed).unwrap_or(42);
    let config = exp.tuning.config(method, seed);
    let result = exp.run(method, &config)?;
    let summary = summarize(method, exp.problem_name, seed, &result);

    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    if !result.trace.is_empty() {
        write_trace_csv(
            &result.trace,
            create_writer(&out.join("trace.csv"))?,
            args.wall_time,
        )?;
    }
    let json = serde_json::to_string_pretty(&summary)?;
    let mut w = create_writer(&out.join("summary.json"))?;
    writeln!(w, "{json}")?;
    w.flush()?;
    println!("{json}");
    if let Some(msg) = &result.message {
        eprintln!("{}: {msg}", method.name());
    }
    Ok(result.termination)
}

const DEFAULT_METHODS: [Method; 6] = [
    Method::TrFull,
    Method::TrSubh,
    Method::TrInexact,
    Method::ArcFull,
    Method::ArcSubh,
    Method::ArcInexact,
];

/// Method grid. Failed cells are reported and skipped; returns `false` if
/// any cell failed.
pub fn cmd_compare(args: &CompareArgs) -> Result<bool> {
    let (exp, file) = build_experiment(&args.problem, &args.tuning)?;
    let methods = args
        .methods
        .clone()
        .unwrap_or_else(|| DEFAULT_METHODS.to_vec());
    let seeds = args
        .seeds
        .clone()
        .or_else(|| file.seed.map(|s| vec![s]))
        .unwrap_or_else(|| vec![42]);
    if methods.is_empty() || seeds.is_empty() {
        bail!("need at least one method and one seed");
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("compare.csv"));
    let mut w = create_writer(&out)?;
    writeln!(w, "method,seed,iter,props,loss")?;
    let mut all_ok = true;
    for &method in &methods {
        for &seed in &seeds {
            let mut config = exp.tuning.config(method, seed);
            config.max_props = config.max_props.or(Some(exp.sweep_budget()));
            match exp.run(method, &config) {
                Ok(r) => {
                    for rec in &r.trace {
                        writeln!(
                            w,
                            "{},{},{},{},{}",
                            method.name(),
                            seed,
                            rec.iteration,
                            rec.props,
                            format_float(rec.loss)
                        )?;
                    }
                    if r.termination == TerminationReason::Numerical {
                        all_ok = false;
                    }
                    println!(
                        "{}",
                        serde_json::to_string(&summarize(method, exp.problem_name, seed, &r))?
                    );
                }
                Err(e) => {
                    all_ok = false;
                    eprintln!("{} seed {seed}: {e}", method.name());
                }
            }
        }
    }
    w.flush()?;
    Ok(all_ok)
}

/// Adaptive and fixed regularization over the same values, final loss at
/// a common budget.
pub fn cmd_sigma_sweep(args: &SweepArgs) -> Result<bool> {
    let (exp, file) = build_experiment(&args.problem, &args.tuning)?;
    let raw = args.sigmas.clone().unwrap_or_else(|| {
        ["1e-2", "1e-1", "1", "1e1", "1e2", "1e3"]
            .map(String::from)
            .to_vec()
    });
    if raw.is_empty() || raw.iter().all(|s| s.trim().is_empty()) {
        bail!("the sigma list is empty");
    }
    let sigmas: Vec<(String, f64)> = raw
        .iter()
        .map(|s| {
            let t = s.trim();
            let v: f64 = t.parse().with_context(|| format!("invalid sigma `{t}`"))?;
            if !(v > 0.0 && v.is_finite()) {
                bail!("sigma {t} must be positive");
            }
            Ok((t.to_string(), v))
        })
        .collect::<Result<_>>()?;
    let seeds = args
        .seeds
        .clone()
        .or_else(|| file.seed.map(|s| vec![s]))
        .unwrap_or_else(|| vec![42]);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("sigma_sweep.csv"));
    let mut w = create_writer(&out)?;
    writeln!(
        w,
        "mode,sigma,seed,final_loss,total_props,iterations,termination"
    )?;
    let mut all_ok = true;
    for (label, sigma) in &sigmas {
        for &seed in &seeds {
            for (mode, method) in [
                ("adaptive", Method::ArcInexact),
                ("fixed", Method::ArcFixedSigma),
            ] {
                let mut config = exp.tuning.config(method, seed);
                config.max_props = config.max_props.or(Some(exp.sweep_budget()));
                match method {
                    Method::ArcFixedSigma => config.fixed_sigma = Some(*sigma),
                    _ => config.sigma0 = *sigma,
                }
                match exp.run(method, &config) {
                    Ok(r) => {
                        writeln!(
                            w,
                            "{mode},{label},{seed},{},{},{},{}",
                            format_float(r.final_loss),
                            r.total_props(),
                            r.iterations(),
                            r.termination.as_str()
                        )?;
                        if r.termination == TerminationReason::Numerical {
                            all_ok = false;
                        }
                    }
                    Err(e) => {
                        all_ok = false;
                        eprintln!("{mode} sigma {label} seed {seed}: {e}");
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(all_ok)
}

/// Prints one line per check; returns whether all passed.
pub fn cmd_check(args: &CheckArgs) -> bool {
    let outcomes = run_checks(&CheckOptions {
        gradient_perturbation: args.perturb_gradient,
        seed: args.seed,
    });
    let mut ok = true;
    for c in &outcomes {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {}: {}", c.name, c.detail);
        ok &= c.passed;
    }
    ok
}
