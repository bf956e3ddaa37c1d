use std::process::ExitCode;

use clap::Parser;

use newton_cli::{cmd_check, cmd_compare, cmd_run, cmd_sigma_sweep, Cli, Command};
use newton_core::TerminationReason;

fn configure_threads() {
    let Ok(value) = std::env::var("NEWTON_THREADS") else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                eprintln!("warning: could not size the thread pool: {e}");
            }
        }
        _ => eprintln!("warning: ignoring NEWTON_THREADS={value}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|reason| reason != TerminationReason::Numerical),
        Command::Compare(args) => cmd_compare(args),
        Command::SigmaSweep(args) => cmd_sigma_sweep(args),
        Command::Check(args) => Ok(cmd_check(args)),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
