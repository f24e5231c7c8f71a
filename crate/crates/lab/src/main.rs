use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fermisig_lab::{compare, config, init_threads, list_suites, run, LabError};

#[derive(Parser)]
#[command(name = "fermisig", version, about = "Run fermionic signature operator experiments")]
#[command(after_help = "Set FERMISIG_THREADS to fix the worker-thread count.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of a scenario file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the scenario.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Compare the tables of a run against a baseline run.
    Compare {
        run: PathBuf,
        baseline: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        rtol: f64,
    },
    /// Print the available suites.
    ListSuites,
    /// Parse and validate a scenario without computing anything.
    Validate { config: PathBuf },
}

/// Exit codes: 0 success, 1 failed checks or baseline differences,
/// 2 errors (bad config, suite failure, manifest mismatch).
fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        return fail(&e);
    }
    match cli.command {
        Command::Run { config, output_dir } => {
            let loaded = match config::load(&config) {
                Ok(l) => l,
                Err(e) => return fail(&e),
            };
            match run(&loaded, output_dir.as_deref()) {
                Ok(summary) => {
                    for s in &summary.suites {
                        let state = if s.passed { "pass" } else { "FAIL" };
                        println!("{state} {:<14} {:>8.2}s {}", s.suite, s.seconds, s.failed_checks.join(","));
                    }
                    println!("results in {}", summary.output_dir.display());
                    if summary.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Compare { run, baseline, rtol } => match compare(&run, &baseline, rtol) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                if report.is_clean() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(&e),
        },
        Command::ListSuites => {
            for (name, what) in list_suites() {
                println!("{name:<14} {what}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match config::load(&config).and_then(|l| l.config.validate()) {
            Ok(()) => {
                println!("ok");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}

fn fail(e: &LabError) -> ExitCode {
    eprintln!("{}", e.report());
    ExitCode::from(2)
}
