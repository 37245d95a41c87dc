use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lie_observer_sim::{check, output_root, rate, run, SimError};

/// Simulate invariant systems with gradient and gradient-like observers.
#[derive(Parser)]
#[command(name = "lieobs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        scenario: PathBuf,
        /// Output root (default: $LIEOBS_OUT_DIR, else ./lieobs-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every `*.json` scenario in a directory concurrently.
    Batch {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant suites.
    Check,
    /// Fit an exponential decay rate to the `cost` column of a trajectory CSV.
    Rate {
        csv: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        tail: f64,
    },
}

fn report(path: &Path, r: &Result<run::RunSummary, SimError>) -> i32 {
    match r {
        Ok(s) => {
            let rate = s.rate.map_or_else(|| "n/a".to_owned(), |r| format!("{:.6}", r.rate));
            println!("ok       {}  final_cost={:.3e}  rate={rate}  -> {}", s.name, s.final_cost, s.dir.display());
            0
        }
        Err(e) => {
            eprintln!("failed   {}: {e}", path.display());
            e.exit_code()
        }
    }
}

fn batch(dir: &Path, out: &Path) -> Result<i32, SimError> {
    let entries = std::fs::read_dir(dir).map_err(|e| SimError::Io {
        path: dir.to_owned(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(SimError::Validation(format!("{}: no *.json scenarios", dir.display())));
    }
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = files.iter().map(|f| s.spawn(move || run::run_file(f, out))).collect();
        handles.into_iter().map(|h| h.join().expect("run panicked")).collect()
    });
    Ok(files.iter().zip(&results).map(|(f, r)| report(f, r)).max().unwrap_or(0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario, out } => {
            let r = run::run_file(&scenario, &output_root(out));
            report(&scenario, &r)
        }
        Command::Batch { dir, out } => match batch(&dir, &output_root(out)) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Check => {
            let results = check::run_checks();
            for r in &results {
                println!("{:<4} {:<22} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            i32::from(results.iter().any(|r| !r.passed))
        }
        Command::Rate { csv, tail } => {
            let fitted = run::read_cost_series(&csv).and_then(|(t, c)| {
                rate::fit_exponential_rate(&t, &c, tail).map_err(|e| SimError::Validation(e.to_string()))
            });
            match fitted {
                Ok(r) => {
                    println!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
