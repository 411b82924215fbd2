use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alspg_bench::config::{load_with_overrides, SolverKind};
use alspg_bench::playground::PlaygroundModel;
use alspg_bench::record::{run_config, write_record};
use alspg_bench::suite::{run_suite, write_suite_outputs};
use alspg_bench::{server, BenchError, ExitStatus};
use clap::{Parser, Subcommand};

/// Runs alspg experiments from TOML configs and serves the IK playground.
///
/// Exit codes: 0 success, 1 runtime failure, 2 invalid config, 3 solver did
/// not converge (the record is still written).
#[derive(Debug, Parser)]
#[command(name = "alspg-bench", version)]
struct Cli {
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for records and summaries.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Override the solver (alspg, alspg_noproj, ilqr, spg).
    #[arg(long, global = true, value_parser = parse_solver)]
    solver: Option<SolverKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem config and write `<out>/<name>-<solver>.jsonl`.
    Run { config: PathBuf },
    /// Run every config of a suite; writes records.jsonl, summary.json and
    /// summary.txt into `<out>`.
    Suite {
        path: PathBuf,
        /// Run members one after another regardless of the suite setting.
        #[arg(long)]
        sequential: bool,
    },
    /// Serve the playground websocket (`/ws`) and `/health`.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Arm model file (TOML).
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    SolverKind::parse(s).ok_or_else(|| format!("unknown solver `{s}` (expected alspg, alspg_noproj, ilqr or spg)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match execute(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_status()
        }
    };
    ExitCode::from(status.code() as u8)
}

fn execute(cli: &Cli) -> Result<ExitStatus, BenchError> {
    match &cli.command {
        Command::Run { config } => run(cli, config),
        Command::Suite { path, sequential } => {
            let result = run_suite(path, cli.seed, cli.solver, sequential.then_some(false))?;
            write_suite_outputs(&cli.out, &result)?;
            print!("{}", result.summary.to_text());
            println!("wrote {}", cli.out.join("records.jsonl").display());
            Ok(result.summary.exit_status())
        }
        Command::Serve { port, model, host } => {
            let model = PlaygroundModel::load(model)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| BenchError::io("tokio runtime", e))?;
            runtime
                .block_on(server::serve(SocketAddr::new(*host, *port), model, |addr| {
                    println!("playground listening on ws://{addr}/ws");
                }))
                .map_err(|e| BenchError::io("serve", e))?;
            Ok(ExitStatus::Ok)
        }
    }
}

fn run(cli: &Cli, path: &Path) -> Result<ExitStatus, BenchError> {
    let config = load_with_overrides(path, cli.seed, cli.solver)?;
    let record = run_config(&config)?;
    let written = write_record(&cli.out, &record)?;
    println!(
        "{}: {} after {} iterations, n_f {}, n_jac {}, objective {}, residual {}",
        record.name,
        record.termination,
        record.iterations,
        record.counters.n_f,
        record.counters.n_jac,
        record.final_objective.map_or("-".into(), |v| format!("{v:.6e}")),
        record.final_residual.map_or("-".into(), |v| format!("{v:.2e}")),
    );
    for (k, v) in &record.metrics {
        println!("  {k}: {}", v.map_or("-".into(), |v| format!("{v:.6}")));
    }
    for note in &record.notes {
        println!("  note: {note}");
    }
    println!("wrote {}", written.display());
    Ok(record.exit_status())
}
