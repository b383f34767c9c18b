use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracmove_cli::{cmd_convergence, cmd_solve, cmd_verify, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "fracmove", version, about = "Time-fractional heat equation on a moving domain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key (repeatable); wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (FRACMOVE_OUT takes precedence).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the sampled checks.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write coefficients.csv, field.csv, report.csv, windows.csv.
    Solve(Common),
    /// Run verification suites and write verify.csv.
    Verify {
        #[command(flatten)]
        common: Common,
        /// appendix | q | energy | weak | all (overrides the `suite` key).
        #[arg(long)]
        suite: Option<String>,
    },
    /// Run the N:m ladder and write convergence.csv.
    Convergence(Common),
}

fn load(common: &Common, extra: &[String]) -> Result<(RunConfig, PathBuf), CliError> {
    let mut overrides = common.set.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    overrides.extend_from_slice(extra);
    let cfg = RunConfig::load(common.config.as_deref(), &overrides)?;
    let out = std::env::var_os("FRACMOVE_OUT")
        .map(PathBuf::from)
        .or_else(|| common.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(common) => {
            let (cfg, out) = load(&common, &[])?;
            let s = cmd_solve(&cfg, &out)?;
            eprintln!("residual {:.3e} (derivative {:.3e}); wrote {}", s.residual.0, s.residual.1, out.display());
        }
        Command::Verify { common, suite } => {
            let extra: Vec<String> = suite.map(|s| format!("suite={s}")).into_iter().collect();
            let (cfg, out) = load(&common, &extra)?;
            cmd_verify(&cfg, &out)?;
            eprintln!("all asserted checks pass; wrote {}", out.join("verify.csv").display());
        }
        Command::Convergence(common) => {
            let (cfg, out) = load(&common, &[])?;
            for r in cmd_convergence(&cfg, &out)? {
                let order = r.order.map_or(String::from("-"), |o| format!("{o:.3}"));
                eprintln!("N={:<5} m={:<3} error={:.3e} order={order}", r.n, r.m, r.error);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracmove: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
