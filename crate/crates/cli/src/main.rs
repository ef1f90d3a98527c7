use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use oscla::{report_path, run, Command, RunConfig, RunContext};

/// Model fibration checks, solvers and the acceptance suite.
#[derive(Parser)]
#[command(name = "oscla", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `out` from the config, else `oscla-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized probes (default: `seed` from the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = RunConfig::load(&args.config)
        .and_then(|cfg| RunContext::resolve(&cfg, args.out, args.seed).map(|ctx| (cfg, ctx)))
        .and_then(|(cfg, ctx)| run(args.command, &cfg, &ctx).map(|r| (r, ctx)));
    match result {
        Ok((report, ctx)) => {
            for c in &report.checks {
                println!("{}", c.line());
            }
            println!("report: {}", report_path(&ctx.out).display());
            ExitCode::from(if report.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
