use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use potential_lab::cli::{execute, parse_config, ExecOptions};

/// Sphere and ball means, mean-value inequalities, growth order and boundedness audits.
#[derive(Debug, Parser)]
#[command(name = "potential-lab", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Report path; overrides the configured one. Without either, the report goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Omit the timestamp line so repeated runs are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = ExecOptions {
        output: args.output,
        no_timestamp: args.no_timestamp,
        verbose: args.verbose,
    };
    match execute(&cfg, &opts) {
        Ok(out) => {
            match &out.written_to {
                Some(p) if args.verbose => eprintln!("wrote {}", p.display()),
                Some(_) => {}
                None => print!("{}", out.rendered),
            }
            if args.verbose {
                eprintln!("{}", out.summary);
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
