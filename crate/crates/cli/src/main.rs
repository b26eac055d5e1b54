mod args;
mod bench;
mod error;
mod files;
mod gen;
mod slope;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};
use files::Sink;

fn run(cli: &Cli) -> CliResult<()> {
    let sink = Sink::new(cli.output.as_deref());
    match &cli.command {
        Command::Verify(a) => {
            let report = verify::run_verify(cli.seed, a.max_len, a.inject_fault);
            sink.write_with(|w| {
                if cli.json {
                    writeln!(w, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))
                } else {
                    w.write_all(verify::render_text(&report).as_bytes())
                }
            })?;
            if report.passed {
                Ok(())
            } else {
                Err(CliError::Verification(report.failed_suites().join(", ")))
            }
        }
        Command::Bench(a) => bench::cmd_bench(a, cli.seed, &sink, cli.json),
        Command::Slope(a) => slope::cmd_slope(a, &sink, cli.json),
        Command::Gen(a) => gen::cmd_gen(a, cli.seed, &sink, cli.json),
        Command::Filters(a) => gen::cmd_filters(a, &sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
