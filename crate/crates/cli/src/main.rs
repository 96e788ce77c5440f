mod commands;
mod opts;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use opts::{Cli, Command, Format};
use report::{envelope, render, sha256_hex, Failure, Outcome};

fn configure_threads() {
    if let Some(n) = std::env::var("MDPCONC_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run(command: &Command) -> (Option<String>, Result<Outcome, Failure>) {
    let opts = command.opts();
    let (bytes, raw) = match commands::read_raw(opts) {
        Ok(x) => x,
        Err(f) => return (None, Err(f)),
    };
    let sha = Some(sha256_hex(&bytes));
    if let Command::Validate(_) = command {
        return (sha, commands::validate(&raw));
    }
    let model = match commands::build_model(&raw) {
        Ok(m) => m,
        Err(f) => return (sha, Err(f)),
    };
    let outcome = match command {
        Command::Validate(_) => unreachable!("handled above"),
        Command::Classify(o) => commands::classify(o, &model),
        Command::Solve(o) => commands::solve(o, &model),
        Command::Stats(o) => commands::stats(o, &model),
        Command::Bounds(o) => commands::bounds(o, &model),
        Command::Simulate(o) => commands::simulate_cmd(o, &model),
        Command::Verify(o) => commands::verify(o, &model),
    };
    (sha, outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let command = &cli.command;
    let opts = command.opts();
    let (sha, outcome) = run(command);
    let (report, exit) = envelope(command.name(), opts, sha.as_deref(), outcome.as_ref());
    let text = match (&outcome, opts.format) {
        (Ok(Outcome { csv: Some(csv), .. }), Format::Csv) => csv.clone(),
        _ => render(&report),
    };
    if let Err(f) = &outcome {
        eprintln!("mdpconc {}: {}: {}", command.name(), f.code, f.message);
    }
    let written = match &opts.out {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("mdpconc: cannot write report: {e}");
        return ExitCode::from(report::EXIT_INPUT as u8);
    }
    ExitCode::from(exit as u8)
}
