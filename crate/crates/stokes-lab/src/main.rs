use std::fs;
use std::process::ExitCode;

use clap::Parser;
use stokes_lab::cli::{self, Cli, RunConfig};

fn emit(cfg: Option<&RunConfig>, text: &str) -> Result<(), String> {
    match cfg.and_then(|c| c.output_path.as_ref()) {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let cfg = match cli::thread_cap().and_then(|cap| RunConfig::from_cli(args).map(|cfg| (cap, cfg))) {
        Ok((cap, cfg)) => {
            if let Some(n) = cap {
                // only fails if a pool already exists, which cannot happen this early
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            cfg
        }
        Err(e) => {
            eprintln!("stokes-lab: {e}");
            print!("{}", cli::render(&cli::error_report(None, &e)));
            return ExitCode::from(cli::exit_code(&e) as u8);
        }
    };
    let outcome = cli::run(&cfg);
    if let Some(err) = outcome.report.get("error") {
        eprintln!("stokes-lab: {}", err["message"].as_str().unwrap_or("error"));
    }
    if let Err(msg) = emit(Some(&cfg), &cli::render(&outcome.report)) {
        eprintln!("stokes-lab: {msg}");
        return ExitCode::from(cli::EXIT_CONFIG as u8);
    }
    ExitCode::from(outcome.code as u8)
}
