use clap::Parser;
use mfs_cli::config::{parse_config, Cli};
use mfs_cli::report::{render, run};
use std::io::Write;
use std::process::ExitCode;

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("mfs: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match parse_config(&cli.command) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return usage_error(&e.to_string());
        }
    }
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("mfs: {e}");
            return ExitCode::from(1);
        }
    };
    let bytes = match render(&report, cfg.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("mfs: {e}");
            return ExitCode::from(1);
        }
    };
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().lock().write_all(&bytes).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("mfs: {e}");
        return ExitCode::from(1);
    }
    if report.has_indeterminate() {
        eprintln!("mfs: some pressure values could not be bounded above");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
