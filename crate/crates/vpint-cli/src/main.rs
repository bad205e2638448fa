//! Command line entry point.
//!
//! Usage: `vpint <config-file> [--out DIR]`
//!
//! Exit codes: 0 success, 2 configuration/schema violation, 3 numeric
//! failure, 4 i/o error. `VPINT_THREADS` overrides the worker thread count.

use std::path::PathBuf;
use std::process::ExitCode;

mod config;
mod runner;

fn usage() -> ! {
    eprintln!("usage: vpint <config-file> [--out DIR]");
    std::process::exit(2);
}

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir: Option<PathBuf> = None;
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--out" => match args.next() {
                Some(dir) => out_dir = Some(PathBuf::from(dir)),
                None => usage(),
            },
            "--help" | "-h" => usage(),
            other if config_path.is_none() => config_path = Some(PathBuf::from(other)),
            _ => usage(),
        }
    }
    let Some(config_path) = config_path else {
        usage();
    };

    if let Ok(threads) = std::env::var("VPINT_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("VPINT_THREADS: expected a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }

    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(4);
        }
    };

    let cfg = match config::parse(&text) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let out_dir = out_dir.unwrap_or_else(|| {
        let stem = config_path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "run".to_string());
        PathBuf::from(format!("runs/{stem}"))
    });

    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }

    match runner::run(&cfg, &out_dir) {
        Ok(()) => {
            println!("ok: output in {}", out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
