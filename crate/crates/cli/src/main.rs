use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crtfrag_cli::config::ExperimentConfig;
use crtfrag_cli::suites::{run_suite, SUITES};

/// Seeded experiment suites with byte-stable CSV/JSON reports.
#[derive(Parser, Debug)]
#[command(name = "crtfrag", version, about)]
struct Cli {
    /// Suite to run: mechanism-check, fragmentation, dislocation-ske,
    /// dislocation-nod or special-markov
    suite: String,
    /// Path to the JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to CRTFRAG_THREADS, then all cores)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !SUITES.contains(&cli.suite.as_str()) {
        eprintln!(
            "unknown suite `{}`; expected one of: {}",
            cli.suite,
            SUITES.join(", ")
        );
        return ExitCode::from(2);
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", cli.config.display());
            return ExitCode::from(3);
        }
    };
    let mut cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.display().to_string();
    }
    let threads = cli.threads.or_else(|| {
        std::env::var("CRTFRAG_THREADS").ok().and_then(|s| s.parse().ok())
    });
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("thread pool: {e}");
        }
    }

    let (report, extra) = match run_suite(&cli.suite, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = PathBuf::from(&cfg.out);
    if let Err(e) = report.write_to(&out_dir, &extra) {
        eprintln!("cannot write reports to {}: {e}", out_dir.display());
        return ExitCode::from(3);
    }
    for (name, rows) in &report.tables {
        for row in rows {
            let status = if row.pass { "ok  " } else { "FAIL" };
            let z = row
                .z
                .map(|z| format!(" z={z:+.2}"))
                .unwrap_or_default();
            println!("[{status}] {name}: {}{z} {}", row.estimate, row.note);
        }
    }
    if report.pass() {
        println!("suite {}: PASS", report.suite);
        ExitCode::SUCCESS
    } else {
        println!("suite {}: FAIL", report.suite);
        ExitCode::from(1)
    }
}
