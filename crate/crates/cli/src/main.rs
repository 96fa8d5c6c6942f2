//! `hypowalk <subcommand> --config PATH`: runs one experiment and writes its
//! CSV/JSON artifacts plus `manifest.json`.
//!
//! Exit status: 0 when every asserted check passed, 1 when a check failed or
//! the computation could not complete, 2 for usage and config errors (no
//! artifacts are written).

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::{json, Value};

use config::{config_hash, Subcommand};
use output::Artifacts;
use run::RunError;

#[derive(Parser)]
#[command(name = "hypowalk", version, about = "Reproducible runs of the hypoelliptic random walk experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    /// JSON config, or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `out`, then `$HYPOWALK_OUT/<subcommand>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Parse and validate the config, then exit without running.
    #[arg(long)]
    dry_run: bool,
}

const USAGE: u8 = 2;

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("hypowalk: {msg}");
    ExitCode::from(USAGE)
}

fn out_dir(cli: &Cli, cfg_out: Option<&str>) -> PathBuf {
    if let Some(dir) = &cli.out {
        return dir.clone();
    }
    if let Some(dir) = cfg_out {
        return PathBuf::from(dir);
    }
    let root = std::env::var_os("HYPOWALK_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("hypowalk-out"));
    root.join(cli.command.name())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(USAGE);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read {}: {e}", cli.config.display())),
    };
    let mut cfg = match config::parse(&text, cli.command) {
        Ok(c) => c,
        Err(e) => return usage(format!("{}: {e}", cli.config.display())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if cli.dry_run {
        println!("{}: valid `{}` config", cli.config.display(), cli.command);
        return ExitCode::SUCCESS;
    }
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return usage("--threads must be positive");
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        return usage(format!("thread pool: {e}"));
    }
    let dir = out_dir(&cli, cfg.out.as_deref());

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let (mut artifacts, mut report, checks, error) = match run::run(cli.command, &cfg) {
        Ok(o) => (o.artifacts, o.report, o.checks, None),
        Err(RunError::Config(e)) => return usage(e),
        Err(RunError::Failed(msg)) => (Artifacts::default(), Default::default(), Default::default(), Some(msg)),
    };
    let passed = error.is_none() && checks.passed();
    for c in &checks.0 {
        println!("{} {}: {:.6e} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    if let Some(msg) = &error {
        println!("FAIL {}: {msg}", cli.command);
    }
    report.insert("subcommand".into(), json!(cli.command));
    report.insert("passed".into(), json!(passed));
    report.insert("error".into(), json!(error));
    report.insert("checks".into(), serde_json::to_value(&checks.0).expect("checks serialize"));
    // spectrum writes its own report.json with the declared keys
    let report_name = if artifacts.names().iter().any(|n| n == "report.json") { "summary.json" } else { "report.json" };
    artifacts.json(report_name, &Value::Object(report));

    let embedded = cfg.embedded(cli.command);
    let mut names = artifacts.names();
    names.push("manifest.json".into());
    let manifest = json!({
        "tool": "hypowalk",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": hypowalk::VERSION,
        "subcommand": cli.command,
        "config_sha256": config_hash(&embedded),
        "config": embedded,
        "threads": threads,
        "artifacts": names,
        "passed": passed,
        "started_unix": started,
        "wall_seconds": clock.elapsed().as_secs_f64(),
    });
    artifacts.json("manifest.json", &manifest);
    if let Err(e) = artifacts.write(&dir) {
        eprintln!("hypowalk: writing {}: {e}", dir.display());
        return ExitCode::FAILURE;
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
