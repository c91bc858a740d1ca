#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polyflow::harness::{self, ScenarioConfig};
use polyflow::Result;

#[derive(Parser)]
#[command(
    name = "polyflow",
    version,
    about = "Run, refine and verify coupled evolution scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides the config's `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// March the scenario and write its trajectory, final state and summary.
    Run { config: PathBuf },
    /// Fixed-level refinement study.
    Converge {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: u32,
    },
    /// Evaluate the verification suites selected by the config.
    Verify { config: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool> {
    let say = |s: &str| {
        if !cli.quiet {
            println!("{s}");
        }
    };
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(config, cli.seed)?;
            let summary = harness::run(&cfg, cli.out.as_deref())?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            say(&format!(
                "{} finished in {:.3} s",
                summary.scenario, summary.runtime_s
            ));
            for c in &summary.checks {
                say(&format!(
                    "{} {} margin {:e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.margin
                ));
            }
            Ok(summary.checks.iter().all(|c| c.pass))
        }
        Command::Converge { config, levels } => {
            let cfg = load(config, cli.seed)?;
            let table = harness::converge(&cfg, *levels)?;
            if let Some(dir) = cli.out.as_deref().or(cfg.output.dir.as_deref()) {
                write(dir, "convergence.csv", &table.to_csv())?;
                let json = serde_json::to_string_pretty(&table).expect("tables serialize");
                write(dir, "convergence.json", &json)?;
            }
            say(table.to_csv().trim_end());
            match (table.exact, table.fitted_order) {
                (true, _) => say("order: exact"),
                (false, Some(o)) => say(&format!("order: {o:.3}")),
                (false, None) => say("order: undetermined"),
            }
            if table.no_convergence {
                eprintln!("warning: NoConvergence, an error failed to decrease under refinement");
            }
            Ok(true)
        }
        Command::Verify { config } => {
            let cfg = load(config, cli.seed)?;
            let report = harness::verify(&cfg)?;
            let json = report.to_json();
            match cli.out.as_deref().or(cfg.output.dir.as_deref()) {
                Some(dir) => write(dir, "verification.json", &json)?,
                None => say(&json),
            }
            if cli.out.is_some() || cfg.output.dir.is_some() {
                say(&format!(
                    "{} passed, {} failed",
                    report.passed, report.failed
                ));
            }
            Ok(report.all_pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
