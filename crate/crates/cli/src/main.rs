use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qpool_cli::{emit_report, load_config, output_path, run_scenario, Format, ReproducePaper, Scenario, ScenarioConfig};

/// Pooling states of knowledge: scenario runner and audit.
#[derive(Parser)]
#[command(name = "qpool", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config.
    Run {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the two-strategy estimation example and print the audit.
    ReproducePaper {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config against its schema without running it.
    Validate { config: PathBuf },
}

fn write(bytes: &[u8], path: Option<PathBuf>) -> std::io::Result<()> {
    match path {
        None => std::io::stdout().write_all(bytes),
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(&p, bytes)?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
    }
}

fn execute(cfg: &ScenarioConfig, format: Format, out: Option<&Path>) -> ExitCode {
    let report = run_scenario(cfg);
    if let Some(e) = &report.error {
        eprintln!("numerical failure: {}: {}", e.name, e.message);
    }
    let path = output_path(out, &report.kind, format);
    if let Err(e) = write(&emit_report(&report, format), path) {
        eprintln!("cannot write report: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(report.exit_code() as u8)
}

fn config_failure(path: &Path, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error in {}: {e}", path.display());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config, format, seed, out } => match load_config(&config) {
            Ok(mut cfg) => {
                if seed.is_some() {
                    cfg.seed = seed;
                }
                execute(&cfg, format, out.as_deref())
            }
            Err(e) => config_failure(&config, e),
        },
        Command::ReproducePaper { format, out } => {
            execute(&ScenarioConfig::new(Scenario::ReproducePaper(ReproducePaper {})), format, out.as_deref())
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.scenario.kind());
                ExitCode::SUCCESS
            }
            Err(e) => config_failure(&config, e),
        },
    }
}
