//! Command-line front end for campaigns, presets and the oracle suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ga_thermo::experiment::{
    list_presets, oracle_suite, preset, run_experiment, run_preset, ExperimentConfig, OracleSuiteConfig,
    PresetOutcome, OUTPUT_DIR_ENV,
};
use ga_thermo::Error;

#[derive(Parser)]
#[command(name = "ga-thermo", version, about = "Effective temperature of a simple GA on spin glasses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the campaign described by a TOML config file.
    Run { config: PathBuf },
    /// Run a named preset.
    Preset {
        name: String,
        /// Parent directory of the preset's output tree.
        #[arg(long, env = OUTPUT_DIR_ENV, default_value = "out")]
        out: PathBuf,
        /// Reduced system sizes for quick runs.
        #[arg(long)]
        desk: bool,
    },
    /// Print the preset names.
    ListPresets,
    /// Cross-check the samplers and ground-state oracles on small instances.
    OracleCheck,
}

/// Exit codes by failure category.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::DegenerateDisorder | Error::InvalidSize(_) => 2,
        Error::Io(_) => 3,
        Error::Convergence { .. }
        | Error::Consistency { .. }
        | Error::Unbracketable { .. }
        | Error::OracleInconsistency { .. } => 4,
        _ => 5,
    }
}

const ORACLE_FAILURE: u8 = 6;

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = cfg.resolved_output_dir();
            let summary = run_experiment(&cfg, &dir)?;
            let ok = summary.successful().count();
            println!("{}: {ok}/{} replicas -> {}", cfg.name, cfg.replicas, dir.display());
            Ok(0)
        }
        Command::Preset { name, out, desk } => {
            let p = preset(&name, desk)?;
            match run_preset(&p, &out)? {
                PresetOutcome::Campaigns(runs) => {
                    for (variant, s) in runs {
                        let ok = s.successful().count();
                        let label = if variant.is_empty() { p.name.to_string() } else { format!("{}/{variant}", p.name) };
                        println!("{label}: {ok}/{} replicas", s.config.replicas);
                    }
                }
                PresetOutcome::McmcCurve(rows) => println!("{}: {} temperatures", p.name, rows.len()),
                PresetOutcome::OracleSuite(checks) => {
                    let failed = checks.iter().filter(|c| !c.passed).count();
                    println!("{}: {failed} of {} checks failed", p.name, checks.len());
                    if failed > 0 {
                        return Ok(ORACLE_FAILURE);
                    }
                }
            }
            println!("output in {}", out.join(p.name).display());
            Ok(0)
        }
        Command::ListPresets => {
            for name in list_presets() {
                let p = preset(name, false)?;
                println!("{name:<14}{}", p.description);
            }
            Ok(0)
        }
        Command::OracleCheck => {
            let checks = oracle_suite(&OracleSuiteConfig::default())?;
            let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
            for c in &failed {
                println!(
                    "FAIL {:?} n={} instance={} T={} exact={} estimate={} stderr={}",
                    c.model, c.n, c.instance, c.temperature, c.exact, c.estimate, c.std_error
                );
            }
            println!("{} of {} checks passed", checks.len() - failed.len(), checks.len());
            Ok(if failed.is_empty() { 0 } else { ORACLE_FAILURE })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
