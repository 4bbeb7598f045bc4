use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qsync::experiments::{run_scenario, run_sweep, ExperimentError, ScenarioConfig, ScenarioId, SweepAxis};

/// Limit-cycle oscillator and synchronization scenarios.
#[derive(Debug, Parser)]
#[command(name = "qsync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Scenario id (see `qsync list`).
    scenario: String,
    /// TOML file with a `[<scenario>]` section, or a previous run's manifest.json.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Turn warnings (truncation, undecayed correlations) into errors.
    #[arg(long)]
    strict: bool,
    /// Parameter override, `key=value` with a TOML value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its tables and manifest.
    Run(Common),
    /// Sweep (delta, V) for a two-oscillator scenario.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Detuning axis lo:hi:n.
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<String>,
        /// Coupling axis lo:hi:n.
        #[arg(long = "V", allow_hyphen_values = true)]
        v: Option<String>,
    },
    /// List scenario ids and the figures they reproduce.
    List,
}

fn resolve(c: &Common) -> Result<ScenarioConfig, ExperimentError> {
    let id: ScenarioId = c.scenario.parse()?;
    let mut overrides = Vec::with_capacity(c.set.len() + 1);
    for s in &c.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| ExperimentError::InvalidConfig(format!("override {s:?} is not key=value")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(seed) = c.seed {
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    ScenarioConfig::load(id, c.config.as_deref(), &overrides)
}

fn execute(cmd: Command) -> Result<(), ExperimentError> {
    match cmd {
        Command::List => {
            for id in ScenarioId::ALL {
                println!("{:<14} {:<26} {}", id.as_str(), id.figures(), id.description());
            }
        }
        Command::Run(c) => {
            let cfg = resolve(&c)?;
            let m = run_scenario(&cfg, &c.out, c.strict)?;
            println!("{}: wrote {} files to {}", m.scenario, m.files.len() + 1, c.out.display());
        }
        Command::Sweep { common, delta, v } => {
            let cfg = resolve(&common)?;
            let delta = delta.map(|s| s.parse::<SweepAxis>()).transpose()?;
            let v = v.map(|s| s.parse::<SweepAxis>()).transpose()?;
            let (m, points) = run_sweep(&cfg, delta, v, &common.out, common.strict)?;
            let failed = points.iter().filter(|p| p.error.is_some()).count();
            println!(
                "{}: {} sweep points ({failed} failed), wrote {} files to {}",
                m.scenario,
                points.len(),
                m.files.len() + 1,
                common.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
