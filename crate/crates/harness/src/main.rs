use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shapeservo::Result;
use shapeservo_harness::studies::{run_preset, Preset};
use shapeservo_harness::{run_scenario, write_summary, write_trace, Scenario};

/// Shape servoing simulations and experiment studies.
#[derive(Debug, Parser)]
#[command(name = "shapeservo", version)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "SHAPESERVO_OUT", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its trace and summary.
    Run {
        /// Scenario JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a named study.
    Study {
        #[arg(long, value_parser = parse_preset)]
        preset: Preset,
        /// Scenario JSON replacing the built-in one (noise, broyden, unreachable).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Forward-simulate a scenario's target and save the contour as CSV.
    ExportTarget {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<Scenario> {
    let mut scenario = Scenario::load(path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn execute(cli: Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Run { config, seed } => {
            let scenario = load(&config, seed)?;
            let outcome = run_scenario(&scenario)?;
            let trace = write_trace(&cli.out, &scenario, &outcome.trace)?;
            write_summary(&cli.out, std::slice::from_ref(&outcome.summary))?;
            let s = &outcome.summary;
            println!(
                "{}: {} after {} iterations, final ASE {:.4} ({})",
                s.scenario,
                if s.converged { "converged" } else { "not converged" },
                s.iterations,
                s.final_ase,
                trace.display()
            );
        }
        Command::Study { preset, config, seed } => {
            let base = config.map(|c| load(&c, Some(seed))).transpose()?;
            let report = run_preset(preset, seed, base.as_ref(), &cli.out)?;
            println!("{}: {} rows written to {}", report.study, report.rows.len(), cli.out.display());
        }
        Command::ExportTarget { config } => {
            let scenario = load(&config, None)?;
            let path = cli.out.join(format!("target_{}.csv", scenario.name));
            scenario.target_contour()?.save(&path)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
