use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use groundsense::harness::{self, emit::Format, Scenario};
use groundsense::Error;

#[derive(Parser)]
#[command(
    name = "groundsense",
    version,
    about = "Simulated FMCW ground-moisture sensing and avoidance"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file or a built-in preset and write its artifacts.
    Run {
        /// Scenario TOML; optional when --preset is given.
        scenario: Option<PathBuf>,
        /// Override the scenario's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated artifact kinds: csv, plots. Empty writes only the manifest.
        #[arg(long, default_value = "csv")]
        emit: String,
        /// Built-in scenario name; see list-presets.
        #[arg(long, conflicts_with = "scenario")]
        preset: Option<String>,
    },
    /// Print built-in scenario names.
    ListPresets,
    /// Parse and validate a scenario file without running it.
    Validate { scenario: PathBuf },
}

/// 1 for bad input, 2 for anything that fails while running.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::Validation { .. }
        | Error::Configuration(_)
        | Error::Parameter { .. } => 1,
        _ => 2,
    }
}

fn load(scenario: Option<PathBuf>, preset: Option<String>) -> Result<Scenario, Error> {
    match (scenario, preset) {
        (_, Some(name)) => harness::preset(&name),
        (Some(path), None) => harness::load_scenario(&path),
        (None, None) => Err(Error::Validation {
            field: "scenario".into(),
            constraint: "give a scenario file or --preset".into(),
        }),
    }
}

fn parse_formats(list: &str) -> Result<Vec<Format>, Error> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::ListPresets => {
            for name in harness::preset_names() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Cmd::Validate { scenario } => match harness::load_scenario(&scenario) {
            Ok(s) => {
                println!("{}: ok ({} samples)", s.name, s.sample_count());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Cmd::Run {
            scenario,
            seed,
            out,
            emit,
            preset,
        } => {
            let prepared = load(scenario, preset).and_then(|mut s| {
                if let Some(seed) = seed {
                    s.rng_seed = seed;
                }
                Ok((s, parse_formats(&emit)?))
            });
            let (scenario, formats) = match prepared {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(exit_code(&e));
                }
            };
            let result = harness::run(&scenario)
                .and_then(|log| harness::emit(&log, &out, &formats).map(|m| (log, m)));
            match result {
                Ok((log, manifest)) => {
                    let s = &log.safety;
                    println!(
                        "{}: {} samples, {} replans, goal reached: {}, max water under footprint {:.3}",
                        log.scenario,
                        log.records.len(),
                        log.replans,
                        log.goal_reached,
                        s.max_water_under_footprint
                    );
                    println!(
                        "wrote {} files + manifest to {}",
                        manifest.files.len(),
                        out.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
