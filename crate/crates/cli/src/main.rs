use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use sparse_esn::harness::{self, RunRecord};
use sparse_esn::seed::{Purpose, SeedTree, SHARED_ARM};
use sparse_esn::tasks::{synth_stimulus_set, DEFAULT_CHANNELS};
use sparse_esn::{Error, StimulusSet64};

#[derive(Parser)]
#[command(name = "sparse-esn", version, about = "Sparse-threshold echo-state readout experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config, with optional overrides.
    Run {
        /// Config file; omitted means all defaults.
        config: Option<PathBuf>,
        /// Override a config key, e.g. `--set n_episodes=5000`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Print the resolved config and exit without running.
        #[arg(long)]
        dry_run: bool,
    },
    /// Compare run records: mean ± std per algorithm across replicas.
    Report {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Write comparison.csv and series.csv into this directory.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Emit the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic stimulus table (lognormal rates, unit channel means).
    GenData {
        #[arg(long, default_value_t = 110)]
        n_stimuli: usize,
        #[arg(long, default_value_t = DEFAULT_CHANNELS)]
        n_inputs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Log-space std of the rates.
        #[arg(long, default_value_t = 1.0)]
        log_sigma: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Summarize a checkpoint.
    Inspect { checkpoint: PathBuf },
}

fn error_record(e: &Error) -> Value {
    let mut rec = json!({ "error": e.kind(), "message": e.to_string() });
    let extra = match e {
        Error::Config { key, .. } => json!({ "key": key }),
        Error::Ingest { path, row, column, .. } => json!({ "path": path, "row": row, "column": column }),
        Error::Training { episode, .. } => json!({ "episode": episode }),
        Error::Io { path, .. } => json!({ "path": path }),
        _ => json!({}),
    };
    if let (Some(r), Value::Object(x)) = (rec.as_object_mut(), extra) {
        r.extend(x);
    }
    rec
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            overrides,
            dry_run,
        } => {
            let cfg = harness::parse_config(config.as_deref(), &overrides)?;
            if dry_run {
                println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
                return Ok(());
            }
            let (record, paths) = harness::run_experiment(&cfg)?;
            print!("{}", harness::report(std::slice::from_ref(&record)).table());
            println!("record: {}", paths.record.display());
            println!("metrics: {}", paths.metrics.display());
        }
        Command::Report { records, csv, json } => {
            let loaded = records
                .iter()
                .map(|p| RunRecord::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let rep = harness::report(&loaded);
            if json {
                println!("{}", serde_json::to_string_pretty(&rep).expect("report serializes"));
            } else {
                print!("{}", rep.table());
            }
            if let Some(dir) = csv {
                rep.write_csv(&dir)?;
            }
        }
        Command::GenData {
            n_stimuli,
            n_inputs,
            seed,
            log_sigma,
            out,
        } => {
            // Same stream the harness uses for its surrogate table.
            let mut rng = SeedTree::new(seed).rng(0, SHARED_ARM, Purpose::Stimuli);
            let set: StimulusSet64 = synth_stimulus_set(n_stimuli, n_inputs, log_sigma, &mut rng)?;
            set.write_delimited(&out)?;
            println!("{}", out.display());
        }
        Command::Inspect { checkpoint } => {
            let summary = harness::inspect_checkpoint(&checkpoint)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::FAILURE
        }
    }
}
