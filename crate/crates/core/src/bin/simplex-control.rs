use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use simplex_control::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "simplex-control", version, about = "Online control of population dynamics on the simplex")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Override a configuration key (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the model, keys and defaults of an experiment.
    Describe { name: String },
    /// List the available experiments.
    List,
}

fn run(config: PathBuf, set: Vec<String>, out: Option<PathBuf>, seed: Option<u64>) -> simplex_control::Result<()> {
    let mut cfg = ExperimentConfig::from_file(&config)?;
    for s in &set {
        cfg.apply_override(s)?;
    }
    if let Some(out) = out {
        cfg.set("out", &out.to_string_lossy())?;
    }
    if let Some(seed) = seed {
        cfg.set("seed", &seed.to_string())?;
    }
    let output = experiment::run_experiment(&cfg)?;
    for rec in &output.summary {
        println!(
            "{:<28} total {:>14.6}  regret vs best {:>12.6}",
            rec.policy, rec.total_cost, rec.regret_vs_best
        );
    }
    for note in &output.notes {
        println!("{note}");
    }
    for f in &output.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, set, out, seed } => run(config, set, out, seed),
        Command::Describe { name } => experiment::describe(&name).map(|text| print!("{text}")),
        Command::List => {
            print!("{}", experiment::list());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
