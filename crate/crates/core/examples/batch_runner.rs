//! Drives the configuration-file runner programmatically, the same path the
//! `simplex-control run` command takes.

use simplex_control::experiment::{self, ExperimentConfig};

fn main() -> simplex_control::Result<()> {
    print!("{}", experiment::list());

    let mut cfg = ExperimentConfig::parse(
        "experiment = sir-noisy
         T = 150
         noise_prob = 0.3   # more frequent bursts
        ",
    )?;
    cfg.apply_override("seed=42")?;
    let dir = std::env::temp_dir().join("simplex-control-batch");
    cfg.set("out", &dir.to_string_lossy())?;

    let out = experiment::run_experiment(&cfg)?;
    for rec in &out.summary {
        println!("{:<16} {:>10.4} {:>10.4}", rec.policy, rec.total_cost, rec.regret_vs_best);
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
