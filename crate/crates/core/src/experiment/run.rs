//! Seeded execution of configured experiments and file emission.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use super::catalog::ExperimentKind;
use super::config::ExperimentConfig;
use crate::applications::baselines::{BestResponse, ConstantPolicy};
use crate::applications::hospital::{self, HospitalCostParams, ReferenceTrajectory};
use crate::applications::lower_bound::{self, HarnessReport, ScalarLinear};
use crate::applications::replicator::{self, RpsParams};
use crate::applications::sir::{self, SirNoise, SirParams};
use crate::controller::{gpc_simplex_run, GpcConfig, GpcRun, GpcSimplex, GradientMethod, OptimizerKind};
use crate::dynamics::{fmt_f64, simulate, Cost, Policy, System, Trajectory};
use crate::error::{Error, Result};
use crate::mixing::{mixing_profile, MixingProfile};
use crate::optimizer::StepSize;
use crate::seed;
use crate::simplex::{validate_vector, ControlSet, Dist, StochasticMatrix};

/// One line of `summary.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub experiment: String,
    pub policy: String,
    pub total_cost: f64,
    pub regret_vs_best: f64,
    pub seed: u64,
}

/// A policy's rollout.
#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub policy: String,
    pub trajectory: Trajectory,
}

/// Everything an experiment produced.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub experiment: String,
    pub seed: u64,
    pub runs: Vec<PolicyRun>,
    pub gpc: Option<GpcRun>,
    pub harness: Option<HarnessReport>,
    pub mixing: Option<MixingProfile>,
    pub summary: Vec<SummaryRecord>,
    pub files: Vec<PathBuf>,
    /// Short human-readable findings.
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn trajectory(&self, policy: &str) -> Option<&Trajectory> {
        self.runs.iter().find(|r| r.policy == policy).map(|r| &r.trajectory)
    }
}

/// Controller settings from the configuration.
pub fn controller_config(cfg: &ExperimentConfig) -> Result<GpcConfig> {
    let step_size = match cfg.raw("eta")? {
        "experiment" => StepSize::Experiment,
        "theory" => StepSize::Theory { c: cfg.f64("eta_c")? },
        _ => StepSize::Fixed(cfg.f64("eta")?),
    };
    let optimizer = match cfg.raw("optimizer")? {
        "exp-weights" => OptimizerKind::ExpWeights,
        "lazy-md" => OptimizerKind::LazyMd,
        other => return Err(Error::Config(format!("optimizer: unknown value {other:?}"))),
    };
    let gradient = match cfg.raw("gradient")? {
        "fd" => GradientMethod::FiniteDifference,
        "exact" => GradientMethod::ExactLinear,
        other => return Err(Error::Config(format!("gradient: unknown value {other:?}"))),
    };
    let h = cfg.usize("H")?;
    if h == 0 {
        return Err(Error::Config("H must be at least 1".into()));
    }
    Ok(GpcConfig {
        h,
        step_size,
        tau: cfg.f64("tau")?,
        optimizer,
        gradient,
    })
}

fn dist_key(cfg: &ExperimentConfig, key: &str, dim: usize) -> Result<Dist> {
    let v = cfg.vector(key)?;
    if v.len() != dim {
        return Err(Error::Config(format!("{key}: expected {dim} entries, got {}", v.len())));
    }
    Dist::from_slice(&v).map_err(|e| Error::Config(format!("{key}: {e}")))
}

/// Runs the experiment and writes its files under the configured directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let out_dir = cfg.out_dir()?;
    let mut out = execute(cfg)?;
    write_outputs(&mut out, &out_dir)?;
    Ok(out)
}

/// Runs the experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let seed = cfg.seed()?;
    let mut out = RunOutput {
        experiment: cfg.kind.name().to_string(),
        seed,
        ..RunOutput::default()
    };
    match cfg.kind {
        ExperimentKind::Sir | ExperimentKind::SirNoisy => run_sir(cfg, &mut out)?,
        ExperimentKind::Hospital => run_hospital(cfg, &mut out)?,
        ExperimentKind::Replicator | ExperimentKind::ReplicatorRandomCost => run_replicator(cfg, &mut out)?,
        ExperimentKind::LowerBound => run_lower_bound(cfg, &mut out)?,
        ExperimentKind::MixingReport => run_mixing(cfg, &mut out)?,
        ExperimentKind::CustomSimplexLds => run_custom(cfg, &mut out)?,
    }
    for r in &out.runs {
        for s in &r.trajectory.steps {
            validate_vector(s.x.as_slice(), 1.0, 1e-9).map_err(Error::Invalid)?;
        }
    }
    out.summary = summarise(&out);
    Ok(out)
}

/// Regret against the best non-controller policy.
fn summarise(out: &RunOutput) -> Vec<SummaryRecord> {
    let best = out
        .runs
        .iter()
        .filter(|r| r.policy != "gpc-simplex")
        .map(|r| r.trajectory.total_cost())
        .fold(f64::INFINITY, f64::min);
    let mut records: Vec<SummaryRecord> = out
        .runs
        .iter()
        .map(|r| SummaryRecord {
            experiment: out.experiment.clone(),
            policy: r.policy.clone(),
            total_cost: r.trajectory.total_cost(),
            regret_vs_best: if best.is_finite() {
                r.trajectory.total_cost() - best
            } else {
                0.0
            },
            seed: out.seed,
        })
        .collect();
    if let Some(h) = &out.harness {
        if let Some(last) = h.rows.last() {
            records.push(SummaryRecord {
                experiment: out.experiment.clone(),
                policy: format!("controller@T={}", last.horizon),
                total_cost: last.mean_controller_cost,
                regret_vs_best: last.mean_regret,
                seed: out.seed,
            });
        }
    }
    records
}

fn run_policies(system: &System, horizon: usize, gpc: &GpcConfig, baselines: Vec<Box<dyn Policy>>, out: &mut RunOutput) -> Result<()> {
    let run = gpc_simplex_run(system, horizon, gpc)?;
    out.runs.push(PolicyRun {
        policy: "gpc-simplex".into(),
        trajectory: run.trajectory.clone(),
    });
    out.gpc = Some(run);
    for mut b in baselines {
        let trajectory = simulate(system, b.as_mut(), horizon)?;
        out.runs.push(PolicyRun {
            policy: b.name(),
            trajectory,
        });
    }
    Ok(())
}

fn run_sir(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let horizon = cfg.usize("T")?;
    let params = SirParams::new(cfg.f64("beta")?, cfg.f64("theta")?, cfg.f64("xi")?)?;
    let x1 = dist_key(cfg, "x1", 3)?;
    let (c2, c3) = (cfg.f64("c2")?, cfg.f64("c3")?);
    let noise = if cfg.kind == ExperimentKind::SirNoisy {
        let rate = cfg.f64("noise_rate")?;
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::Config(format!("noise_rate {rate} outside [0, 1]")));
        }
        match cfg.raw("noise")? {
            "bursts" => {
                let prob = cfg.f64("noise_prob")?;
                if !(0.0..=1.0).contains(&prob) {
                    return Err(Error::Config(format!("noise_prob {prob} outside [0, 1]")));
                }
                SirNoise::InfectedBursts { rate, prob }
            }
            "uniform" => SirNoise::UniformRandom { rate },
            other => return Err(Error::Config(format!("noise: unknown value {other:?}"))),
        }
    } else {
        SirNoise::None
    };
    let gpc = controller_config(cfg)?;
    let mut rng = seed::stream(out.seed, "sir-noise");
    let (gammas, ws) = sir::noise_schedule(noise, horizon, &mut rng);
    let system = sir::sir_system(params, x1, c2, c3, gammas, ws)?;
    let set = system.control_set;
    let baselines: Vec<Box<dyn Policy>> = vec![
        Box::new(ConstantPolicy::new("full-prevention", &[1.0, 0.0], &set)?),
        Box::new(ConstantPolicy::new("no-prevention", &[0.0, 1.0], &set)?),
    ];
    run_policies(&system, horizon, &gpc, baselines, out)
}

fn peak_infected(t: &Trajectory) -> f64 {
    t.steps.iter().map(|s| s.x[1]).fold(0.0, f64::max)
}

fn run_hospital(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let horizon = cfg.usize("T")?;
    let sigma0 = cfg.f64("sigma0")?;
    let params = hospital::discretised_sir(sigma0, cfg.f64("rate")?)?;
    let cost_params = HospitalCostParams::new(cfg.f64("c2")?, cfg.f64("c3")?, cfg.f64("y_max")?, sigma0)?;
    let x1 = dist_key(cfg, "x1", 3)?;
    let gpc = controller_config(cfg)?;
    let reference = match cfg.raw("reference")? {
        "" => None,
        path => Some(ReferenceTrajectory::load(Path::new(path))?),
    };
    let system = System::general(sir::transition(params), ControlSet::new(1.0, 1.0)?, x1)?
        .noiseless(horizon)
        .with_constant_cost(hospital::cost(cost_params), horizon)
        .with_lipschitz(cost_params.c2 * 2.0 + cost_params.c3 * 2.0);
    let baselines: Vec<Box<dyn Policy>> =
        vec![Box::new(ConstantPolicy::new("no-control", &[0.0, 1.0], &system.control_set)?)];
    run_policies(&system, horizon, &gpc, baselines, out)?;
    for r in &out.runs {
        out.notes.push(format!(
            "{}: peak infected {:.4} (capacity {})",
            r.policy,
            peak_infected(&r.trajectory),
            cost_params.y_max
        ));
    }
    match reference {
        Some(reference) => {
            let infected: Vec<f64> = out.runs[0].trajectory.steps.iter().map(|s| s.x[1]).collect();
            out.notes.push(format!(
                "largest infected gap to the reference trajectory: {:.4}",
                reference.max_infected_gap(&infected)
            ));
        }
        None => out
            .notes
            .push("no reference trajectory configured; only capacity adherence is reported".into()),
    }
    Ok(())
}

fn run_replicator(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let horizon = cfg.usize("T")?;
    let params = RpsParams::new(cfg.f64("evolution_rate")?)?;
    let grid = cfg.usize("grid")?;
    let gpc = controller_config(cfg)?;
    let costs = if cfg.kind == ExperimentKind::ReplicatorRandomCost {
        let mut rng = seed::stream(out.seed, "cost-coins");
        replicator::random_costs(horizon, &mut rng)
    } else {
        vec![replicator::rock_cost(); horizon]
    };
    let system = replicator::rps_system(params, costs)?;
    let baselines: Vec<Box<dyn Policy>> = vec![
        Box::new(BestResponse::new(system.transition.clone(), grid)?),
        Box::new(ConstantPolicy::new("uniform-default", &[1.0 / 3.0; 3], &system.control_set)?),
    ];
    run_policies(&system, horizon, &gpc, baselines, out)?;
    let window = if cfg.kind == ExperimentKind::ReplicatorRandomCost {
        cfg.usize("window")?.max(1)
    } else {
        1
    };
    let tail = 20.min(horizon);
    for r in &out.runs {
        let costs: Vec<f64> = r.trajectory.steps.iter().map(|s| s.cost).collect();
        let smoothed = replicator::trailing_means(&costs, window);
        if tail > 0 {
            let mean = smoothed[smoothed.len() - tail..].iter().sum::<f64>() / tail as f64;
            out.notes.push(format!("{}: mean cost over the last {tail} rounds {:.6}", r.policy, mean));
        }
    }
    Ok(())
}

fn run_lower_bound(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let beta = cfg.f64("beta_lb")?;
    let horizons = cfg.usize_list("horizons")?;
    let trials = cfg.usize("trials")?;
    let report = match cfg.raw("variant")? {
        "simplex" => {
            let gpc = controller_config(cfg)?;
            let factory = move |sys: &System, t: usize| -> Result<Box<dyn Policy>> {
                Ok(Box::new(GpcSimplex::new(sys, t, &gpc)?))
            };
            lower_bound::lower_bound_regret_harness(&factory, beta, &horizons, trials, out.seed)?
        }
        "scalar" => {
            let k = cfg.f64("scalar_gain")?;
            lower_bound::scalar_regret_harness(&|_| Box::new(ScalarLinear(k)), beta, &horizons, trials, out.seed)?
        }
        other => return Err(Error::Config(format!("variant: unknown value {other:?}"))),
    };
    for r in &report.rows {
        out.notes.push(format!(
            "T={}: mean regret {:.4} (se {:.4})",
            r.horizon, r.mean_regret, r.std_error
        ));
    }
    out.notes.push(format!(
        "slope {:.6} per round, log-log slope {:.3}",
        report.slope, report.loglog_slope
    ));
    out.harness = Some(report);
    Ok(())
}

fn run_mixing(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let a = StochasticMatrix::new(cfg.matrix("A")?).map_err(|e| Error::Config(format!("A: {e}")))?;
    if a.nrows() != a.ncols() {
        return Err(Error::Config("A must be square".into()));
    }
    let profile = mixing_profile(&a, cfg.usize("t_max")?)?;
    out.notes.push(format!(
        "stationary distribution {:?}, mixing time {}",
        profile.stationary.as_slice(),
        profile.t_mix_quarter
    ));
    out.mixing = Some(profile);
    Ok(())
}

fn run_custom(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<()> {
    let horizon = cfg.usize("T")?;
    let a = StochasticMatrix::new(cfg.matrix("A")?).map_err(|e| Error::Config(format!("A: {e}")))?;
    let b = StochasticMatrix::new(cfg.matrix("B")?).map_err(|e| Error::Config(format!("B: {e}")))?;
    let d = a.nrows();
    let x1 = dist_key(cfg, "x1", d)?;
    let set = ControlSet::new(cfg.f64("alpha_lb")?, cfg.f64("alpha_ub")?)?;
    let gamma = cfg.f64("gamma")?;
    let mut rng = seed::stream(out.seed, "custom-noise");
    let noises: Vec<Dist> = match cfg.raw("noise")? {
        "random" => (0..horizon)
            .map(|_| {
                // uniform on the simplex via normalised exponentials
                let v = DVector::from_fn(d, |_, _| -(1.0 - rng.gen::<f64>()).ln());
                let s = v.sum();
                Dist::new(v / s)
            })
            .collect::<Result<_>>()?,
        "vertex" => vec![Dist::vertex(d, 0); horizon],
        other => return Err(Error::Config(format!("noise: unknown value {other:?}"))),
    };
    let cost = match cfg.raw("cost")? {
        "l1" => {
            let target = DVector::from_vec(cfg.vector("target")?);
            check_len("target", target.len(), d)?;
            Cost::new(move |x, _| (x - &target).abs().sum())
        }
        "quadratic" => {
            let target = DVector::from_vec(cfg.vector("target")?);
            check_len("target", target.len(), d)?;
            Cost::new(move |x, _| (x - &target).norm_squared())
        }
        "linear" => {
            let w = DVector::from_vec(cfg.vector("weights")?);
            check_len("weights", w.len(), d)?;
            Cost::new(move |x, _| w.dot(x))
        }
        other => return Err(Error::Config(format!("cost: unknown value {other:?}"))),
    };
    let k = b.ncols();
    let system = System::simplex_lds(a, b, set, x1)?
        .with_noise(vec![gamma; horizon], noises)?
        .with_constant_cost(cost, horizon);
    let gpc = controller_config(cfg)?;
    let mut baselines: Vec<Box<dyn Policy>> = Vec::new();
    if set.alpha_lb == 0.0 {
        baselines.push(Box::new(ConstantPolicy::new("zero-control", &vec![0.0; k], &set)?));
    }
    for j in 0..k {
        let mut u = vec![0.0; k];
        u[j] = set.alpha_ub;
        baselines.push(Box::new(ConstantPolicy::new(&format!("vertex-{}", j + 1), &u, &set)?));
    }
    run_policies(&system, horizon, &gpc, baselines, out)
}

fn check_len(key: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Config(format!("{key}: expected {want} entries, got {got}")));
    }
    Ok(())
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path)?;
    files.push(path);
    Ok(BufWriter::new(f))
}

/// Writes trajectories, diagnostics, tables and `summary.jsonl` into `dir`.
pub fn write_outputs(out: &mut RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let name = out.experiment.clone();
    let mut files = Vec::new();
    for r in &out.runs {
        let mut w = create(dir, &format!("{name}_{}.csv", r.policy), &mut files)?;
        r.trajectory.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(g) = &out.gpc {
        let mut w = create(dir, &format!("{name}_gpc-simplex_diagnostics.csv"), &mut files)?;
        g.write_diagnostics_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(h) = &out.harness {
        let mut w = create(dir, &format!("{name}_regret.csv"), &mut files)?;
        writeln!(w, "T,mean_regret,std_error,mean_controller_cost,mean_comparator_cost")?;
        for r in &h.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.horizon,
                fmt_f64(r.mean_regret),
                fmt_f64(r.std_error),
                fmt_f64(r.mean_controller_cost),
                fmt_f64(r.mean_comparator_cost)
            )?;
        }
        w.flush()?;
    }
    if let Some(m) = &out.mixing {
        let mut w = create(dir, &format!("{name}_profile.csv"), &mut files)?;
        writeln!(w, "t,D,Dbar")?;
        for (t, (d, db)) in m.d_values.iter().zip(&m.dbar_values).enumerate() {
            writeln!(w, "{t},{},{}", fmt_f64(*d), fmt_f64(*db))?;
        }
        w.flush()?;
        let mut w = create(dir, &format!("{name}_stationary.csv"), &mut files)?;
        writeln!(w, "i,pi")?;
        for (i, p) in m.stationary.as_slice().iter().enumerate() {
            writeln!(w, "{},{}", i + 1, fmt_f64(*p))?;
        }
        w.flush()?;
    }
    let mut w = create(dir, "summary.jsonl", &mut files)?;
    for rec in &out.summary {
        serde_json::to_writer(&mut w, rec)?;
        writeln!(w)?;
    }
    w.flush()?;
    out.files = files;
    Ok(())
}
