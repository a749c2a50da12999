//! SIR under random infection bursts, with the perturbation recovered from
//! each observed transition.

use simplex_control::applications::baselines::ConstantPolicy;
use simplex_control::applications::sir::{noise_schedule, sir_system, SirNoise, SirParams};
use simplex_control::controller::{gpc_simplex_run, GpcConfig};
use simplex_control::dynamics::{recover_perturbation, simulate};
use simplex_control::seed;
use simplex_control::simplex::Dist;

fn main() -> simplex_control::Result<()> {
    let horizon = 200;
    let master_seed = 7;
    let mut rng = seed::stream(master_seed, "sir-noise");
    let noise = SirNoise::InfectedBursts { rate: 0.01, prob: 0.2 };
    let (gammas, ws) = noise_schedule(noise, horizon, &mut rng);
    let bursts = gammas.iter().filter(|&&g| g > 0.0).count();
    println!("{bursts} bursts in {horizon} rounds");

    let params = SirParams::default();
    let system = sir_system(params, Dist::from_slice(&[0.9, 0.1, 0.0])?, 1.0, 5.0, gammas, ws)?;
    let set = system.control_set;
    let gpc = gpc_simplex_run(&system, horizon, &GpcConfig::default())?;
    let full = simulate(&system, &mut ConstantPolicy::new("full", &[1.0, 0.0], &set)?, horizon)?;
    let none = simulate(&system, &mut ConstantPolicy::new("none", &[0.0, 1.0], &set)?, horizon)?;
    println!("gpc-simplex {:.3}, full {:.3}, none {:.3}", gpc.trajectory.total_cost(), full.total_cost(), none.total_cost());

    // The controller never sees w directly; it inverts the dynamics.
    let steps = &gpc.trajectory.steps;
    let mut worst: f64 = 0.0;
    for pair in steps.windows(2) {
        let (s, next) = (&pair[0], &pair[1]);
        if s.gamma > 0.0 {
            let w = recover_perturbation(&Dist::new(s.x.clone())?, &s.u, &Dist::new(next.x.clone())?, s.gamma, &system.transition)?;
            worst = worst.max((w - &s.w).abs().max());
        }
    }
    println!("largest perturbation recovery error: {worst:.2e}");
    Ok(())
}
