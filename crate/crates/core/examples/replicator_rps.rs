//! Steers Rock-Paper-Scissors replicator dynamics away from Rock.

use simplex_control::applications::baselines::{BestResponse, ConstantPolicy};
use simplex_control::applications::replicator::{rock_cost, rps_system, RpsParams};
use simplex_control::controller::{gpc_simplex_run, GpcConfig};
use simplex_control::dynamics::{simulate, Policy};

fn main() -> simplex_control::Result<()> {
    let horizon = 100;
    let system = rps_system(RpsParams::default(), vec![rock_cost(); horizon])?;

    let gpc = gpc_simplex_run(&system, horizon, &GpcConfig::default())?;
    let mut baselines: Vec<Box<dyn Policy>> = vec![
        Box::new(BestResponse::new(system.transition.clone(), 50)?),
        Box::new(ConstantPolicy::new("uniform-default", &[1.0 / 3.0; 3], &system.control_set)?),
    ];
    println!("{:<16} {:>8}  final x", "policy", "cost");
    let last = |t: &simplex_control::dynamics::Trajectory| t.final_state.clone().unwrap_or_default();
    println!("{:<16} {:>8.4}  {:.3?}", "gpc-simplex", gpc.trajectory.total_cost(), last(&gpc.trajectory).as_slice());
    for b in baselines.iter_mut() {
        let traj = simulate(&system, b.as_mut(), horizon)?;
        println!("{:<16} {:>8.4}  {:.3?}", b.name(), traj.total_cost(), last(&traj).as_slice());
    }
    Ok(())
}
