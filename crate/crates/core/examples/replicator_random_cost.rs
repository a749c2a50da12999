//! Replicator dynamics where each round's cost is picked by a seeded coin,
//! reported as trailing-window averages.

use simplex_control::applications::baselines::{BestResponse, ConstantPolicy};
use simplex_control::applications::replicator::{random_costs, rps_system, trailing_means, RpsParams};
use simplex_control::controller::{gpc_simplex_run, GpcConfig};
use simplex_control::dynamics::simulate;
use simplex_control::seed;

fn main() -> simplex_control::Result<()> {
    let horizon = 200;
    let window = 15;
    let mut coins = seed::stream(3, "cost-coins");
    let system = rps_system(RpsParams::default(), random_costs(horizon, &mut coins))?;

    let gpc = gpc_simplex_run(&system, horizon, &GpcConfig::default())?.trajectory;
    let br = simulate(&system, &mut BestResponse::new(system.transition.clone(), 50)?, horizon)?;
    let uni = simulate(
        &system,
        &mut ConstantPolicy::new("uniform", &[1.0 / 3.0; 3], &system.control_set)?,
        horizon,
    )?;

    let smooth = |t: &simplex_control::dynamics::Trajectory| {
        trailing_means(&t.steps.iter().map(|s| s.cost).collect::<Vec<_>>(), window)
    };
    let (g, b, u) = (smooth(&gpc), smooth(&br), smooth(&uni));
    println!("{:>4} {:>8} {:>8} {:>8}", "t", "gpc", "best-rsp", "uniform");
    for t in (window - 1..horizon).step_by(20) {
        println!("{:>4} {:>8.4} {:>8.4} {:>8.4}", t + 1, g[t], b[t], u[t]);
    }
    println!("totals: gpc {:.3}, best response {:.3}, uniform {:.3}", gpc.total_cost(), br.total_cost(), uni.total_cost());
    Ok(())
}
