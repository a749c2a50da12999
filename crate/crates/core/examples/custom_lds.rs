//! A hand-built simplex LDS with an ambient control budget, tracked against
//! every constant-gain policy, plus a linear feedback comparator.

use nalgebra::DVector;
use simplex_control::applications::baselines::ConstantPolicy;
use simplex_control::controller::{gpc_simplex_run, GpcConfig, GradientMethod, OptimizerKind};
use simplex_control::dynamics::{rollout_linear_policy, simulate, Cost, System};
use simplex_control::simplex::{ControlSet, Dist, ScaledStochasticMatrix, StochasticMatrix};

fn main() -> simplex_control::Result<()> {
    let horizon = 150;
    // three compartments drifting toward compartment 3
    let a = StochasticMatrix::from_rows(&[&[0.8, 0.0, 0.1], &[0.2, 0.7, 0.0], &[0.0, 0.3, 0.9]])?;
    // two interventions that move mass into compartments 1 and 2
    let b = StochasticMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]])?;
    let set = ControlSet::new(0.0, 0.4)?;
    let target = DVector::from_vec(vec![0.4, 0.4, 0.2]);
    let cost = Cost::new(move |x, u| (x - &target).abs().sum() + 0.1 * u.sum());

    let arrivals: Vec<Dist> = (0..horizon).map(|t| Dist::vertex(3, t % 3)).collect();
    let system = System::simplex_lds(a, b, set, Dist::uniform(3))?
        .with_noise(vec![0.05; horizon], arrivals)?
        .with_constant_cost(cost, horizon)
        .with_lipschitz(2.1);

    let config = GpcConfig {
        optimizer: OptimizerKind::LazyMd,
        gradient: GradientMethod::ExactLinear,
        ..GpcConfig::default()
    };
    let gpc = gpc_simplex_run(&system, horizon, &config)?;
    println!("gpc-simplex    {:.4} (final scale {:.3})", gpc.trajectory.total_cost(), gpc.diagnostics.last().map_or(0.0, |d| d.scale));

    for (name, u) in [("zero", [0.0, 0.0]), ("push-1", [0.4, 0.0]), ("push-2", [0.0, 0.4]), ("split", [0.2, 0.2])] {
        let traj = simulate(&system, &mut ConstantPolicy::new(name, &u, &set)?, horizon)?;
        println!("{name:<14} {:.4}", traj.total_cost());
    }

    // u = K x: every compartment feeds 40% of its mass back, mostly to compartment 1
    let k = ScaledStochasticMatrix::from_rows(&[&[0.3, 0.2, 0.4], &[0.1, 0.2, 0.0]])?;
    println!("feedback K     {:.4}", rollout_linear_policy(&system, &k, horizon)?.total_cost());
    Ok(())
}
