//! Controls the SIR epidemic with GPC-Simplex and compares against the two
//! constant policies. Run with `cargo run --release --example sir_control`.

use simplex_control::applications::baselines::ConstantPolicy;
use simplex_control::applications::sir::{sir_system, SirParams};
use simplex_control::controller::{gpc_simplex_run, GpcConfig, GradientMethod, OptimizerKind};
use simplex_control::dynamics::simulate;
use simplex_control::optimizer::StepSize;
use simplex_control::simplex::Dist;

fn main() -> simplex_control::Result<()> {
    let horizon = 200;
    let x1 = Dist::from_slice(&[0.9, 0.1, 0.0])?;
    let config = GpcConfig {
        h: 5,
        step_size: StepSize::Experiment,
        tau: 1.0,
        optimizer: OptimizerKind::ExpWeights,
        gradient: GradientMethod::FiniteDifference,
    };

    for (c2, c3) in [(1.0, 10.0), (1.0, 20.0), (1.0, 1.0)] {
        let noiseless = (vec![0.0; horizon], vec![Dist::vertex(3, 1); horizon]);
        let system = sir_system(SirParams::default(), x1.clone(), c2, c3, noiseless.0, noiseless.1)?;
        let set = system.control_set;

        let gpc = gpc_simplex_run(&system, horizon, &config)?;
        let full = simulate(&system, &mut ConstantPolicy::new("full", &[1.0, 0.0], &set)?, horizon)?;
        let none = simulate(&system, &mut ConstantPolicy::new("none", &[0.0, 1.0], &set)?, horizon)?;

        println!("c2 = {c2}, c3 = {c3}");
        println!("  gpc-simplex      {:>9.3}", gpc.trajectory.total_cost());
        println!("  full-prevention  {:>9.3}", full.total_cost());
        println!("  no-prevention    {:>9.3}", none.total_cost());

        // how the controller's prevention level evolves
        let trace: Vec<String> = gpc
            .trajectory
            .steps
            .iter()
            .step_by(25)
            .map(|s| format!("{:.2}", s.u[0]))
            .collect();
        println!("  prevention u(1) every 25 rounds: {}", trace.join(" "));
    }
    Ok(())
}
