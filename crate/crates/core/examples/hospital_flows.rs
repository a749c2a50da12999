//! Keeps infections under hospital capacity using the Lambert-W surge cost.

use simplex_control::applications::baselines::ConstantPolicy;
use simplex_control::applications::hospital::{self, HospitalCostParams};
use simplex_control::applications::sir;
use simplex_control::controller::{gpc_simplex_run, GpcConfig};
use simplex_control::dynamics::{simulate, System};
use simplex_control::simplex::{ControlSet, Dist};

fn main() -> simplex_control::Result<()> {
    let horizon = 100;
    let cost_params = HospitalCostParams::default();
    let params = hospital::discretised_sir(cost_params.sigma0, 0.1)?;

    let x1 = Dist::from_slice(&[0.9, 0.01, 0.09])?;
    println!("cost at the start: {:.4}", hospital::hospital_cost(x1.values(), &nalgebra::DVector::from_vec(vec![0.0, 1.0]), &cost_params)?);

    let system = System::general(sir::transition(params), ControlSet::new(1.0, 1.0)?, x1)?
        .noiseless(horizon)
        .with_constant_cost(hospital::cost(cost_params), horizon)
        .with_lipschitz(2.0 * (cost_params.c2 + cost_params.c3));

    let gpc = gpc_simplex_run(&system, horizon, &GpcConfig::default())?;
    let open = simulate(&system, &mut ConstantPolicy::new("no-control", &[0.0, 1.0], &system.control_set)?, horizon)?;

    println!("{:>4} {:>9} {:>9} {:>7}", "t", "I gpc", "I open", "u(1)");
    for (a, b) in gpc.trajectory.steps.iter().zip(&open.steps).step_by(10) {
        println!("{:>4} {:>9.4} {:>9.4} {:>7.3}", a.t, a.x[1], b.x[1], a.u[0]);
    }
    let peak = |t: &simplex_control::dynamics::Trajectory| t.steps.iter().map(|s| s.x[1]).fold(0.0, f64::max);
    println!("capacity {}, peak with control {:.4}, without {:.4}", cost_params.y_max, peak(&gpc.trajectory), peak(&open));
    Ok(())
}
