//! Regret of GPC-Simplex on the two-system lower-bound construction,
//! next to the scalar variant played by a fixed linear controller.

use simplex_control::applications::lower_bound::{
    comparator_bound, lower_bound_regret_harness, scalar_regret_harness, ScalarLinear, Variant,
};
use simplex_control::controller::{GpcConfig, GpcSimplex, GradientMethod, OptimizerKind};
use simplex_control::dynamics::{Policy, System};

fn main() -> simplex_control::Result<()> {
    let beta = 32.0;
    let horizons = [100, 200, 400];
    let config = GpcConfig {
        optimizer: OptimizerKind::LazyMd,
        gradient: GradientMethod::ExactLinear,
        ..GpcConfig::default()
    };
    let factory = |sys: &System, t: usize| -> simplex_control::Result<Box<dyn Policy>> {
        Ok(Box::new(GpcSimplex::new(sys, t, &config)?))
    };

    let simplex = lower_bound_regret_harness(&factory, beta, &horizons, 10, 0)?;
    println!("simplex family (beta = {beta})");
    for r in &simplex.rows {
        println!(
            "  T = {:>4}: regret {:>8.3} +- {:.3}   comparator cost {:.3} (bound {:.3})",
            r.horizon,
            r.mean_regret,
            r.std_error,
            r.mean_comparator_cost,
            comparator_bound(Variant::Simplex, beta, r.horizon)
        );
    }
    println!("  slope {:.4}, log-log slope {:.2}", simplex.slope, simplex.loglog_slope);

    let scalar = scalar_regret_harness(&|_| Box::new(ScalarLinear(0.5)), beta, &horizons, 10, 0)?;
    println!("scalar family, u = x / 2");
    for r in &scalar.rows {
        println!("  T = {:>4}: regret {:>8.3}", r.horizon, r.mean_regret);
    }
    Ok(())
}
