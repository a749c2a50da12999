//! Discrete replicator dynamics of a controlled Rock-Paper-Scissors game.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dynamics::{Cost, System, Transition};
use crate::error::{Error, Result};
use crate::simplex::{ControlSet, Dist};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpsParams {
    pub evolution_rate: f64,
}

impl Default for RpsParams {
    fn default() -> Self {
        RpsParams { evolution_rate: 0.25 }
    }
}

impl RpsParams {
    pub fn new(evolution_rate: f64) -> Result<Self> {
        if !(evolution_rate > 0.0 && evolution_rate <= 1.0) {
            return Err(Error::Parameter(format!("evolution rate {evolution_rate} outside (0, 1]")));
        }
        Ok(RpsParams { evolution_rate })
    }
}

/// `M(u) = [[0, u₁, −u₃], [−u₁, 0, u₂], [u₃, −u₂, 0]]`.
pub fn rps_payoff(u: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, u[0], -u[2], -u[0], 0.0, u[1], u[2], -u[1], 0.0])
}

/// `x_i ← x_i + η·x_i·(M(u)·x)_i`.
pub fn replicator_transition(x: &DVector<f64>, u: &DVector<f64>, p: &RpsParams) -> DVector<f64> {
    let fitness = rps_payoff(u) * x;
    x + x.component_mul(&fitness) * p.evolution_rate
}

pub fn transition(p: RpsParams) -> Transition {
    Transition::general(3, 3, move |x, u| replicator_transition(x, u, &p))
}

/// `x₁²`, penalising "rock".
pub fn rock_cost() -> Cost {
    Cost::new(|x, _| x[0] * x[0])
}

/// `x₁² + u₃²`.
pub fn rock_and_control_cost() -> Cost {
    Cost::new(|x, u| x[0] * x[0] + u[2] * u[2])
}

/// Fair coin per round between [`rock_cost`] and [`rock_and_control_cost`].
pub fn random_costs<R: Rng>(horizon: usize, rng: &mut R) -> Vec<Cost> {
    (0..horizon)
        .map(|_| if rng.gen_bool(0.5) { rock_and_control_cost() } else { rock_cost() })
        .collect()
}

/// Noiseless RPS system from the uniform state with controls in `Δ³`.
pub fn rps_system(p: RpsParams, costs: Vec<Cost>) -> Result<System> {
    let horizon = costs.len();
    Ok(System::general(transition(p), ControlSet::new(1.0, 1.0)?, Dist::uniform(3))?
        .noiseless(horizon)
        .with_costs(costs)
        .with_lipschitz(2.0))
}

/// Mean of the last `min(t, window)` entries for each `t`.
pub fn trailing_means(values: &[f64], window: usize) -> Vec<f64> {
    (1..=values.len())
        .map(|t| {
            let k = t.min(window);
            values[t - k..t].iter().sum::<f64>() / k as f64
        })
        .collect()
}
