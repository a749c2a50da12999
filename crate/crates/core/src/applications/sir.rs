//! Controlled SIR epidemic on `Δ³` with prevention control `u ∈ Δ²`.
//!
//! State is `(S, I, R)`. `u = (1, 0)` is full prevention, `u = (0, 1)` none;
//! the effective transmission rate is `β·u(2)`.

use nalgebra::DVector;
use rand::Rng;

use crate::dynamics::{Cost, System, Transition};
use crate::error::{Error, Result};
use crate::simplex::{ControlSet, Dist};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirParams {
    pub beta: f64,
    pub theta: f64,
    pub xi: f64,
}

impl Default for SirParams {
    fn default() -> Self {
        SirParams {
            beta: 0.5,
            theta: 0.03,
            xi: 0.005,
        }
    }
}

impl SirParams {
    pub fn new(beta: f64, theta: f64, xi: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("theta", theta), ("xi", xi)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(SirParams { beta, theta, xi })
    }
}

/// The noiseless update
/// `[[1−βI, 0, ξ], [0, 1−θ, 0], [0, θ, 1−ξ]]·x + [[βIS, 0], [0, βIS], [0, 0]]·u`.
pub fn sir_transition(x: &DVector<f64>, u: &DVector<f64>, p: &SirParams) -> DVector<f64> {
    let (s, i, r) = (x[0], x[1], x[2]);
    let bis = p.beta * i * s;
    DVector::from_vec(vec![
        (1.0 - p.beta * i) * s + p.xi * r + bis * u[0],
        (1.0 - p.theta) * i + bis * u[1],
        p.theta * i + (1.0 - p.xi) * r,
    ])
}

pub fn transition(p: SirParams) -> Transition {
    Transition::general(3, 2, move |x, u| sir_transition(x, u, &p))
}

/// `c₃·I² + c₂·S·u(1)`.
pub fn sir_cost(x: &DVector<f64>, u: &DVector<f64>, c2: f64, c3: f64) -> f64 {
    c3 * x[1] * x[1] + c2 * x[0] * u[0]
}

pub fn cost(c2: f64, c3: f64) -> Cost {
    Cost::new(move |x, u| sir_cost(x, u, c2, c3))
}

/// Perturbation schedule for noisy runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SirNoise {
    None,
    /// `γ_t = rate` with probability `prob`, else 0; `w_t = (0, 1, 0)`.
    InfectedBursts { rate: f64, prob: f64 },
    /// `γ_t = rate`; `w_t` a normalised vector of i.i.d. uniforms.
    UniformRandom { rate: f64 },
}

/// `(γ_1..γ_T, w_1..w_T)` drawn from `rng`.
pub fn noise_schedule<R: Rng>(noise: SirNoise, horizon: usize, rng: &mut R) -> (Vec<f64>, Vec<Dist>) {
    let infected = Dist::vertex(3, 1);
    let mut gammas = Vec::with_capacity(horizon);
    let mut ws = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        match noise {
            SirNoise::None => {
                gammas.push(0.0);
                ws.push(infected.clone());
            }
            SirNoise::InfectedBursts { rate, prob } => {
                gammas.push(if rng.gen_bool(prob) { rate } else { 0.0 });
                ws.push(infected.clone());
            }
            SirNoise::UniformRandom { rate } => {
                let v = DVector::from_fn(3, |_, _| rng.gen::<f64>() + f64::MIN_POSITIVE);
                let s = v.sum();
                gammas.push(rate);
                ws.push(Dist::new(v / s).expect("normalised positive vector"));
            }
        }
    }
    (gammas, ws)
}

/// SIR system with full-strength controls `u ∈ Δ²`.
pub fn sir_system(
    params: SirParams,
    x1: Dist,
    c2: f64,
    c3: f64,
    gammas: Vec<f64>,
    noises: Vec<Dist>,
) -> Result<System> {
    let horizon = gammas.len();
    Ok(System::general(transition(params), ControlSet::new(1.0, 1.0)?, x1)?
        .with_noise(gammas, noises)?
        .with_constant_cost(cost(c2, c3), horizon)
        .with_lipschitz(c2 + 2.0 * c3))
}
