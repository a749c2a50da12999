//! Hospital-flow cost: long-run susceptible fraction, quadratic prevention
//! cost and a smooth penalty for exceeding hospital capacity.

use nalgebra::DVector;

use super::lambert::lambert_w0;
use super::sir::SirParams;
use crate::dynamics::Cost;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HospitalCostParams {
    pub c2: f64,
    pub c3: f64,
    pub y_max: f64,
    pub sigma0: f64,
}

impl Default for HospitalCostParams {
    fn default() -> Self {
        HospitalCostParams {
            c2: 0.01,
            c3: 100.0,
            y_max: 0.1,
            sigma0: 3.0,
        }
    }
}

impl HospitalCostParams {
    pub fn new(c2: f64, c3: f64, y_max: f64, sigma0: f64) -> Result<Self> {
        if !(y_max > 0.0 && y_max < 1.0) {
            return Err(Error::Parameter(format!("y_max = {y_max} outside (0, 1)")));
        }
        if !(c2 > 0.0 && c3 > 0.0 && sigma0 > 0.0) {
            return Err(Error::Parameter("c2, c3 and sigma0 must be positive".into()));
        }
        Ok(HospitalCostParams { c2, c3, y_max, sigma0 })
    }
}

/// SIR rates of the unit-step discretisation with recovery rate `rate`:
/// `β = rate·σ₀`, `θ = rate`, `ξ = 0`.
pub fn discretised_sir(sigma0: f64, rate: f64) -> Result<SirParams> {
    SirParams::new(rate * sigma0, rate, 0.0)
}

/// `S_∞(S, I, σ₀) = W₀(−σ₀·I·e^{−σ₀(S+I)})/σ₀`.
pub fn s_infinity(s: f64, i: f64, sigma0: f64) -> Result<f64> {
    Ok(lambert_w0(-sigma0 * i * (-sigma0 * (s + i)).exp())? / sigma0)
}

fn surge(i: f64, p: &HospitalCostParams) -> f64 {
    let gap = i - p.y_max;
    p.c3 * gap / (1.0 + (-100.0 * gap).exp())
}

/// `−S_∞(S, I, σ₀) + c₂·u(1)² + c₃(I − y_max)/(1 + e^{−100(I − y_max)})`.
pub fn hospital_cost(x: &DVector<f64>, u: &DVector<f64>, p: &HospitalCostParams) -> Result<f64> {
    Ok(-s_infinity(x[0], x[1], p.sigma0)? + p.c2 * u[0] * u[0] + surge(x[1], p))
}

/// Per-round cost; arguments outside the Lambert domain (only reachable at
/// infeasible probe points) are clamped to the branch point.
pub fn cost(p: HospitalCostParams) -> Cost {
    Cost::new(move |x, u| {
        let arg = (-p.sigma0 * x[1] * (-p.sigma0 * (x[0] + x[1])).exp()).max(-1.0 / std::f64::consts::E);
        let w = lambert_w0(arg).expect("argument clamped into the domain");
        -w / p.sigma0 + p.c2 * u[0] * u[0] + surge(x[1], &p)
    })
}

/// Optimal-control reference trajectory `(t, S, I, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub rows: Vec<[f64; 4]>,
}

impl ReferenceTrajectory {
    /// Parses a CSV with header `t,S,I,u`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Config("empty reference file".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        if header != ["t", "S", "I", "u"] {
            return Err(Error::Config(format!("reference header must be t,S,I,u, got {}", header.join(","))));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Config(format!("reference row {}: {e}", n + 2)))?;
            if vals.len() != 4 {
                return Err(Error::Config(format!("reference row {} has {} fields", n + 2, vals.len())));
            }
            rows.push([vals[0], vals[1], vals[2], vals[3]]);
        }
        Ok(ReferenceTrajectory { rows })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Largest absolute gap in `I` against `infected[t − 1]` at the reference times.
    pub fn max_infected_gap(&self, infected: &[f64]) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| {
                let t = r[0].round() as usize;
                (t >= 1 && t <= infected.len()).then(|| (infected[t - 1] - r[2]).abs())
            })
            .fold(0.0, f64::max)
    }
}
