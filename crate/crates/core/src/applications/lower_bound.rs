//! Two-system constructions on which no causal controller has sublinear
//! regret against all time-invariant linear policies, plus a harness that
//! measures a controller's regret on them.
//!
//! Both families hide a bit `b` revealed only at round `T/2`: the simplex
//! family through the perturbation `w_{T/2}`, the scalar family through a
//! unit kick. Costs are zero up to `T/2`.

use nalgebra::DVector;
use rand::Rng;

use crate::dynamics::{rollout_linear_policy, simulate, Cost, Policy, System};
use crate::error::{Error, Result};
use crate::seed;
use crate::simplex::{ControlSet, Dist, ScaledStochasticMatrix, StochasticMatrix};

/// Magnitude guard for the scalar family.
pub const SCALAR_CLIP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Simplex,
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundInstance {
    pub variant: Variant,
    pub branch: u8,
    pub beta: f64,
    pub horizon: usize,
}

impl LowerBoundInstance {
    pub fn new(variant: Variant, branch: u8, beta: f64, horizon: usize) -> Result<Self> {
        if horizon == 0 || horizon % 2 != 0 {
            return Err(Error::Parameter(format!("horizon must be even and positive, got {horizon}")));
        }
        if beta < 2.0 {
            return Err(Error::Parameter(format!("beta must be at least 2, got {beta}")));
        }
        if variant == Variant::Simplex && beta > horizon as f64 {
            return Err(Error::Parameter(format!("control cap beta/T = {} exceeds 1", beta / horizon as f64)));
        }
        if branch > 1 {
            return Err(Error::Parameter(format!("branch must be 0 or 1, got {branch}")));
        }
        Ok(LowerBoundInstance {
            variant,
            branch,
            beta,
            horizon,
        })
    }

    pub fn cap(&self) -> f64 {
        self.beta / self.horizon as f64
    }
}

/// `|x(2) − ½|` after round `T/2`, zero before.
pub fn simplex_costs(horizon: usize) -> Vec<Cost> {
    (1..=horizon)
        .map(|t| {
            if t > horizon / 2 {
                Cost::new(|x, _| (x[1] - 0.5).abs())
            } else {
                Cost::zero()
            }
        })
        .collect()
}

/// `A = B = I₂`, `x₁ = (0, 1)`, controls of mass at most `β/T`,
/// `γ_t = ½·𝟙[t = T/2]`, `w⁰ = (½, ½)`, `w¹ = (1, 0)`.
pub fn simplex_system(inst: &LowerBoundInstance) -> Result<System> {
    let t = inst.horizon;
    let w = if inst.branch == 0 {
        Dist::uniform(2)
    } else {
        Dist::vertex(2, 0)
    };
    let gammas = (1..=t).map(|s| if s == t / 2 { 0.5 } else { 0.0 }).collect();
    let i2 = StochasticMatrix::identity(2);
    Ok(
        System::simplex_lds(i2.clone(), i2, ControlSet::new(0.0, inst.cap())?, Dist::vertex(2, 1))?
            .with_noise(gammas, vec![w; t])?
            .with_costs(simplex_costs(t))
            .with_lipschitz(1.0),
    )
}

/// `π⁰(x) = (β/T)(½, ½)` and `π¹(x) = 0` as gain matrices.
pub fn simplex_comparators(beta: f64, horizon: usize) -> [ScaledStochasticMatrix; 2] {
    let cap = beta / horizon as f64;
    [
        ScaledStochasticMatrix::scaled(&StochasticMatrix::uniform(2), cap),
        ScaledStochasticMatrix::zeros(2, 2),
    ]
}

/// Both simplex systems with their comparators.
pub struct LowerBoundPair {
    pub systems: [System; 2],
    pub comparators: [ScaledStochasticMatrix; 2],
}

pub fn make_simplex_pair(beta: f64, horizon: usize) -> Result<LowerBoundPair> {
    let sys = |b| simplex_system(&LowerBoundInstance::new(Variant::Simplex, b, beta, horizon)?);
    Ok(LowerBoundPair {
        systems: [sys(0)?, sys(1)?],
        comparators: simplex_comparators(beta, horizon),
    })
}

/// `x_{t+1} = x_t − (β/T)·u_t + w_t` with `x₁ = 1`; `w¹_{T/2} = −1`, else 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSystem {
    pub beta: f64,
    pub horizon: usize,
    pub ws: Vec<f64>,
}

pub fn scalar_system(inst: &LowerBoundInstance) -> ScalarSystem {
    let t = inst.horizon;
    let ws = (1..=t)
        .map(|s| if inst.branch == 1 && s == t / 2 { -1.0 } else { 0.0 })
        .collect();
    ScalarSystem {
        beta: inst.beta,
        horizon: t,
        ws,
    }
}

/// Causal controller for the scalar family.
pub trait ScalarPolicy {
    fn act(&mut self, t: usize, x: f64) -> f64;

    fn observe(&mut self, _t: usize, _x: f64, _u: f64, _x_next: f64) {}
}

/// `u = k·x`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarLinear(pub f64);

impl ScalarPolicy for ScalarLinear {
    fn act(&mut self, _t: usize, x: f64) -> f64 {
        self.0 * x
    }
}

impl ScalarSystem {
    /// Total of `|x| + |u|` over rounds after `T/2`.
    pub fn rollout(&self, policy: &mut dyn ScalarPolicy) -> f64 {
        let mut x = 1.0;
        let mut total = 0.0;
        let gain = self.beta / self.horizon as f64;
        for t in 1..=self.horizon {
            let u = policy.act(t, x);
            if t > self.horizon / 2 {
                total += x.abs() + u.abs();
            }
            let next = (x - gain * u + self.ws[t - 1]).clamp(-SCALAR_CLIP, SCALAR_CLIP);
            policy.observe(t, x, u, next);
            x = next;
        }
        total
    }
}

/// `(ℒ⁰, ℒ¹)` of the scalar family.
pub fn make_scalar_pair(beta: f64, horizon: usize) -> Result<[ScalarSystem; 2]> {
    Ok([
        scalar_system(&LowerBoundInstance::new(Variant::Scalar, 0, beta, horizon)?),
        scalar_system(&LowerBoundInstance::new(Variant::Scalar, 1, beta, horizon)?),
    ])
}

/// Upper bound on a comparator's cost on its own system: `(T/β)e^{−β/2}`
/// (simplex) or `(2T/β)e^{−β/2}` (scalar).
pub fn comparator_bound(variant: Variant, beta: f64, horizon: usize) -> f64 {
    let base = horizon as f64 / beta * (-beta / 2.0).exp();
    match variant {
        Variant::Simplex => base,
        Variant::Scalar => 2.0 * base,
    }
}

/// Regret statistics at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessRow {
    pub horizon: usize,
    pub mean_regret: f64,
    pub std_error: f64,
    pub mean_controller_cost: f64,
    pub mean_comparator_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessReport {
    pub rows: Vec<HarnessRow>,
    /// Least-squares slope of mean regret against `T`.
    pub slope: f64,
    /// Least-squares slope of `ln(mean regret)` against `ln T` (NaN if any mean is ≤ 0).
    pub loglog_slope: f64,
}

impl HarnessReport {
    pub fn regret_at(&self, horizon: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.horizon == horizon).map(|r| r.mean_regret)
    }

    fn from_rows(rows: Vec<HarnessRow>) -> Self {
        let xs: Vec<f64> = rows.iter().map(|r| r.horizon as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_regret).collect();
        let slope = ls_slope(&xs, &ys);
        let loglog_slope = if ys.iter().all(|&y| y > 0.0) {
            ls_slope(
                &xs.iter().map(|x| x.ln()).collect::<Vec<_>>(),
                &ys.iter().map(|y| y.ln()).collect::<Vec<_>>(),
            )
        } else {
            f64::NAN
        };
        HarnessReport {
            rows,
            slope,
            loglog_slope,
        }
    }
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn summarise(horizon: usize, samples: &[(f64, f64)]) -> HarnessRow {
    let n = samples.len() as f64;
    let regrets: Vec<f64> = samples.iter().map(|(c, b)| c - b).collect();
    let mean = regrets.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        regrets.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    HarnessRow {
        horizon,
        mean_regret: mean,
        std_error: (var / n).sqrt(),
        mean_controller_cost: samples.iter().map(|s| s.0).sum::<f64>() / n,
        mean_comparator_cost: samples.iter().map(|s| s.1).sum::<f64>() / n,
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    Ok(())
}

/// Builds a fresh controller for one trial on the given system.
pub type ControllerFactory<'a> = dyn Fn(&System, usize) -> Result<Box<dyn Policy>> + 'a;

/// Mean regret per horizon on the simplex family, with `b` uniform per trial.
/// Regret is controller cost minus the better of `π⁰`, `π¹` on the drawn system.
pub fn lower_bound_regret_harness(
    factory: &ControllerFactory<'_>,
    beta: f64,
    horizons: &[usize],
    trials: usize,
    master_seed: u64,
) -> Result<HarnessReport> {
    check_trials(trials)?;
    let mut rows = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let pair = make_simplex_pair(beta, t)?;
        let comparator_costs: Vec<f64> = (0..2)
            .map(|b| {
                let c0 = rollout_linear_policy(&pair.systems[b], &pair.comparators[0], t)?.total_cost();
                let c1 = rollout_linear_policy(&pair.systems[b], &pair.comparators[1], t)?.total_cost();
                Ok(c0.min(c1))
            })
            .collect::<Result<_>>()?;
        let mut rng = seed::stream(master_seed, &format!("lowerbound-branch-{t}"));
        let mut samples = Vec::with_capacity(trials);
        for _ in 0..trials {
            let b = usize::from(rng.gen_bool(0.5));
            let mut ctrl = factory(&pair.systems[b], t)?;
            let cost = simulate(&pair.systems[b], ctrl.as_mut(), t)?.total_cost();
            samples.push((cost, comparator_costs[b]));
        }
        rows.push(summarise(t, &samples));
    }
    Ok(HarnessReport::from_rows(rows))
}

pub type ScalarFactory<'a> = dyn Fn(&ScalarSystem) -> Box<dyn ScalarPolicy> + 'a;

/// The scalar-family analogue of [`lower_bound_regret_harness`].
pub fn scalar_regret_harness(
    factory: &ScalarFactory<'_>,
    beta: f64,
    horizons: &[usize],
    trials: usize,
    master_seed: u64,
) -> Result<HarnessReport> {
    check_trials(trials)?;
    let mut rows = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let pair = make_scalar_pair(beta, t)?;
        let comparator_costs: Vec<f64> = pair
            .iter()
            .map(|sys| {
                let c0 = sys.rollout(&mut ScalarLinear(1.0));
                let c1 = sys.rollout(&mut ScalarLinear(0.0));
                c0.min(c1)
            })
            .collect();
        let mut rng = seed::stream(master_seed, &format!("lowerbound-scalar-branch-{t}"));
        let mut samples = Vec::with_capacity(trials);
        for _ in 0..trials {
            let b = usize::from(rng.gen_bool(0.5));
            let mut ctrl = factory(&pair[b]);
            samples.push((pair[b].rollout(ctrl.as_mut()), comparator_costs[b]));
        }
        rows.push(summarise(t, &samples));
    }
    Ok(HarnessReport::from_rows(rows))
}

/// Plays a fixed gain matrix; used to model a controller that knows `b`.
#[derive(Debug, Clone)]
pub struct GainPolicy(pub ScaledStochasticMatrix);

impl Policy for GainPolicy {
    fn name(&self) -> String {
        "gain".into()
    }

    fn act(&mut self, _t: usize, x: &Dist) -> Result<DVector<f64>> {
        Ok(self.0.entries() * x.values())
    }
}
