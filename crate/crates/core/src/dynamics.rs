//! Simplex dynamical systems: the linear update
//! `x_{t+1} = (1 − γ_t)·[(1 − ‖u_t‖₁)·A·x_t + B·u_t] + γ_t·w_t`,
//! its nonlinear generalisation with a known map `f(x, u)` in place of the
//! bracket, rollouts under arbitrary policies, perturbation recovery and
//! count-based ingestion.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::simplex::{validate_vector, ControlSet, Dist, ScaledDist, ScaledStochasticMatrix, StochasticMatrix, TOL};

pub type TransitionFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type CostFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;

/// The noiseless part of the update.
#[derive(Clone)]
pub enum Transition {
    /// `(1 − Σu)·A·x + B·u`. `A` is `d × d`, `B` is `d × k` for `k`-dimensional controls.
    Linear { a: StochasticMatrix, b: StochasticMatrix },
    /// Known map `f(x, u)`.
    General {
        f: TransitionFn,
        state_dim: usize,
        control_dim: usize,
    },
}

impl fmt::Debug for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::Linear { a, b } => f
                .debug_struct("Linear")
                .field("a", a.entries())
                .field("b", b.entries())
                .finish(),
            Transition::General {
                state_dim, control_dim, ..
            } => write!(f, "General({state_dim} -> {control_dim})"),
        }
    }
}

impl Transition {
    pub fn linear(a: StochasticMatrix, b: StochasticMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        if b.nrows() != a.nrows() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: b.nrows(),
            });
        }
        Ok(Transition::Linear { a, b })
    }

    pub fn general<F>(state_dim: usize, control_dim: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Transition::General {
            f: Arc::new(f),
            state_dim,
            control_dim,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Transition::Linear { a, .. } => a.nrows(),
            Transition::General { state_dim, .. } => *state_dim,
        }
    }

    pub fn control_dim(&self) -> usize {
        match self {
            Transition::Linear { b, .. } => b.ncols(),
            Transition::General { control_dim, .. } => *control_dim,
        }
    }

    /// Evaluates the bracket. Accepts any real `x`, `u` (counterfactual rollouts
    /// evaluate it at slightly infeasible parameters); control strength is the
    /// signed sum of `u`, which equals `‖u‖₁` on feasible controls.
    pub fn bracket(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        match self {
            Transition::Linear { a, b } => a.entries() * x * (1.0 - u.sum()) + b.entries() * u,
            Transition::General { f, .. } => f(x, u),
        }
    }
}

/// A per-round cost `c_t(x, u)`.
#[derive(Clone)]
pub struct Cost(CostFn);

impl Cost {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Cost(Arc::new(f))
    }

    pub fn zero() -> Self {
        Cost::new(|_, _| 0.0)
    }

    pub fn eval(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (self.0)(x, u)
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Cost(..)")
    }
}

/// A controlled simplex system with its noise and cost schedules.
///
/// Schedules are indexed from round 1: `gammas[0]` is `γ_1`. A linear
/// [`Transition`] makes this a simplex LDS; a general one is the nonlinear
/// extension.
#[derive(Debug, Clone)]
pub struct System {
    pub transition: Transition,
    pub control_set: ControlSet,
    pub x1: Dist,
    pub gammas: Vec<f64>,
    pub noises: Vec<Dist>,
    pub costs: Vec<Cost>,
    /// Lipschitz constant of the costs, supplied by the caller.
    pub lipschitz: f64,
}

impl System {
    /// A system with empty schedules; fill them with the `with_*` builders.
    pub fn new(transition: Transition, control_set: ControlSet, x1: Dist) -> Result<Self> {
        if x1.dim() != transition.state_dim() {
            return Err(Error::Dimension {
                expected: transition.state_dim(),
                got: x1.dim(),
            });
        }
        Ok(System {
            transition,
            control_set,
            x1,
            gammas: Vec::new(),
            noises: Vec::new(),
            costs: Vec::new(),
            lipschitz: 1.0,
        })
    }

    pub fn simplex_lds(a: StochasticMatrix, b: StochasticMatrix, control_set: ControlSet, x1: Dist) -> Result<Self> {
        Self::new(Transition::linear(a, b)?, control_set, x1)
    }

    pub fn general(transition: Transition, control_set: ControlSet, x1: Dist) -> Result<Self> {
        Self::new(transition, control_set, x1)
    }

    /// `γ_t = 0` for `t = 1..=horizon`.
    pub fn noiseless(mut self, horizon: usize) -> Self {
        self.gammas = vec![0.0; horizon];
        self.noises = vec![self.x1.clone(); horizon];
        self
    }

    pub fn with_noise(mut self, gammas: Vec<f64>, noises: Vec<Dist>) -> Result<Self> {
        if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::Parameter(format!("gamma {g} outside [0, 1]")));
        }
        if let Some(w) = noises.iter().find(|w| w.dim() != self.state_dim()) {
            return Err(Error::Dimension {
                expected: self.state_dim(),
                got: w.dim(),
            });
        }
        self.gammas = gammas;
        self.noises = noises;
        Ok(self)
    }

    pub fn with_costs(mut self, costs: Vec<Cost>) -> Self {
        self.costs = costs;
        self
    }

    /// The same cost at every round.
    pub fn with_constant_cost(self, cost: Cost, horizon: usize) -> Self {
        self.with_costs(vec![cost; horizon])
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = lipschitz;
        self
    }

    pub fn state_dim(&self) -> usize {
        self.transition.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.transition.control_dim()
    }

    pub fn ensure_horizon(&self, horizon: usize) -> Result<()> {
        let have = self.gammas.len().min(self.noises.len()).min(self.costs.len());
        if have < horizon {
            return Err(Error::ScheduleTooShort { needed: horizon, have });
        }
        Ok(())
    }

    /// Applies round `t` (1-based) of the schedule.
    pub fn step(&self, t: usize, x: &Dist, u: &ScaledDist) -> Result<Dist> {
        step_general(&self.transition, x, u, self.gammas[t - 1], &self.noises[t - 1], &self.control_set)
    }
}

/// One step of a simplex LDS.
pub fn step(
    x: &Dist,
    u: &ScaledDist,
    gamma: f64,
    w: &Dist,
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    control_set: &ControlSet,
) -> Result<Dist> {
    let transition = Transition::Linear {
        a: a.clone(),
        b: b.clone(),
    };
    step_general(&transition, x, u, gamma, w, control_set)
}

/// One step of `x_{t+1} = (1 − γ)·f(x, u) + γ·w`.
pub fn step_general(
    transition: &Transition,
    x: &Dist,
    u: &ScaledDist,
    gamma: f64,
    w: &Dist,
    control_set: &ControlSet,
) -> Result<Dist> {
    control_set.check(u.as_slice())?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Parameter(format!("gamma {gamma} outside [0, 1]")));
    }
    let next = transition.bracket(x.values(), u.values()) * (1.0 - gamma) + w.values() * gamma;
    Dist::new(next)
}

/// Solves the update for `w_t` given the observed `x_{t+1}` and `γ_t`.
/// Returns the zero vector when `γ_t = 0`.
pub fn recover_perturbation(
    x: &Dist,
    u: &DVector<f64>,
    x_next: &Dist,
    gamma: f64,
    transition: &Transition,
) -> Result<DVector<f64>> {
    if gamma == 0.0 {
        return Ok(DVector::zeros(x.dim()));
    }
    let bracket = transition.bracket(x.values(), u);
    let w = (x_next.values() - bracket * (1.0 - gamma)) / gamma;
    validate_vector(w.as_slice(), 1.0, TOL).map_err(Error::InvalidObservation)?;
    Ok(Dist::new(w).map_err(|e| match e {
        Error::Invalid(v) => Error::InvalidObservation(v),
        other => other,
    })?
    .into_inner())
}

/// One recorded round.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub t: usize,
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub gamma: f64,
    pub w: DVector<f64>,
    pub cost: f64,
    pub cumulative_cost: f64,
}

/// Rounds `1..=T` of a rollout plus the state after the last round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub final_state: Option<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_cost(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative_cost)
    }

    pub fn push(&mut self, x: DVector<f64>, u: DVector<f64>, gamma: f64, w: DVector<f64>, cost: f64) {
        let cumulative_cost = self.total_cost() + cost;
        self.steps.push(TrajectoryStep {
            t: self.steps.len() + 1,
            x,
            u,
            gamma,
            w,
            cost,
            cumulative_cost,
        });
    }

    pub fn states(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.steps.iter().map(|s| &s.x)
    }

    /// CSV with header `t,x_1..x_d,u_1..u_k,gamma,cost,cum_cost`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let (d, k) = self
            .steps
            .first()
            .map_or((0, 0), |s| (s.x.len(), s.u.len()));
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("x_{i}")));
        header.extend((1..=k).map(|i| format!("u_{i}")));
        header.extend(["gamma", "cost", "cum_cost"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for s in &self.steps {
            let mut row = vec![s.t.to_string()];
            row.extend(s.x.iter().map(|v| fmt_f64(*v)));
            row.extend(s.u.iter().map(|v| fmt_f64(*v)));
            row.extend([s.gamma, s.cost, s.cumulative_cost].map(fmt_f64));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Full double precision: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// What a policy learns after playing round `t`.
pub struct Observation<'a> {
    pub t: usize,
    pub x: &'a Dist,
    pub u: &'a DVector<f64>,
    pub cost: &'a Cost,
    pub incurred: f64,
    pub x_next: &'a Dist,
    pub gamma: f64,
}

/// A causal controller: picks `u_t` from what it has seen, then observes the
/// cost function, the next state and `γ_t`.
pub trait Policy {
    fn name(&self) -> String;

    fn act(&mut self, t: usize, x: &Dist) -> Result<DVector<f64>>;

    fn observe(&mut self, _obs: &Observation<'_>) -> Result<()> {
        Ok(())
    }
}

/// `u = K·x`.
#[derive(Debug, Clone)]
pub struct LinearPolicy(pub ScaledStochasticMatrix);

impl Policy for LinearPolicy {
    fn name(&self) -> String {
        "linear".into()
    }

    fn act(&mut self, _t: usize, x: &Dist) -> Result<DVector<f64>> {
        Ok(self.0.entries() * x.values())
    }
}

/// Runs `policy` on `system` for `horizon` rounds.
pub fn simulate(system: &System, policy: &mut dyn Policy, horizon: usize) -> Result<Trajectory> {
    system.ensure_horizon(horizon)?;
    let mut traj = Trajectory::default();
    let mut x = system.x1.clone();
    for t in 1..=horizon {
        let u_raw = policy.act(t, &x)?;
        if u_raw.len() != system.control_dim() {
            return Err(Error::Dimension {
                expected: system.control_dim(),
                got: u_raw.len(),
            });
        }
        system.control_set.check(u_raw.as_slice())?;
        let u = ScaledDist::new(u_raw)?;
        let cost_fn = &system.costs[t - 1];
        let cost = cost_fn.eval(x.values(), u.values());
        let x_next = system.step(t, &x, &u)?;
        let gamma = system.gammas[t - 1];
        policy.observe(&Observation {
            t,
            x: &x,
            u: u.values(),
            cost: cost_fn,
            incurred: cost,
            x_next: &x_next,
            gamma,
        })?;
        let w = if gamma > 0.0 {
            system.noises[t - 1].values().clone()
        } else {
            DVector::zeros(system.state_dim())
        };
        traj.push(x.into_inner(), u.values().clone(), gamma, w, cost);
        x = x_next;
    }
    traj.final_state = Some(x.into_inner());
    Ok(traj)
}

/// Rollout of the time-invariant policy `u_t = K·x_t`.
pub fn rollout_linear_policy(system: &System, k: &ScaledStochasticMatrix, horizon: usize) -> Result<Trajectory> {
    if !system.control_set.contains_strength(k.scale()) {
        return Err(Error::InfeasibleControl {
            strength: k.scale(),
            lb: system.control_set.alpha_lb,
            ub: system.control_set.alpha_ub,
        });
    }
    simulate(system, &mut LinearPolicy(k.clone()), horizon)
}

/// A round reconstructed from population counts.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedStep {
    pub x: Dist,
    pub gamma: f64,
    pub w: DVector<f64>,
}

/// Turns count vectors `x̄_1..x̄_{n+1}` and controls `u_1..u_n` into
/// `(x_t, γ_t, w_t)` for `t = 1..=n`, with `γ_t = (N_{t+1} − N_t)/N_{t+1}` and
/// `w_t` the composition of the added individuals.
pub fn ingest_counts(
    counts: &[DVector<f64>],
    controls: &[DVector<f64>],
    transition: &Transition,
) -> Result<Vec<IngestedStep>> {
    if counts.len() != controls.len() + 1 {
        return Err(Error::Dimension {
            expected: controls.len() + 1,
            got: counts.len(),
        });
    }
    let mut out = Vec::with_capacity(controls.len());
    for (t, u) in controls.iter().enumerate() {
        let (now, next) = (&counts[t], &counts[t + 1]);
        let (n_now, n_next) = (now.sum(), next.sum());
        if !(n_now > 0.0) || now.iter().any(|&c| c < 0.0) || next.iter().any(|&c| c < 0.0) {
            return Err(Error::Parameter(format!("invalid count vector at round {}", t + 1)));
        }
        let added = n_next - n_now;
        if added < -TOL * n_now.max(1.0) {
            return Err(Error::NegativeAddition {
                before: n_now,
                after: n_next,
            });
        }
        let x = Dist::new(now / n_now)?;
        // additions at rounding level are treated as none
        let (gamma, w) = if added > TOL * n_now.max(1.0) {
            let w = (next - transition.bracket(x.values(), u) * n_now) / added;
            validate_vector(w.as_slice(), 1.0, TOL).map_err(Error::InvalidObservation)?;
            (added / n_next, Dist::new(w)?.into_inner())
        } else {
            (0.0, DVector::zeros(x.dim()))
        };
        out.push(IngestedStep { x, gamma, w });
    }
    Ok(out)
}

/// Cumulative cost of `traj` minus the best comparator's.
pub fn regret(traj: &Trajectory, comparators: &[Trajectory]) -> f64 {
    let best = comparators
        .iter()
        .map(Trajectory::total_cost)
        .fold(f64::INFINITY, f64::min);
    traj.total_cost() - best
}
