//! GPC-Simplex: disturbance-action control with λ-weighted perturbations,
//! counterfactual proxy losses and mirror-descent updates.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{fmt_f64, recover_perturbation, simulate, Cost, Observation, Policy, System, Trajectory, Transition};
use crate::error::{Error, Result};
use crate::mixing::{mixing_time, MixingTime};
use crate::optimizer::{DacDomain, DacParams, ExpWeights, LazyMd, StepSize};
use crate::simplex::{ControlSet, Dist};

/// Finite-difference step for proxy-loss gradients.
pub const FD_STEP: f64 = 1e-6;

/// `λ_{t,0..H}` and `λ̄_{t,1..H}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaWeights {
    pub lambda: Vec<f64>,
    pub lambda_bar: Vec<f64>,
}

impl LambdaWeights {
    pub fn h(&self) -> usize {
        self.lambda_bar.len()
    }
}

/// `recent[i − 1] = γ_{t−i}` for `i = 1..=H` (conventions already applied).
///
/// `λ_{t,i} = γ_{t−i}·∏_{j<i}(1 − γ_{t−j})`, `λ̄_{t,i} = ∏_{j≤i}(1 − γ_{t−j})`,
/// `λ_{t,0} = 1 − Σ_i λ_{t,i}`.
pub fn compute_lambdas(recent: &[f64], h: usize) -> LambdaWeights {
    assert!(recent.len() >= h, "need {h} recent gammas, got {}", recent.len());
    let mut lambda = vec![0.0; h + 1];
    let mut lambda_bar = vec![0.0; h];
    let mut survive = 1.0;
    for i in 1..=h {
        let g = recent[i - 1];
        lambda[i] = g * survive;
        survive *= 1.0 - g;
        lambda_bar[i - 1] = survive;
    }
    // telescopes to λ̄_{t,H}; the product form is never negative
    lambda[0] = survive;
    LambdaWeights { lambda, lambda_bar }
}

/// `a0 = max(α_lb, min(α_ub, 𝟙{τ_A > 4τ}/(96τ)))`.
pub fn choose_a0(alpha_lb: f64, alpha_ub: f64, tau: f64, tau_a: MixingTime) -> f64 {
    let slow = match tau_a {
        MixingTime::Finite(n) => n as f64 > 4.0 * tau,
        MixingTime::Infinite => true,
    };
    let ind = if slow { 1.0 / (96.0 * tau) } else { 0.0 };
    alpha_lb.max(alpha_ub.min(ind))
}

/// `τ·⌈log₂(2 L T³)⌉`.
pub fn theory_history_length(tau: f64, lipschitz: f64, horizon: usize) -> usize {
    let t = horizon.max(1) as f64;
    (tau * (2.0 * lipschitz * t.powi(3)).log2().ceil()).ceil().max(1.0) as usize
}

/// Everything observed so far: `γ_s`, `w_s` with `w_0 = x_1`, `γ_0 = 1` and
/// zeros before that, plus cached λ-weights per round.
#[derive(Debug, Clone)]
pub struct History {
    h: usize,
    gammas: Vec<f64>,
    ws: Vec<DVector<f64>>,
    lambdas: Vec<LambdaWeights>,
    zero: DVector<f64>,
}

impl History {
    pub fn new(x1: &Dist, h: usize) -> Self {
        let mut hist = History {
            h,
            gammas: vec![1.0],
            ws: vec![x1.values().clone()],
            lambdas: Vec::new(),
            zero: DVector::zeros(x1.dim()),
        };
        hist.push_lambdas();
        hist
    }

    fn push_lambdas(&mut self) {
        let t = self.gammas.len() as i64;
        let recent: Vec<f64> = (1..=self.h as i64).map(|i| self.gamma(t - i)).collect();
        self.lambdas.push(compute_lambdas(&recent, self.h));
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn x1(&self) -> &DVector<f64> {
        &self.ws[0]
    }

    /// Rounds with a recorded perturbation; the next round to play is `len() + 1`.
    pub fn len(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gamma(&self, s: i64) -> f64 {
        if s < 0 {
            0.0
        } else {
            self.gammas[s as usize]
        }
    }

    pub fn w(&self, s: i64) -> &DVector<f64> {
        if s < 0 {
            &self.zero
        } else {
            &self.ws[s as usize]
        }
    }

    /// λ-weights of round `t`, available once `γ_{t−1}` is recorded.
    pub fn lambdas(&self, t: usize) -> &LambdaWeights {
        &self.lambdas[t - 1]
    }

    /// Records `γ_t` and `w_t` for the next round `t`.
    pub fn push(&mut self, gamma: f64, w: DVector<f64>) {
        self.gammas.push(gamma);
        self.ws.push(w);
        self.push_lambdas();
    }
}

/// `u = λ_0·p + Σ_i λ_i·M^{[i]}·w_{t−i}` on flat (possibly ambient) parameters.
pub fn dac_control_flat(domain: &DacDomain, z: &[f64], lam: &LambdaWeights, history: &History, t: usize) -> DVector<f64> {
    let (d_u, d_x) = (domain.d_u, domain.d_x);
    let mut u = DVector::from_column_slice(&z[..d_u]) * lam.lambda[0];
    for i in 1..=domain.h {
        let li = lam.lambda[i];
        if li == 0.0 {
            continue;
        }
        let w = history.w(t as i64 - i as i64);
        let start = d_u + (i - 1) * d_u * d_x;
        for c in 0..d_x {
            let wc = li * w[c];
            if wc == 0.0 {
                continue;
            }
            let col = &z[start + c * d_u..start + (c + 1) * d_u];
            for r in 0..d_u {
                u[r] += wc * col[r];
            }
        }
    }
    u
}

/// `u_t` from feasible parameters; its mass equals the parameter scale.
pub fn dac_control(params: &DacParams, history: &History, t: usize) -> DVector<f64> {
    dac_control_flat(params.domain(), params.flat().as_slice(), history.lambdas(t), history, t)
}

/// `(x_t(z), u_t(z))`: replays rounds `1..t` under the DAC policy `z` through
/// the transition, using the recorded `γ_s` and `w_s`.
pub fn counterfactual_rollout(
    domain: &DacDomain,
    z: &[f64],
    transition: &Transition,
    history: &History,
    t: usize,
) -> (DVector<f64>, DVector<f64>) {
    let mut x = history.x1().clone();
    for s in 1..t {
        let u = dac_control_flat(domain, z, history.lambdas(s), history, s);
        let g = history.gamma(s as i64);
        let next = transition.bracket(&x, &u) * (1.0 - g);
        x = if g > 0.0 { next + history.w(s as i64) * g } else { next };
    }
    let u = dac_control_flat(domain, z, history.lambdas(t), history, t);
    (x, u)
}

/// `ℓ_t(z) = c_t(x_t(z), u_t(z))`.
pub fn proxy_loss(domain: &DacDomain, z: &[f64], transition: &Transition, cost: &Cost, history: &History, t: usize) -> f64 {
    let (x, u) = counterfactual_rollout(domain, z, transition, history, t);
    cost.eval(&x, &u)
}

/// How proxy-loss gradients are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMethod {
    /// Central differences on every flat coordinate.
    #[default]
    FiniteDifference,
    /// Forward sensitivities through a linear transition; differences only on the cost.
    ExactLinear,
}

/// Central finite-difference gradient of [`proxy_loss`] in the ambient space.
pub fn proxy_loss_gradient(
    domain: &DacDomain,
    z: &[f64],
    transition: &Transition,
    cost: &Cost,
    history: &History,
    t: usize,
) -> DVector<f64> {
    let mut zz = z.to_vec();
    DVector::from_fn(z.len(), |k, _| {
        let orig = zz[k];
        zz[k] = orig + FD_STEP;
        let hi = proxy_loss(domain, &zz, transition, cost, history, t);
        zz[k] = orig - FD_STEP;
        let lo = proxy_loss(domain, &zz, transition, cost, history, t);
        zz[k] = orig;
        (hi - lo) / (2.0 * FD_STEP)
    })
}

/// `∂u_s/∂z` as a dense `d_u × n` matrix.
fn control_jacobian(domain: &DacDomain, lam: &LambdaWeights, history: &History, s: usize) -> DMatrix<f64> {
    let (d_u, d_x) = (domain.d_u, domain.d_x);
    let mut j = DMatrix::zeros(d_u, domain.num_coords());
    for r in 0..d_u {
        j[(r, r)] = lam.lambda[0];
    }
    for i in 1..=domain.h {
        let li = lam.lambda[i];
        if li == 0.0 {
            continue;
        }
        let w = history.w(s as i64 - i as i64);
        let start = d_u + (i - 1) * d_u * d_x;
        for c in 0..d_x {
            for r in 0..d_u {
                j[(r, start + c * d_u + r)] = li * w[c];
            }
        }
    }
    j
}

fn cost_partials(cost: &Cost, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let mut xx = x.clone();
    let gx = DVector::from_fn(x.len(), |k, _| {
        let o = xx[k];
        xx[k] = o + FD_STEP;
        let hi = cost.eval(&xx, u);
        xx[k] = o - FD_STEP;
        let lo = cost.eval(&xx, u);
        xx[k] = o;
        (hi - lo) / (2.0 * FD_STEP)
    });
    let mut uu = u.clone();
    let gu = DVector::from_fn(u.len(), |k, _| {
        let o = uu[k];
        uu[k] = o + FD_STEP;
        let hi = cost.eval(x, &uu);
        uu[k] = o - FD_STEP;
        let lo = cost.eval(x, &uu);
        uu[k] = o;
        (hi - lo) / (2.0 * FD_STEP)
    });
    (gx, gu)
}

/// Gradient of [`proxy_loss`] for a linear transition by propagating
/// `∂x_s/∂z` forward; only the cost itself is differenced.
pub fn proxy_loss_gradient_exact(
    domain: &DacDomain,
    z: &[f64],
    transition: &Transition,
    cost: &Cost,
    history: &History,
    t: usize,
) -> Result<DVector<f64>> {
    let Transition::Linear { a, b } = transition else {
        return Err(Error::Parameter("exact gradients need a linear transition".into()));
    };
    let (a, b) = (a.entries(), b.entries());
    let n = domain.num_coords();
    let mut x = history.x1().clone();
    let mut sens = DMatrix::<f64>::zeros(x.len(), n);
    for s in 1..t {
        let lam = history.lambdas(s);
        let u = dac_control_flat(domain, z, lam, history, s);
        let j = control_jacobian(domain, lam, history, s);
        let g = history.gamma(s as i64);
        let strength = u.sum();
        let ax = a * &x;
        let mass_row = j.row_sum();
        sens = (a * &sens * (1.0 - strength) - &ax * &mass_row + b * &j) * (1.0 - g);
        x = (&ax * (1.0 - strength) + b * &u) * (1.0 - g);
        if g > 0.0 {
            x += history.w(s as i64) * g;
        }
    }
    let lam = history.lambdas(t);
    let u = dac_control_flat(domain, z, lam, history, t);
    let j = control_jacobian(domain, lam, history, t);
    let (gx, gu) = cost_partials(cost, &x, &u);
    Ok(sens.transpose() * gx + j.transpose() * gu)
}

/// Which mirror-descent variant updates the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    /// Entropic FTRL over the full scale range.
    #[default]
    LazyMd,
    /// Multiplicative weights at the fixed scale `α_ub`.
    ExpWeights,
}

#[derive(Debug, Clone)]
enum Engine {
    Lazy(LazyMd),
    Exp(ExpWeights),
}

impl Engine {
    fn params(&self) -> &DacParams {
        match self {
            Engine::Lazy(m) => m.params(),
            Engine::Exp(m) => m.params(),
        }
    }

    fn update(&mut self, g: &DVector<f64>) -> Result<()> {
        match self {
            Engine::Lazy(m) => m.update(g).map(|_| ()),
            Engine::Exp(m) => m.update(g).map(|_| ()),
        }
    }
}

/// Controller settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpcConfig {
    pub h: usize,
    pub step_size: StepSize,
    /// Mixing-time parameter of the comparator class.
    pub tau: f64,
    pub optimizer: OptimizerKind,
    pub gradient: GradientMethod,
}

impl Default for GpcConfig {
    fn default() -> Self {
        GpcConfig {
            h: 5,
            step_size: StepSize::Experiment,
            tau: 1.0,
            optimizer: OptimizerKind::LazyMd,
            gradient: GradientMethod::FiniteDifference,
        }
    }
}

/// One row of the per-round diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub t: usize,
    pub proxy_loss: f64,
    pub scale: f64,
    pub p: DVector<f64>,
}

/// Parameter domain for `system` under `config`.
pub fn gpc_domain(system: &System, config: &GpcConfig) -> Result<DacDomain> {
    let ControlSet { alpha_lb, alpha_ub } = system.control_set;
    let (a0, a_ub) = match config.optimizer {
        OptimizerKind::ExpWeights => (alpha_ub, alpha_ub),
        OptimizerKind::LazyMd => {
            let a0 = match &system.transition {
                Transition::Linear { a, .. } => {
                    let cap = 1000usize.max((10.0 * config.tau).ceil() as usize);
                    choose_a0(alpha_lb, alpha_ub, config.tau, mixing_time(a, 0.25, cap))
                }
                Transition::General { .. } => alpha_lb,
            };
            (a0, alpha_ub)
        }
    };
    DacDomain::new(system.state_dim(), system.control_dim(), config.h, a0, a_ub)
}

/// The online controller.
#[derive(Debug, Clone)]
pub struct GpcSimplex {
    domain: DacDomain,
    transition: Transition,
    gradient: GradientMethod,
    engine: Engine,
    history: Option<History>,
    diagnostics: Vec<Diagnostic>,
}

impl GpcSimplex {
    pub fn new(system: &System, horizon: usize, config: &GpcConfig) -> Result<Self> {
        if config.tau <= 0.0 {
            return Err(Error::Parameter(format!("tau must be positive, got {}", config.tau)));
        }
        if config.gradient == GradientMethod::ExactLinear && !matches!(system.transition, Transition::Linear { .. }) {
            return Err(Error::Parameter("exact gradients need a linear transition".into()));
        }
        let domain = gpc_domain(system, config)?;
        let eta = config
            .step_size
            .resolve(system.state_dim(), config.h, horizon, system.lipschitz, config.tau)?;
        let engine = match config.optimizer {
            OptimizerKind::LazyMd => Engine::Lazy(LazyMd::new(domain, eta)?),
            OptimizerKind::ExpWeights => Engine::Exp(ExpWeights::new(domain, eta)?),
        };
        Ok(GpcSimplex {
            domain,
            transition: system.transition.clone(),
            gradient: config.gradient,
            engine,
            history: None,
            diagnostics: Vec::new(),
        })
    }

    pub fn domain(&self) -> &DacDomain {
        &self.domain
    }

    pub fn params(&self) -> &DacParams {
        self.engine.params()
    }

    pub fn history(&self) -> Option<&History> {
        self.history.as_ref()
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }
}

impl Policy for GpcSimplex {
    fn name(&self) -> String {
        "gpc-simplex".into()
    }

    fn act(&mut self, t: usize, x: &Dist) -> Result<DVector<f64>> {
        let history = self.history.get_or_insert_with(|| History::new(x, self.domain.h));
        if history.len() + 1 != t {
            return Err(Error::Parameter(format!(
                "round {t} requested but history holds {} rounds",
                history.len()
            )));
        }
        Ok(dac_control(self.engine.params(), history, t))
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let t = obs.t;
        let history = self
            .history
            .as_mut()
            .ok_or_else(|| Error::Parameter("observe called before act".into()))?;
        let params = self.engine.params().clone();
        let z = params.flat().as_slice();
        let loss = proxy_loss(&self.domain, z, &self.transition, obs.cost, history, t);
        let grad = match self.gradient {
            GradientMethod::FiniteDifference => {
                proxy_loss_gradient(&self.domain, z, &self.transition, obs.cost, history, t)
            }
            GradientMethod::ExactLinear => {
                proxy_loss_gradient_exact(&self.domain, z, &self.transition, obs.cost, history, t)?
            }
        };
        let w = recover_perturbation(obs.x, obs.u, obs.x_next, obs.gamma, &self.transition)?;
        history.push(obs.gamma, w);
        self.diagnostics.push(Diagnostic {
            t,
            proxy_loss: loss,
            scale: params.scale(),
            p: params.p(),
        });
        self.engine.update(&grad)
    }
}

/// Trajectory plus per-round diagnostics.
#[derive(Debug, Clone)]
pub struct GpcRun {
    pub trajectory: Trajectory,
    pub diagnostics: Vec<Diagnostic>,
    pub domain: DacDomain,
}

impl GpcRun {
    /// CSV `t,proxy_loss,param_scale,p_1..p_d`.
    pub fn write_diagnostics_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["t".to_string(), "proxy_loss".into(), "param_scale".into()];
        header.extend((1..=self.domain.d_u).map(|i| format!("p_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for d in &self.diagnostics {
            let mut row = vec![d.t.to_string(), fmt_f64(d.proxy_loss), fmt_f64(d.scale)];
            row.extend(d.p.iter().map(|v| fmt_f64(*v)));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Runs GPC-Simplex on `system` for `horizon` rounds.
pub fn gpc_simplex_run(system: &System, horizon: usize, config: &GpcConfig) -> Result<GpcRun> {
    let mut ctrl = GpcSimplex::new(system, horizon.max(1), config)?;
    let trajectory = simulate(system, &mut ctrl, horizon)?;
    Ok(GpcRun {
        trajectory,
        diagnostics: ctrl.diagnostics,
        domain: ctrl.domain,
    })
}
