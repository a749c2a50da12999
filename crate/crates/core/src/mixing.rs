//! Stationary distributions, distance to stationarity and mixing times of
//! column-stochastic matrices, plus the closed-loop matrix of a linear policy.
//!
//! All suprema over the simplex are evaluated at its vertices: the maps
//! `p ↦ ‖Xᵗp − π‖₁` and `(p, q) ↦ ‖Xᵗ(p − q)‖₁` are convex, so the maximum over
//! `Δ^d` is attained at some `e_j` (or pair `e_j, e_k`).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::simplex::{l1_norm, one_one_norm, Dist, ScaledStochasticMatrix, StochasticMatrix};

/// Column-spread tolerance for the uniqueness certificate.
pub const STATIONARY_TOL: f64 = 1e-12;
/// Maximum number of squarings when searching for the limit of `Xᵗ`.
pub const MAX_SQUARINGS: usize = 64;

/// A mixing time; `Infinite` when the threshold is never reached (or the chain
/// has no unique stationary distribution).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MixingTime {
    Finite(usize),
    Infinite,
}

impl MixingTime {
    pub fn at_most(self, tau: f64) -> bool {
        match self {
            MixingTime::Finite(t) => t as f64 <= tau,
            MixingTime::Infinite => false,
        }
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            MixingTime::Finite(t) => Some(t),
            MixingTime::Infinite => None,
        }
    }
}

impl std::fmt::Display for MixingTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MixingTime::Finite(t) => write!(f, "{t}"),
            MixingTime::Infinite => write!(f, "inf"),
        }
    }
}

/// Stationary distribution, `D_X(t)` and `D̄_X(t)` for `t = 0..=t_max`, and `t_mix(X)`.
#[derive(Debug, Clone)]
pub struct MixingProfile {
    pub stationary: Dist,
    pub d_values: Vec<f64>,
    pub dbar_values: Vec<f64>,
    pub t_mix_quarter: MixingTime,
}

fn column_spread(p: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..p.ncols() {
        for k in (j + 1)..p.ncols() {
            let diff = p.column(j) - p.column(k);
            worst = worst.max(diff.iter().map(|x| x.abs()).sum());
        }
    }
    worst
}

fn renormalize_columns(p: &mut DMatrix<f64>) {
    for mut c in p.column_iter_mut() {
        c.iter_mut().for_each(|x| *x = x.max(0.0));
        let s = c.sum();
        if s > 0.0 {
            c /= s;
        }
    }
}

/// Finds the unique stationary distribution by repeated squaring, certifying
/// uniqueness once all columns of `X^(2^k)` agree within `tol`.
pub fn stationary_distribution(x: &StochasticMatrix, tol: f64, max_iters: usize) -> Result<Dist> {
    if x.nrows() != x.ncols() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            got: x.ncols(),
        });
    }
    let mut p = x.entries().clone();
    for _ in 0..=max_iters {
        if column_spread(&p) <= tol {
            let d = p.ncols();
            let mut pi: DVector<f64> = p.column_sum() / d as f64;
            let s = pi.sum();
            pi /= s;
            let residual = l1_norm((x.entries() * &pi - &pi).as_slice());
            if residual <= tol.max(1e-12) * 10.0 {
                return Dist::new(pi);
            }
            return Err(Error::NoUniqueStationary);
        }
        p = &p * &p;
        renormalize_columns(&mut p);
    }
    Err(Error::NoUniqueStationary)
}

fn stationary(x: &StochasticMatrix) -> Result<Dist> {
    stationary_distribution(x, STATIONARY_TOL, MAX_SQUARINGS)
}

/// `Xᵗ` by repeated squaring.
pub fn matrix_power(x: &DMatrix<f64>, t: usize) -> DMatrix<f64> {
    let mut result = DMatrix::identity(x.nrows(), x.ncols());
    let mut base = x.clone();
    let mut e = t;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    result
}

fn d_of_power(p: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    p.column_iter()
        .map(|c| c.iter().zip(pi.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `D_X(t) = sup_p ‖Xᵗp − π‖₁`.
pub fn dist_to_stationarity(x: &StochasticMatrix, t: usize) -> Result<f64> {
    let pi = stationary(x)?;
    Ok(d_of_power(&matrix_power(x.entries(), t), pi.values()))
}

/// `D̄_X(t) = sup_{p,q} ‖Xᵗ(p − q)‖₁`.
pub fn dbar(x: &StochasticMatrix, t: usize) -> Result<f64> {
    stationary(x)?;
    Ok(column_spread(&matrix_power(x.entries(), t)))
}

/// Smallest `t ≤ t_cap` with `D_X(t) ≤ eps`.
pub fn mixing_time(x: &StochasticMatrix, eps: f64, t_cap: usize) -> MixingTime {
    let Ok(pi) = stationary(x) else {
        return MixingTime::Infinite;
    };
    let mut p = DMatrix::identity(x.nrows(), x.ncols());
    for t in 0..=t_cap {
        if d_of_power(&p, pi.values()) <= eps {
            return MixingTime::Finite(t);
        }
        p = x.entries() * p;
    }
    MixingTime::Infinite
}

/// `t_mix(X) = t_mix(X, 1/4)` with the default search cap.
pub fn t_mix(x: &StochasticMatrix) -> MixingTime {
    mixing_time(x, 0.25, 1000)
}

pub fn mixing_profile(x: &StochasticMatrix, t_max: usize) -> Result<MixingProfile> {
    let pi = stationary(x)?;
    let mut p = DMatrix::identity(x.nrows(), x.ncols());
    let mut d_values = Vec::with_capacity(t_max + 1);
    let mut dbar_values = Vec::with_capacity(t_max + 1);
    for _ in 0..=t_max {
        d_values.push(d_of_power(&p, pi.values()));
        dbar_values.push(column_spread(&p));
        p = x.entries() * p;
    }
    let t_mix_quarter = match d_values.iter().position(|&d| d <= 0.25) {
        Some(t) => MixingTime::Finite(t),
        None => mixing_time(x, 0.25, t_max.max(1000)),
    };
    Ok(MixingProfile {
        stationary: pi,
        d_values,
        dbar_values,
        t_mix_quarter,
    })
}

/// `C_r{K} = (1 − ‖K‖₁→₁)·A + B·K`, the closed-loop transition under `u = Kx`.
pub fn closed_loop(a: &StochasticMatrix, b: &StochasticMatrix, k: &ScaledStochasticMatrix) -> Result<StochasticMatrix> {
    let strength = one_one_norm(k.entries());
    if b.ncols() != k.entries().nrows() || k.entries().ncols() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Dimension {
            expected: a.ncols(),
            got: k.entries().ncols(),
        });
    }
    StochasticMatrix::new(a.entries() * (1.0 - strength) + b.entries() * k.entries())
}

/// Whether `x ↦ Kx` τ-mixes the system with transitions `A`, `B`.
pub fn tau_mixes(a: &StochasticMatrix, b: &StochasticMatrix, k: &ScaledStochasticMatrix, tau: f64) -> Result<bool> {
    if !(tau > 0.0) {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    let c = closed_loop(a, b, k)?;
    let cap = (4.0 * tau).ceil() as usize + 1;
    Ok(mixing_time(&c, 0.25, cap).at_most(tau))
}
