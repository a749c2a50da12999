//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use simplex_control::optimizer::{ftrl_objective, DacDomain, DacParams, GradAccumulator};
use simplex_control::simplex::{Dist, StochasticMatrix};

pub fn random_dist(d: usize, rng: &mut ChaCha8Rng) -> Dist {
    let v = DVector::from_fn(d, |_, _| -(1.0 - rng.gen::<f64>()).ln());
    let s = v.sum();
    Dist::new(v / s).unwrap()
}

/// Random column-stochastic matrix; about a third of the entries are zeroed
/// (keeping the diagonal) so sparse and slow chains show up too.
pub fn random_stochastic(r: usize, c: usize, rng: &mut ChaCha8Rng) -> StochasticMatrix {
    let mut m = DMatrix::from_fn(r, c, |i, j| {
        if i != j % r && rng.gen_bool(0.33) {
            0.0
        } else {
            rng.gen::<f64>() + 1e-3
        }
    });
    for mut col in m.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    StochasticMatrix::new(m).unwrap()
}

/// `γ_s` under the conventions `γ_0 = 1`, `γ_s = 0` for `s < 0`; `gammas[s-1] = γ_s`.
pub fn gamma_at(gammas: &[f64], s: i64) -> f64 {
    match s {
        s if s < 0 => 0.0,
        0 => 1.0,
        s => gammas[s as usize - 1],
    }
}

/// `w_0 = x_1`, `w_s = 0` for `s < 0`.
pub fn w_at(ws: &[DVector<f64>], x1: &DVector<f64>, s: i64) -> DVector<f64> {
    match s {
        s if s < 0 => DVector::zeros(x1.len()),
        0 => x1.clone(),
        s => ws[s as usize - 1].clone(),
    }
}

/// `λ_{t,i}` straight from the product definition, any `i ≥ 1`.
pub fn lambda(gammas: &[f64], t: i64, i: i64) -> f64 {
    let mut v = gamma_at(gammas, t - i);
    for j in 1..i {
        v *= 1.0 - gamma_at(gammas, t - j);
    }
    v
}

/// `λ̄_{t,i} = ∏_{j=1..i}(1 − γ_{t−j})`.
pub fn lambda_bar(gammas: &[f64], t: i64, i: i64) -> f64 {
    (1..=i).map(|j| 1.0 - gamma_at(gammas, t - j)).product()
}

/// `λ_{t,0} = 1 − Σ_{i=1..H} λ_{t,i}`.
pub fn lambda0(gammas: &[f64], t: i64, h: usize) -> f64 {
    1.0 - (1..=h as i64).map(|i| lambda(gammas, t, i)).sum::<f64>()
}

/// The disturbance-action control of round `t`, from the sum definition.
pub fn dac_oracle(p: &DVector<f64>, m: &[DMatrix<f64>], gammas: &[f64], ws: &[DVector<f64>], x1: &DVector<f64>, t: i64) -> DVector<f64> {
    let h = m.len();
    let mut u = p * lambda0(gammas, t, h);
    for (j, mj) in m.iter().enumerate() {
        let j = j as i64 + 1;
        u += mj * w_at(ws, x1, t - j) * lambda(gammas, t, j);
    }
    u
}

/// Closed-form counterfactual state of round `t` for a simplex LDS:
/// `x_t = Σ_{i=1..t} (1−a)^{i−1} A^{i−1} (λ_{t−i,0} λ̄_{t,i} B p
///        + B Σ_j λ_{t,i+j} M^{[j]} w_{t−i−j} + λ_{t,i} w_{t−i})`.
pub fn closed_form_state(
    a_mat: &DMatrix<f64>,
    b_mat: &DMatrix<f64>,
    p: &DVector<f64>,
    m: &[DMatrix<f64>],
    gammas: &[f64],
    ws: &[DVector<f64>],
    x1: &DVector<f64>,
    t: i64,
) -> DVector<f64> {
    let h = m.len();
    let scale = p.sum();
    let mut x = DVector::zeros(x1.len());
    let mut a_pow = DMatrix::identity(x1.len(), x1.len());
    for i in 1..=t {
        let mut inner = b_mat * p * (lambda0(gammas, t - i, h) * lambda_bar(gammas, t, i));
        for (j, mj) in m.iter().enumerate() {
            let j = j as i64 + 1;
            inner += b_mat * (mj * w_at(ws, x1, t - i - j)) * lambda(gammas, t, i + j);
        }
        inner += w_at(ws, x1, t - i) * lambda(gammas, t, i);
        x += &a_pow * inner * (1.0 - scale).powi(i as i32 - 1);
        a_pow = a_mat * a_pow;
    }
    x
}

/// FTRL minimiser by golden-section search over the scale, each block at
/// `a·softmax(−ηG_b)` for the candidate `a`.
pub fn golden_section_ftrl(acc: &GradAccumulator, eta: f64, domain: &DacDomain) -> DacParams {
    let g = acc.total();
    let mut soft = DVector::zeros(g.len());
    for (b, block) in g.as_slice().chunks(domain.d_u).enumerate() {
        let mx = block.iter().map(|x| -eta * x).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = block.iter().map(|x| (-eta * x - mx).exp()).sum();
        for (j, x) in block.iter().enumerate() {
            soft[b * domain.d_u + j] = (-eta * x - mx).exp() / z;
        }
    }
    let at = |a: f64| DacParams::from_flat(*domain, &soft * a, a).unwrap();
    let f = |a: f64| ftrl_objective(acc, eta, &at(a));
    let (mut lo, mut hi) = (domain.a0, domain.a_ub);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        let (c, d) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if f(c) <= f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    at(0.5 * (lo + hi))
}

/// `L·√(32·dH·ln d·T)`.
pub fn lazy_md_regret_bound(l: f64, d: usize, h: usize, horizon: usize) -> f64 {
    l * (32.0 * (d * h) as f64 * (d as f64).ln() * horizon as f64).sqrt()
}

/// `√(2dH ln d / T)`.
pub fn lazy_md_movement_bound(d: usize, h: usize, horizon: usize) -> f64 {
    (2.0 * (d * h) as f64 * (d as f64).ln() / horizon as f64).sqrt()
}

/// Best fixed point of the domain against a summed linear loss: every block
/// on its smallest coordinate, at whichever end of the scale range is better.
pub fn best_fixed_linear(total: &DVector<f64>, domain: &DacDomain) -> f64 {
    let per_unit: f64 = total
        .as_slice()
        .chunks(domain.d_u)
        .map(|b| b.iter().cloned().fold(f64::INFINITY, f64::min))
        .sum();
    (domain.a0 * per_unit).min(domain.a_ub * per_unit)
}

/// Central-difference derivative of a scalar function.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Random ergodic chain: a sparse random chain blended with a little of the
/// uniform chain.
pub fn random_mixing(d: usize, rng: &mut ChaCha8Rng) -> StochasticMatrix {
    let s = random_stochastic(d, d, rng);
    let eps = rng.gen_range(0.01..0.2);
    StochasticMatrix::new(s.entries() * (1.0 - eps) + DMatrix::from_element(d, d, eps / d as f64)).unwrap()
}
