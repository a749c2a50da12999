//! Baseline controllers: constant controls and one-step best response.

use nalgebra::DVector;

use crate::dynamics::{Cost, Observation, Policy, Transition};
use crate::error::{Error, Result};
use crate::simplex::{ControlSet, Dist};

/// Emits the same control every round.
#[derive(Debug, Clone)]
pub struct ConstantPolicy {
    name: String,
    u: DVector<f64>,
}

impl ConstantPolicy {
    pub fn new(name: &str, u: &[f64], control_set: &ControlSet) -> Result<Self> {
        control_set.check(u)?;
        Ok(ConstantPolicy {
            name: name.to_string(),
            u: DVector::from_column_slice(u),
        })
    }
}

impl Policy for ConstantPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn act(&mut self, _t: usize, _x: &Dist) -> Result<DVector<f64>> {
        Ok(self.u.clone())
    }
}

/// Grid points of `Δ^k` with spacing `1/n` in lexicographic order, as integer numerators.
fn lattice(k: usize, n: usize, lo: &[usize], hi: &[usize], out: &mut Vec<Vec<usize>>) {
    fn rec(j: usize, left: usize, lo: &[usize], hi: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let k = lo.len();
        if j == k - 1 {
            if left >= lo[j] && left <= hi[j] {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for m in lo[j]..=hi[j].min(left) {
            cur.push(m);
            rec(j + 1, left - m, lo, hi, cur, out);
            cur.pop();
        }
    }
    debug_assert_eq!(lo.len(), k);
    rec(0, n, lo, hi, &mut Vec::with_capacity(k), out);
}

/// Minimiser of `objective` over the simplex lattice of spacing `1/n`,
/// refined once at spacing `1/(10n)` within `1/n` of the incumbent.
/// Ties go to the lexicographically smallest point.
pub fn lattice_argmin(k: usize, n: usize, objective: impl Fn(&DVector<f64>) -> f64) -> DVector<f64> {
    let mut best: Option<(f64, DVector<f64>)> = None;
    let consider = |u: DVector<f64>, best: &mut Option<(f64, DVector<f64>)>| {
        let v = objective(&u);
        let better = match best {
            None => true,
            Some((bv, bu)) => v < *bv || (v == *bv && lex_less(&u, bu)),
        };
        if better {
            *best = Some((v, u));
        }
    };
    let mut pts = Vec::new();
    lattice(k, n, &vec![0; k], &vec![n; k], &mut pts);
    for m in &pts {
        consider(DVector::from_iterator(k, m.iter().map(|&c| c as f64 / n as f64)), &mut best);
    }
    let (_, inc) = best.clone().expect("lattice is nonempty");
    let fine = 10 * n;
    let centre: Vec<usize> = inc.iter().map(|&c| (c * fine as f64).round() as usize).collect();
    let lo: Vec<usize> = centre.iter().map(|&c| c.saturating_sub(10)).collect();
    let hi: Vec<usize> = centre.iter().map(|&c| (c + 10).min(fine)).collect();
    pts.clear();
    lattice(k, fine, &lo, &hi, &mut pts);
    for m in &pts {
        consider(DVector::from_iterator(k, m.iter().map(|&c| c as f64 / fine as f64)), &mut best);
    }
    best.expect("lattice is nonempty").1
}

fn lex_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// `argmin_u c(f(x, u), u)` over the lattice.
pub fn best_response_control(x: &Dist, f: &Transition, prev_cost: &Cost, grid_resolution: usize) -> Dist {
    let u = lattice_argmin(f.control_dim(), grid_resolution, |u| {
        let next = f.bracket(x.values(), u);
        prev_cost.eval(&next, u)
    });
    Dist::new(u).expect("lattice points are distributions")
}

/// Greedy one-step controller against the previous round's cost. Plays the
/// uniform control before any cost has been seen.
#[derive(Debug, Clone)]
pub struct BestResponse {
    transition: Transition,
    grid_resolution: usize,
    prev_cost: Option<Cost>,
}

impl BestResponse {
    pub fn new(transition: Transition, grid_resolution: usize) -> Result<Self> {
        if grid_resolution == 0 {
            return Err(Error::Parameter("grid resolution must be positive".into()));
        }
        Ok(BestResponse {
            transition,
            grid_resolution,
            prev_cost: None,
        })
    }
}

impl Policy for BestResponse {
    fn name(&self) -> String {
        "best-response".into()
    }

    fn act(&mut self, _t: usize, x: &Dist) -> Result<DVector<f64>> {
        Ok(match &self.prev_cost {
            None => Dist::uniform(self.transition.control_dim()).into_inner(),
            Some(c) => best_response_control(x, &self.transition, c, self.grid_resolution).into_inner(),
        })
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        self.prev_cost = Some(obs.cost.clone());
        Ok(())
    }
}
