//! Entropic mirror descent over the disturbance-action parameter set
//! `⋃_{a ∈ [a0, a_ub]} Δ_a × (𝕊_a)^H`.
//!
//! A parameter point is split into *blocks*: `p` is one block and every
//! column of every `M^{[h]}` is another. All blocks share the scale `a`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::simplex::{sub_entropy_of, validate_columns, validate_vector, ScaledDist, ScaledStochasticMatrix};

/// Feasibility tolerance for returned parameters.
pub const PARAM_TOL: f64 = 1e-8;

/// Shape and scale range of the parameter set.
///
/// `p` has `d_u` entries; each `M^{[h]}` is `d_u × d_x` and maps
/// perturbations to controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DacDomain {
    pub d_x: usize,
    pub d_u: usize,
    pub h: usize,
    pub a0: f64,
    pub a_ub: f64,
}

impl DacDomain {
    pub fn new(d_x: usize, d_u: usize, h: usize, a0: f64, a_ub: f64) -> Result<Self> {
        if h == 0 {
            return Err(Error::Parameter("history length H must be at least 1".into()));
        }
        if d_x == 0 || d_u == 0 {
            return Err(Error::Parameter("dimensions must be positive".into()));
        }
        if !(0.0 <= a0 && a0 <= a_ub && a_ub <= 1.0) {
            return Err(Error::Parameter(format!("need 0 <= a0 <= a_ub <= 1, got [{a0}, {a_ub}]")));
        }
        Ok(DacDomain { d_x, d_u, h, a0, a_ub })
    }

    /// Square domain with `d_x = d_u = d`.
    pub fn square(d: usize, h: usize, a0: f64, a_ub: f64) -> Result<Self> {
        Self::new(d, d, h, a0, a_ub)
    }

    pub fn fixed_scale(&self) -> bool {
        self.a0 == self.a_ub
    }

    pub fn num_blocks(&self) -> usize {
        1 + self.h * self.d_x
    }

    /// Length of the flat coordinate vector: `d_u + H·d_u·d_x`.
    pub fn num_coords(&self) -> usize {
        self.d_u * self.num_blocks()
    }
}

/// A feasible parameter point `(p, M^{[1..H]})` stored as a flat vector:
/// `p` first, then each `M^{[h]}` in column-major order. Every contiguous run
/// of `d_u` coordinates is one block.
#[derive(Debug, Clone, PartialEq)]
pub struct DacParams {
    domain: DacDomain,
    flat: DVector<f64>,
    scale: f64,
}

impl DacParams {
    /// Validates `p` and the `M^{[h]}` against the domain.
    pub fn new(domain: DacDomain, p: &ScaledDist, m: &[ScaledStochasticMatrix]) -> Result<Self> {
        if p.dim() != domain.d_u {
            return Err(Error::Dimension {
                expected: domain.d_u,
                got: p.dim(),
            });
        }
        if m.len() != domain.h {
            return Err(Error::Dimension {
                expected: domain.h,
                got: m.len(),
            });
        }
        let mut flat = Vec::with_capacity(domain.num_coords());
        flat.extend_from_slice(p.as_slice());
        for mh in m {
            let e = mh.entries();
            if e.nrows() != domain.d_u || e.ncols() != domain.d_x {
                return Err(Error::Dimension {
                    expected: domain.d_u * domain.d_x,
                    got: e.nrows() * e.ncols(),
                });
            }
            flat.extend_from_slice(e.as_slice());
        }
        Self::from_flat(domain, DVector::from_vec(flat), p.scale())
    }

    /// Checks that every block is nonnegative and sums to `scale`.
    pub fn from_flat(domain: DacDomain, flat: DVector<f64>, scale: f64) -> Result<Self> {
        if flat.len() != domain.num_coords() {
            return Err(Error::Dimension {
                expected: domain.num_coords(),
                got: flat.len(),
            });
        }
        if scale < domain.a0 - PARAM_TOL || scale > domain.a_ub + PARAM_TOL {
            return Err(Error::Parameter(format!(
                "scale {scale} outside [{}, {}]",
                domain.a0, domain.a_ub
            )));
        }
        for block in flat.as_slice().chunks(domain.d_u) {
            validate_vector(block, scale, PARAM_TOL).map_err(Error::Invalid)?;
        }
        Ok(DacParams { domain, flat, scale })
    }

    /// Every block equal to `(scale/d_u)·𝟙`.
    pub fn uniform(domain: DacDomain, scale: f64) -> Result<Self> {
        let flat = DVector::from_element(domain.num_coords(), scale / domain.d_u as f64);
        Self::from_flat(domain, flat, scale)
    }

    pub fn domain(&self) -> &DacDomain {
        &self.domain
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn flat(&self) -> &DVector<f64> {
        &self.flat
    }

    pub fn p(&self) -> DVector<f64> {
        self.flat.rows(0, self.domain.d_u).into_owned()
    }

    /// `M^{[h]}` for `h = 1..=H`.
    pub fn m(&self, h: usize) -> DMatrix<f64> {
        let d = &self.domain;
        let n = d.d_u * d.d_x;
        let start = d.d_u + (h - 1) * n;
        DMatrix::from_column_slice(d.d_u, d.d_x, &self.flat.as_slice()[start..start + n])
    }

    pub fn p_scaled(&self) -> ScaledDist {
        ScaledDist::with_scale(self.p(), self.scale).expect("validated at construction")
    }

    pub fn m_scaled(&self, h: usize) -> ScaledStochasticMatrix {
        ScaledStochasticMatrix::with_scale(self.m(h), self.scale).expect("validated at construction")
    }

    pub fn blocks(&self) -> std::slice::Chunks<'_, f64> {
        self.flat.as_slice().chunks(self.domain.d_u)
    }

    /// True when every block passes validation at `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.scale >= self.domain.a0 - tol
            && self.scale <= self.domain.a_ub + tol
            && self.blocks().all(|b| validate_vector(b, self.scale, tol).is_ok())
            && (1..=self.domain.h).all(|h| validate_columns(&self.m(h), self.scale, tol).is_ok())
    }
}

/// `R(p, M) = −Ent(p) − Σ_h Σ_j Ent(M^{[h]}_{·,j})` with sub-distribution entropy per block.
pub fn regularizer(params: &DacParams) -> f64 {
    -params.blocks().map(sub_entropy_of).sum::<f64>()
}

/// The regularizer minimiser: every block uniform at scale
/// `clamp(d_u/(d_u + 1), a0, a_ub)`.
pub fn max_entropy_point(domain: &DacDomain) -> DacParams {
    let d = domain.d_u as f64;
    let a = (d / (d + 1.0)).clamp(domain.a0, domain.a_ub);
    DacParams::uniform(*domain, a).expect("uniform point is feasible")
}

/// Running sum of gradients in flat layout, with compensated summation.
#[derive(Debug, Clone, PartialEq)]
pub struct GradAccumulator {
    domain: DacDomain,
    sum: DVector<f64>,
    compensation: DVector<f64>,
    count: usize,
}

impl GradAccumulator {
    pub fn new(domain: DacDomain) -> Self {
        let n = domain.num_coords();
        GradAccumulator {
            domain,
            sum: DVector::zeros(n),
            compensation: DVector::zeros(n),
            count: 0,
        }
    }

    pub fn domain(&self) -> &DacDomain {
        &self.domain
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn total(&self) -> &DVector<f64> {
        &self.sum
    }

    pub fn g_p(&self) -> DVector<f64> {
        self.sum.rows(0, self.domain.d_u).into_owned()
    }

    pub fn g_m(&self, h: usize) -> DMatrix<f64> {
        let d = &self.domain;
        let n = d.d_u * d.d_x;
        let start = d.d_u + (h - 1) * n;
        DMatrix::from_column_slice(d.d_u, d.d_x, &self.sum.as_slice()[start..start + n])
    }

    pub fn add(&mut self, grad: &DVector<f64>) -> Result<()> {
        if grad.len() != self.sum.len() {
            return Err(Error::Dimension {
                expected: self.sum.len(),
                got: grad.len(),
            });
        }
        for i in 0..grad.len() {
            let y = grad[i] - self.compensation[i];
            let t = self.sum[i] + y;
            self.compensation[i] = (t - self.sum[i]) - y;
            self.sum[i] = t;
        }
        self.count += 1;
        Ok(())
    }
}

/// `⟨G, z⟩ + R(z)/η`, the quantity the lazy update minimises.
pub fn ftrl_objective(acc: &GradAccumulator, eta: f64, params: &DacParams) -> f64 {
    acc.total().dot(params.flat()) + regularizer(params) / eta
}

/// `ln Σ_j exp(v_j)` with max subtraction.
fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact minimiser of [`ftrl_objective`].
///
/// For a fixed scale `a` each block is `a·softmax(−η g_block)` and the
/// objective reduces to `(1/η)·Σ_b [a ln a + (1−a) ln(1−a) − a ln Z_b]`,
/// whose stationary point is `a = G/(1+G)` with `ln G` the mean of `ln Z_b`.
/// The objective is convex in `a`, so clamping to `[a0, a_ub]` is exact.
pub fn ftrl_argmin(acc: &GradAccumulator, eta: f64, domain: &DacDomain) -> Result<DacParams> {
    if !(eta > 0.0) {
        return Err(Error::Parameter(format!("step size must be positive, got {eta}")));
    }
    let g = acc.total();
    let d_u = domain.d_u;
    let mut flat = DVector::zeros(domain.num_coords());
    let mut mean_log_z = 0.0;
    for (b, block) in g.as_slice().chunks(d_u).enumerate() {
        let logits = block.iter().map(|&x| -eta * x);
        let log_z = log_sum_exp(logits.clone());
        mean_log_z += log_z;
        for (j, l) in logits.enumerate() {
            flat[b * d_u + j] = (l - log_z).exp();
        }
    }
    mean_log_z /= domain.num_blocks() as f64;
    let a = if domain.fixed_scale() {
        domain.a0
    } else {
        // sigmoid(mean ln Z), computed stably
        let s = if mean_log_z >= 0.0 {
            1.0 / (1.0 + (-mean_log_z).exp())
        } else {
            let e = mean_log_z.exp();
            e / (1.0 + e)
        };
        s.clamp(domain.a0, domain.a_ub)
    };
    flat *= a;
    DacParams::from_flat(*domain, flat, a)
}

/// Follow-the-regularised-leader with the entropic regulariser.
#[derive(Debug, Clone)]
pub struct LazyMd {
    eta: f64,
    acc: GradAccumulator,
    params: DacParams,
}

impl LazyMd {
    pub fn new(domain: DacDomain, eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::Parameter(format!("step size must be positive, got {eta}")));
        }
        Ok(LazyMd {
            eta,
            acc: GradAccumulator::new(domain),
            params: max_entropy_point(&domain),
        })
    }

    pub fn params(&self) -> &DacParams {
        &self.params
    }

    pub fn accumulator(&self) -> &GradAccumulator {
        &self.acc
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn update(&mut self, grad: &DVector<f64>) -> Result<&DacParams> {
        self.acc.add(grad)?;
        self.params = ftrl_argmin(&self.acc, self.eta, self.acc.domain())?;
        Ok(&self.params)
    }
}

/// One multiplicative-weights step per block at the domain's fixed scale.
pub fn exp_weights_update(params: &DacParams, grad: &DVector<f64>, eta: f64) -> Result<DacParams> {
    let domain = *params.domain();
    if !domain.fixed_scale() {
        return Err(Error::ScaleNotFixed {
            a0: domain.a0,
            a_ub: domain.a_ub,
        });
    }
    if grad.len() != domain.num_coords() {
        return Err(Error::Dimension {
            expected: domain.num_coords(),
            got: grad.len(),
        });
    }
    let a = domain.a0;
    let d_u = domain.d_u;
    let mut flat = DVector::zeros(domain.num_coords());
    for (b, (block, g)) in params
        .flat()
        .as_slice()
        .chunks(d_u)
        .zip(grad.as_slice().chunks(d_u))
        .enumerate()
    {
        let logits = block
            .iter()
            .zip(g)
            .map(|(&v, &gj)| if v > 0.0 { v.ln() - eta * gj } else { f64::NEG_INFINITY });
        let log_z = log_sum_exp(logits.clone());
        if log_z == f64::NEG_INFINITY {
            // a = 0: nothing to reweight
            continue;
        }
        for (j, l) in logits.enumerate() {
            flat[b * d_u + j] = a * (l - log_z).exp();
        }
    }
    DacParams::from_flat(domain, flat, a)
}

/// Online mirror descent with uniform initialisation on a fixed-scale domain.
#[derive(Debug, Clone)]
pub struct ExpWeights {
    eta: f64,
    params: DacParams,
}

impl ExpWeights {
    pub fn new(domain: DacDomain, eta: f64) -> Result<Self> {
        if !domain.fixed_scale() {
            return Err(Error::ScaleNotFixed {
                a0: domain.a0,
                a_ub: domain.a_ub,
            });
        }
        Ok(ExpWeights {
            eta,
            params: DacParams::uniform(domain, domain.a0)?,
        })
    }

    pub fn params(&self) -> &DacParams {
        &self.params
    }

    pub fn update(&mut self, grad: &DVector<f64>) -> Result<&DacParams> {
        self.params = exp_weights_update(&self.params, grad, self.eta)?;
        Ok(&self.params)
    }
}

/// How to pick the mirror-descent step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `c·√(d H ln d) / (L τ² ln²T √T)`.
    Theory { c: f64 },
    /// `√(d H ln H) / (2√T)`.
    Experiment,
    Fixed(f64),
}

impl StepSize {
    /// Resolves to a positive step size; `d` is the state dimension.
    pub fn resolve(&self, d: usize, h: usize, horizon: usize, lipschitz: f64, tau: f64) -> Result<f64> {
        let (d, h, t) = (d as f64, h as f64, horizon.max(1) as f64);
        let eta = match *self {
            StepSize::Fixed(eta) => eta,
            StepSize::Experiment => (d * h * h.ln()).sqrt() / (2.0 * t.sqrt()),
            StepSize::Theory { c } => {
                let lt = t.ln();
                c * (d * h * d.ln()).sqrt() / (lipschitz * tau * tau * lt * lt * t.sqrt())
            }
        };
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Parameter(format!(
                "step size {eta} from {self:?} is not positive (d={d}, H={h}, T={t})"
            )));
        }
        Ok(eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::l1_norm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn regularizer_examples() {
        let dom = DacDomain::square(2, 1, 1.0, 1.0).unwrap();
        let u = DacParams::uniform(dom, 1.0).unwrap();
        assert!(close(regularizer(&u), -3.0 * 2f64.ln(), 1e-15));
        let flat = DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let pm = DacParams::from_flat(dom, flat, 1.0).unwrap();
        assert_eq!(regularizer(&pm), 0.0);
        assert!(DacDomain::square(2, 0, 0.0, 1.0).is_err());
    }

    #[test]
    fn max_entropy_examples() {
        let p = max_entropy_point(&DacDomain::square(2, 1, 1.0, 1.0).unwrap());
        assert_eq!(p.p().as_slice(), &[0.5, 0.5]);
        assert!(p.m(1).iter().all(|&v| v == 0.5));

        let p = max_entropy_point(&DacDomain::square(2, 1, 0.0, 1.0).unwrap());
        assert!(close(p.scale(), 2.0 / 3.0, 1e-15));
        assert!(close(p.p()[0], 1.0 / 3.0, 1e-15));

        let p = max_entropy_point(&DacDomain::square(3, 1, 0.9, 1.0).unwrap());
        assert_eq!(p.scale(), 0.9);
    }

    #[test]
    fn max_entropy_matches_scalar_oracle() {
        // h(a) = a ln(d/a) + (1 − a) ln(1/(1 − a)) maximised on a grid
        for d in 1..6 {
            let df = d as f64;
            let h = |a: f64| a * (df / a).ln() - (1.0 - a) * (1.0 - a).ln();
            let best = (1..100_000)
                .map(|i| i as f64 / 100_000.0)
                .max_by(|x, y| h(*x).total_cmp(&h(*y)))
                .unwrap();
            let p = max_entropy_point(&DacDomain::square(d, 2, 0.0, 1.0).unwrap());
            assert!(close(p.scale(), best, 1e-4));
        }
    }

    #[test]
    fn ftrl_examples() {
        let dom = DacDomain::square(2, 1, 0.0, 1.0).unwrap();
        let acc = GradAccumulator::new(dom);
        assert_eq!(ftrl_argmin(&acc, 0.7, &dom).unwrap(), max_entropy_point(&dom));

        let dom = DacDomain::square(2, 1, 1.0, 1.0).unwrap();
        let mut acc = GradAccumulator::new(dom);
        acc.add(&DVector::from_vec(vec![2f64.ln(), 0.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        let z = ftrl_argmin(&acc, 1.0, &dom).unwrap();
        assert!(close(z.p()[0], 1.0 / 3.0, 1e-15) && close(z.p()[1], 2.0 / 3.0, 1e-15));
        assert!(z.m(1).iter().all(|&v| close(v, 0.5, 1e-15)));
        assert!(ftrl_argmin(&acc, 0.0, &dom).is_err());
    }

    #[test]
    fn lazy_md_accumulates_linearly() {
        let dom = DacDomain::square(3, 2, 0.1, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = DVector::from_fn(dom.num_coords(), |_, _| rng.gen_range(-1.0..1.0));
        let mut md = LazyMd::new(dom, 0.3).unwrap();
        md.update(&DVector::zeros(dom.num_coords())).unwrap();
        assert_eq!(md.params(), &max_entropy_point(&dom));
        md.update(&g).unwrap();
        md.update(&g).unwrap();
        let mut once = LazyMd::new(dom, 0.3).unwrap();
        once.update(&(&g * 2.0)).unwrap();
        assert!((md.params().flat() - once.params().flat()).abs().max() < 1e-14);
    }

    #[test]
    fn exp_weights_examples() {
        let dom = DacDomain::square(2, 1, 1.0, 1.0).unwrap();
        let u = DacParams::uniform(dom, 1.0).unwrap();
        assert_eq!(exp_weights_update(&u, &DVector::zeros(6), 1.0).unwrap(), u);
        let g = DVector::from_vec(vec![2f64.ln(), 0.0, 0.0, 0.0, 0.0, 0.0]);
        let z = exp_weights_update(&u, &g, 1.0).unwrap();
        assert!(close(z.p()[0], 1.0 / 3.0, 1e-15));
        let free = DacDomain::square(2, 1, 0.0, 1.0).unwrap();
        let p = max_entropy_point(&free);
        assert!(matches!(
            exp_weights_update(&p, &DVector::zeros(6), 1.0),
            Err(Error::ScaleNotFixed { .. })
        ));
    }

    #[test]
    fn exp_weights_equals_ftrl_at_fixed_scale() {
        let dom = DacDomain::new(3, 2, 2, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ew = ExpWeights::new(dom, 0.2).unwrap();
        let mut md = LazyMd::new(dom, 0.2).unwrap();
        for _ in 0..50 {
            let g = DVector::from_fn(dom.num_coords(), |_, _| rng.gen_range(-1.0..1.0));
            ew.update(&g).unwrap();
            md.update(&g).unwrap();
        }
        assert!((ew.params().flat() - md.params().flat()).abs().max() < 1e-12);
    }

    #[test]
    fn step_size_presets() {
        let e = StepSize::Experiment.resolve(3, 5, 100, 1.0, 1.0).unwrap();
        assert!(close(e, (15.0 * 5f64.ln()).sqrt() / 20.0, 1e-15));
        assert!(StepSize::Experiment.resolve(3, 1, 100, 1.0, 1.0).is_err());
        let t = StepSize::Theory { c: 1.0 }.resolve(2, 4, 100, 2.0, 1.5).unwrap();
        let lt = 100f64.ln();
        assert!(close(t, (8.0 * 2f64.ln()).sqrt() / (2.0 * 2.25 * lt * lt * 10.0), 1e-15));
        assert_eq!(StepSize::Fixed(0.1).resolve(1, 1, 1, 1.0, 1.0).unwrap(), 0.1);
    }

    fn random_feasible(dom: &DacDomain, rng: &mut ChaCha8Rng) -> DacParams {
        let a = rng.gen_range(dom.a0..=dom.a_ub);
        let mut flat = DVector::zeros(dom.num_coords());
        for b in 0..dom.num_blocks() {
            let raw: Vec<f64> = (0..dom.d_u).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let s: f64 = raw.iter().sum();
            for j in 0..dom.d_u {
                flat[b * dom.d_u + j] = a * raw[j] / s;
            }
        }
        DacParams::from_flat(*dom, flat, a).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn argmin_beats_random_points(seed in any::<u64>(), d_x in 1usize..4, d_u in 1usize..4, h in 1usize..3, lo in 0.0f64..0.5, width in 0.0f64..0.5, eta in 0.05f64..3.0) {
            let dom = DacDomain::new(d_x, d_u, h, lo, lo + width).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut acc = GradAccumulator::new(dom);
            acc.add(&DVector::from_fn(dom.num_coords(), |_, _| rng.gen_range(-3.0..3.0))).unwrap();
            let z = ftrl_argmin(&acc, eta, &dom).unwrap();
            prop_assert!(z.is_feasible(1e-8));
            let best = ftrl_objective(&acc, eta, &z);
            for _ in 0..10_000 {
                let y = random_feasible(&dom, &mut rng);
                prop_assert!(best <= ftrl_objective(&acc, eta, &y) + 1e-10);
            }
        }

        #[test]
        fn movement_bound(seed in any::<u64>(), d in 2usize..5, h in 1usize..4, lo in 0.0f64..0.5, width in 0.0f64..0.5) {
            let horizon = 200usize;
            let dom = DacDomain::square(d, h, lo, lo + width).unwrap();
            let l = 1.0;
            let bound = (2.0 * (d * h) as f64 * (d as f64).ln() / horizon as f64).sqrt();
            let eta = bound / l;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut md = LazyMd::new(dom, eta).unwrap();
            let mut prev = md.params().clone();
            for _ in 0..horizon {
                let g = DVector::from_fn(dom.num_coords(), |_, _| rng.gen_range(-l..=l));
                let next = md.update(&g).unwrap().clone();
                prop_assert!(l1_norm((next.p() - prev.p()).as_slice()) <= bound * (1.0 + 1e-6));
                for k in 1..=h {
                    prop_assert!(crate::simplex::one_one_norm(&(next.m(k) - prev.m(k))) <= bound * (1.0 + 1e-6));
                }
                prev = next;
            }
        }
    }
}
