//! Points of the simplex, scaled sub-simplices and (scaled) column-stochastic
//! matrices, with the norms and entropy used throughout the crate.
//!
//! Every constructor validates within [`TOL`]. Values that pass are clamped to
//! be nonnegative and rescaled onto their target sum, so small floating-point
//! drift never accumulates; anything beyond the tolerance is rejected.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Violation, ViolationKind};

/// Tolerance for all simplex and stochastic-matrix invariants.
pub const TOL: f64 = 1e-9;

/// Sum of absolute values.
pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// The induced 1→1 operator norm, i.e. the largest column ℓ1 norm.
pub fn one_one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Checks that `v` is entrywise nonnegative and sums to `target` within `tol`,
/// reporting the worst violation otherwise.
pub fn validate_vector(v: &[f64], target: f64, tol: f64) -> std::result::Result<(), Violation> {
    let mut worst: Option<Violation> = None;
    let mut consider = |cand: Violation| {
        if worst.map_or(true, |w| cand.magnitude > w.magnitude) {
            worst = Some(cand);
        }
    };
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(Violation {
                kind: ViolationKind::NonFinite,
                magnitude: f64::INFINITY,
                location: Some((i, 0)),
            });
        }
        if x < -tol {
            consider(Violation {
                kind: ViolationKind::NegativeEntry,
                magnitude: -x,
                location: Some((i, 0)),
            });
        }
    }
    let gap = (v.iter().sum::<f64>() - target).abs();
    if gap > tol {
        consider(Violation {
            kind: ViolationKind::SumMismatch,
            magnitude: gap,
            location: None,
        });
    }
    worst.map_or(Ok(()), Err)
}

/// Column-wise version of [`validate_vector`]: every column must sum to `target`.
pub fn validate_columns(m: &DMatrix<f64>, target: f64, tol: f64) -> std::result::Result<(), Violation> {
    let mut worst: Option<Violation> = None;
    for (j, col) in m.column_iter().enumerate() {
        let col: Vec<f64> = col.iter().copied().collect();
        if let Err(mut v) = validate_vector(&col, target, tol) {
            v.location = Some(v.location.map_or((0, j), |(i, _)| (i, j)));
            if v.kind == ViolationKind::NonFinite {
                return Err(v);
            }
            if worst.map_or(true, |w| v.magnitude > w.magnitude) {
                worst = Some(v);
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

/// Clamp negatives to zero and rescale so the entries sum to `target`.
fn snap(values: &mut [f64], target: f64) {
    for x in values.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = values.iter().sum();
    if s > 0.0 {
        let k = target / s;
        values.iter_mut().for_each(|x| *x *= k);
    }
}

fn snap_columns(m: &mut DMatrix<f64>, target: f64) {
    for mut col in m.column_iter_mut() {
        snap(col.as_mut_slice(), target);
    }
}

/// Entropy of a sub-distribution, counting the missing mass as one extra atom.
/// Uses `0 ln(1/0) = 0`.
pub fn sub_entropy_of(v: &[f64]) -> f64 {
    let xlogx = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    let cmp = (1.0 - v.iter().sum::<f64>()).max(0.0);
    xlogx(cmp) + v.iter().map(|&x| xlogx(x)).sum::<f64>()
}

/// `Ent(v)`; lies in `[0, ln(d+1)]`.
pub fn sub_entropy(v: &SubDist) -> f64 {
    sub_entropy_of(v.as_slice())
}

/// A probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist(DVector<f64>);

impl Dist {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        let mut values = values;
        validate_vector(values.as_slice(), 1.0, TOL).map_err(Error::Invalid)?;
        snap(values.as_mut_slice(), 1.0);
        Ok(Dist(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn uniform(d: usize) -> Self {
        Dist(DVector::from_element(d, 1.0 / d as f64))
    }

    pub fn vertex(d: usize, j: usize) -> Self {
        let mut v = DVector::zeros(d);
        v[j] = 1.0;
        Dist(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// A nonnegative vector with total mass at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDist(DVector<f64>);

impl SubDist {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        let mut values = values;
        let s: f64 = values.iter().sum();
        // nonnegativity check against the vector's own sum, plus the cap
        validate_vector(values.as_slice(), s, TOL).map_err(Error::Invalid)?;
        if s > 1.0 + TOL {
            return Err(Error::Invalid(Violation {
                kind: ViolationKind::SumMismatch,
                magnitude: s - 1.0,
                location: None,
            }));
        }
        snap(values.as_mut_slice(), s.min(1.0));
        Ok(SubDist(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    /// Missing mass `1 - Σ v_j`.
    pub fn cmp(&self) -> f64 {
        (1.0 - self.0.sum()).max(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

/// A nonnegative vector summing to `scale ∈ [0, 1]`; controls live here.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledDist {
    values: DVector<f64>,
    scale: f64,
}

impl ScaledDist {
    /// Infers the scale from the entries.
    pub fn new(values: DVector<f64>) -> Result<Self> {
        let s = values.sum();
        if !(-TOL..=1.0 + TOL).contains(&s) {
            return Err(Error::Invalid(Violation {
                kind: ViolationKind::SumMismatch,
                magnitude: if s < 0.0 { -s } else { s - 1.0 },
                location: None,
            }));
        }
        Self::with_scale(values, s.clamp(0.0, 1.0))
    }

    pub fn with_scale(values: DVector<f64>, scale: f64) -> Result<Self> {
        let mut values = values;
        validate_vector(values.as_slice(), scale, TOL).map_err(Error::Invalid)?;
        snap(values.as_mut_slice(), scale);
        Ok(ScaledDist { values, scale })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn zeros(d: usize) -> Self {
        ScaledDist {
            values: DVector::zeros(d),
            scale: 0.0,
        }
    }

    pub fn scaled(dist: &Dist, scale: f64) -> Self {
        ScaledDist {
            values: dist.values() * scale,
            scale,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }
}

/// Column-stochastic matrix. Not necessarily square: a `rows × cols` matrix maps
/// `Δ^cols` into `Δ^rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let mut entries = entries;
        validate_columns(&entries, 1.0, TOL).map_err(Error::Invalid)?;
        snap_columns(&mut entries, 1.0);
        Ok(StochasticMatrix(entries))
    }

    /// Builds from row slices (the way matrices are usually written down).
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn identity(d: usize) -> Self {
        StochasticMatrix(DMatrix::identity(d, d))
    }

    /// All entries `1/d`: the rank-one projector onto the uniform distribution.
    pub fn uniform(d: usize) -> Self {
        StochasticMatrix(DMatrix::from_element(d, d, 1.0 / d as f64))
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn apply(&self, p: &Dist) -> Dist {
        let mut v = &self.0 * p.values();
        snap(v.as_mut_slice(), 1.0);
        Dist(v)
    }

    pub fn mul(&self, other: &StochasticMatrix) -> StochasticMatrix {
        let mut m = &self.0 * &other.0;
        snap_columns(&mut m, 1.0);
        StochasticMatrix(m)
    }
}

/// `a · M` for a column-stochastic `M` and `a ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledStochasticMatrix {
    entries: DMatrix<f64>,
    scale: f64,
}

impl ScaledStochasticMatrix {
    /// Infers the scale from the first column.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let s = if entries.ncols() == 0 { 0.0 } else { entries.column(0).sum() };
        Self::with_scale(entries, s.clamp(0.0, 1.0))
    }

    pub fn with_scale(entries: DMatrix<f64>, scale: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&scale) {
            return Err(Error::Parameter(format!("matrix scale {scale} outside [0, 1]")));
        }
        let mut entries = entries;
        validate_columns(&entries, scale, TOL).map_err(Error::Invalid)?;
        snap_columns(&mut entries, scale);
        Ok(ScaledStochasticMatrix { entries, scale })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ScaledStochasticMatrix {
            entries: DMatrix::zeros(rows, cols),
            scale: 0.0,
        }
    }

    pub fn scaled(m: &StochasticMatrix, scale: f64) -> Self {
        ScaledStochasticMatrix {
            entries: m.entries() * scale,
            scale,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// The valid control set `⋃_{α ∈ [alpha_lb, alpha_ub]} Δ_α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSet {
    pub alpha_lb: f64,
    pub alpha_ub: f64,
}

impl ControlSet {
    pub fn new(alpha_lb: f64, alpha_ub: f64) -> Result<Self> {
        if !(0.0 <= alpha_lb && alpha_lb <= alpha_ub && alpha_ub <= 1.0) {
            return Err(Error::Parameter(format!(
                "control set needs 0 <= alpha_lb <= alpha_ub <= 1, got [{alpha_lb}, {alpha_ub}]"
            )));
        }
        Ok(ControlSet { alpha_lb, alpha_ub })
    }

    /// Controls that are full distributions.
    pub fn full() -> Self {
        ControlSet {
            alpha_lb: 1.0,
            alpha_ub: 1.0,
        }
    }

    pub fn contains_strength(&self, strength: f64) -> bool {
        strength >= self.alpha_lb - TOL && strength <= self.alpha_ub + TOL
    }

    /// Errors with `InfeasibleControl` unless `u` is a valid member.
    pub fn check(&self, u: &[f64]) -> Result<()> {
        let strength = u.iter().sum::<f64>();
        if u.iter().any(|&x| x < -TOL || !x.is_finite()) || !self.contains_strength(strength) {
            return Err(Error::InfeasibleControl {
                strength: l1_norm(u),
                lb: self.alpha_lb,
                ub: self.alpha_ub,
            });
        }
        Ok(())
    }
}

pub(crate) fn matrix_from_rows(rows: &[&[f64]]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::Dimension {
            expected: ncols,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn l1_examples() {
        assert_eq!(l1_norm(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(l1_norm(&[1.0, 0.0, 0.0]), 1.0);
        assert!((l1_norm(&[0.3, -0.2, 0.5]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn one_one_examples() {
        assert_eq!(one_one_norm(&DMatrix::identity(2, 2)), 1.0);
        assert_eq!(one_one_norm(&DMatrix::zeros(3, 3)), 0.0);
        let m = matrix_from_rows(&[&[1.0, 0.0], &[2.0, 1.0]]).unwrap();
        // brute force over ±e_j
        let brute = (0..2)
            .flat_map(|j| [1.0, -1.0].map(|s| (j, s)))
            .map(|(j, s)| {
                let mut e = DVector::zeros(2);
                e[j] = s;
                l1_norm((&m * e).as_slice())
            })
            .fold(0.0, f64::max);
        assert_eq!(brute, 3.0);
        assert_eq!(one_one_norm(&m), brute);
    }

    #[test]
    fn validate_examples() {
        assert!(validate_vector(&[0.5, 0.5], 1.0, 1e-9).is_ok());
        let v = validate_vector(&[0.6, 0.5], 1.0, 1e-9).unwrap_err();
        assert_eq!(v.kind, ViolationKind::SumMismatch);
        assert!((v.magnitude - 0.1).abs() < 1e-12);
        assert!(validate_vector(&[-1e-12, 1.0], 1.0, 1e-9).is_ok());
        let v = validate_vector(&[-0.1, 1.1], 1.0, 1e-9).unwrap_err();
        assert_eq!(v.kind, ViolationKind::NegativeEntry);
        assert_eq!(v.location, Some((0, 0)));
    }

    #[test]
    fn validate_reports_bad_column() {
        let m = matrix_from_rows(&[&[0.5, 0.2], &[0.5, 0.7]]).unwrap();
        let v = validate_columns(&m, 1.0, 1e-9).unwrap_err();
        assert_eq!(v.location, Some((0, 1)));
        assert!(StochasticMatrix::new(m).is_err());
    }

    #[test]
    fn dist_snaps_tiny_drift() {
        let d = Dist::from_slice(&[-1e-12, 1.0 + 1e-12]).unwrap();
        assert_eq!(d.as_slice()[0], 0.0);
        assert!((d.values().sum() - 1.0).abs() < 1e-15);
        assert!(Dist::from_slice(&[0.6, 0.5]).is_err());
    }

    #[test]
    fn entropy_examples() {
        let e = |v: &[f64]| sub_entropy(&SubDist::from_slice(v).unwrap());
        assert_eq!(e(&[1.0, 0.0]), 0.0);
        assert!((e(&[0.5, 0.5]) - 2f64.ln()).abs() < 1e-12);
        assert!((e(&[0.25, 0.25]) - 1.5 * 2f64.ln()).abs() < 1e-12);
        assert!((e(&[0.25, 0.25]) - 1.039721).abs() < 1e-6);
    }

    #[test]
    fn control_set_bounds() {
        assert!(ControlSet::new(0.5, 0.2).is_err());
        let cs = ControlSet::new(0.0, 0.5).unwrap();
        assert!(cs.check(&[0.2, 0.3]).is_ok());
        assert!(matches!(cs.check(&[0.5, 0.3]), Err(Error::InfeasibleControl { .. })));
    }

    fn subdist(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, d + 1).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>().max(1e-12);
            v[..v.len() - 1].iter().map(|x| x / s).collect()
        })
    }

    fn random_matrix(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| DMatrix::from_vec(d, d, v))
    }

    fn stochastic(d: usize) -> impl Strategy<Value = StochasticMatrix> {
        prop::collection::vec(0.01f64..1.0, d * d).prop_map(move |v| {
            let mut m = DMatrix::from_vec(d, d, v);
            for mut c in m.column_iter_mut() {
                let s = c.sum();
                c /= s;
            }
            StochasticMatrix::new(m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn entropy_bounds(v in (1usize..6).prop_flat_map(subdist)) {
            let d = v.len();
            let e = sub_entropy(&SubDist::from_slice(&v).unwrap());
            prop_assert!(e >= 0.0);
            prop_assert!(e <= ((d + 1) as f64).ln() + 1e-12);
        }

        #[test]
        fn one_one_submultiplicative((m, n) in (1usize..6).prop_flat_map(|d| (random_matrix(d), random_matrix(d)))) {
            prop_assert!(one_one_norm(&(&m * &n)) <= one_one_norm(&m) * one_one_norm(&n) + 1e-12);
        }

        #[test]
        fn stochastic_preserves_simplex((x, p) in (1usize..6).prop_flat_map(|d| (stochastic(d), subdist(d)))) {
            let s: f64 = p.iter().sum::<f64>().max(1e-12);
            let p: Vec<f64> = p.iter().map(|v| v / s).collect();
            let q = x.entries() * DVector::from_vec(p);
            prop_assert!((l1_norm(q.as_slice()) - 1.0).abs() < 1e-12);
            prop_assert!(q.iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn neg_entropy_strongly_convex((u, v) in (1usize..6).prop_flat_map(|d| (subdist(d), subdist(d)))) {
            // keep away from the boundary so the gradient is finite
            let lift = |w: &[f64]| -> Vec<f64> { w.iter().map(|x| 0.9 * x + 1e-3).collect() };
            let (u, v) = (lift(&u), lift(&v));
            let grad = |w: &[f64]| -> Vec<f64> {
                let cmp = 1.0 - w.iter().sum::<f64>();
                w.iter().map(|x| x.ln() - cmp.ln()).collect()
            };
            let (gu, gv) = (grad(&u), grad(&v));
            let inner: f64 = (0..u.len()).map(|j| (gu[j] - gv[j]) * (u[j] - v[j])).sum();
            let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            prop_assert!(inner >= l1_norm(&diff).powi(2) - 1e-12);
        }
    }
}
