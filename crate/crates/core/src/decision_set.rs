//! Decision sets: finite arm lists and the entropy ball
//! `{x ≥ 0 : Σ x(i) log x(i) ≤ budget}`, together with linear maximizers and
//! the independent arm subset `D_k` used for forced exploration.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Default bisection tolerance on the active entropy constraint.
pub const DEFAULT_BALL_TOL: f64 = 1e-10;

const RANK_REL_TOL: f64 = 1e-10;

/// Greedy scan in index order keeping an arm iff it raises the rank of the
/// kept set. Returns `(k, indices)` where `k` is the dimension of the span.
///
/// The rank test orthogonalizes each candidate against the kept set (two
/// passes of Gram–Schmidt) and keeps it when the residual norm exceeds
/// `1e-10·‖arm‖`.
pub fn select_independent_subset(arms: &[DVector<f64>]) -> (usize, Vec<usize>) {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (idx, arm) in arms.iter().enumerate() {
        let norm = arm.norm();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        if basis.len() == arm.len() {
            break;
        }
        let mut residual = arm.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&residual);
                residual.axpy(-proj, q, 1.0);
            }
        }
        let rnorm = residual.norm();
        if rnorm > RANK_REL_TOL * norm {
            basis.push(residual / rnorm);
            kept.push(idx);
        }
    }
    (kept.len(), kept)
}

/// Smallest index attaining `max ⟨x, c⟩`.
pub fn argmax_inner(arms: &[DVector<f64>], c: &DVector<f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, x) in arms.iter().enumerate() {
        let v = x.dot(c);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

/// A finite decision set with its independent subset `D_k`.
#[derive(Debug, Clone)]
pub struct FiniteSet {
    arms: Vec<DVector<f64>>,
    dk_indices: Vec<usize>,
    norm_bound: f64,
}

impl FiniteSet {
    /// Build a set whose norm bound `Z` is the largest arm norm.
    pub fn new(arms: Vec<DVector<f64>>) -> Result<Self> {
        let z = arms.iter().map(|a| a.norm()).fold(0.0, f64::max);
        Self::with_norm_bound(arms, z)
    }

    /// Build a set, checking every arm against the norm bound `z`.
    pub fn with_norm_bound(arms: Vec<DVector<f64>>, z: f64) -> Result<Self> {
        let Some(first) = arms.first() else {
            return Err(Error::invalid("decision set must contain at least one arm"));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::invalid("arms must have positive dimension"));
        }
        for (i, a) in arms.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::invalid(format!(
                    "arm {i} has length {}, expected {dim}",
                    a.len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("arm {i} has non-finite entries")));
            }
            if a.norm() > z {
                return Err(Error::AssumptionViolated(format!(
                    "arm {i} has norm {} above the bound {z}",
                    a.norm()
                )));
            }
        }
        let (k, dk_indices) = select_independent_subset(&arms);
        if k == 0 {
            return Err(Error::AssumptionViolated("all arms are zero".into()));
        }
        Ok(FiniteSet {
            arms,
            dk_indices,
            norm_bound: z,
        })
    }

    pub fn arms(&self) -> &[DVector<f64>] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.arms[0].len()
    }

    pub fn dk_indices(&self) -> &[usize] {
        &self.dk_indices
    }

    /// Dimension of the span of the arms.
    pub fn span_dim(&self) -> usize {
        self.dk_indices.len()
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn argmax(&self, c: &DVector<f64>) -> usize {
        argmax_inner(&self.arms, c)
    }
}

/// Free-function form of [`FiniteSet::argmax`].
pub fn finite_argmax(set: &FiniteSet, c: &DVector<f64>) -> usize {
    set.argmax(c)
}

/// `x log x` with `0 log 0 = 0`.
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// The convex set `{x ∈ R^d : x ≥ 0, Σ x(i) log x(i) ≤ budget}`.
#[derive(Debug, Clone)]
pub struct EntropyBall {
    dim: usize,
    budget: f64,
    dk_arms: Vec<DVector<f64>>,
}

impl EntropyBall {
    pub fn new(dim: usize, budget: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("entropy ball dimension must be positive"));
        }
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(Error::invalid(format!(
                "entropy budget must be finite and nonnegative, got {budget}"
            )));
        }
        Ok(EntropyBall {
            dim,
            budget,
            dk_arms: entropy_ball_dk(dim, budget)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn dk_arms(&self) -> &[DVector<f64>] {
        &self.dk_arms
    }

    /// `Σ x(i) log x(i)`, or `None` if some coordinate is negative.
    pub fn entropy(x: &DVector<f64>) -> Option<f64> {
        if x.iter().any(|&v| v < 0.0) {
            return None;
        }
        Some(x.iter().map(|&v| xlogx(v)).sum())
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim && Self::entropy(x).is_some_and(|e| e <= self.budget + tol)
    }

    /// Largest value any single coordinate can take inside the set:
    /// the root of `x log x = budget + (d-1)/e`.
    pub fn coordinate_bound(&self) -> f64 {
        let target = self.budget + (self.dim as f64 - 1.0) / std::f64::consts::E;
        // x log x is increasing on [1/e, ∞); bracket the root there.
        let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
        while xlogx(hi) < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if xlogx(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// A norm bound `Z` implied by the set geometry (`√d` times the
    /// coordinate bound). Not tight.
    pub fn norm_bound(&self) -> f64 {
        (self.dim as f64).sqrt() * self.coordinate_bound()
    }

    /// Maximizer of `⟨c, x⟩` over the set.
    ///
    /// When some `c_i > 0` the entropy constraint is active and the KKT
    /// conditions give `x_i(μ) = exp(c_i/μ - 1)`; the multiplier `μ > 0` is
    /// found by bisection on `g(μ) = Σ x_i log x_i - budget`, which is
    /// decreasing in `μ`, until `|g| ≤ tol`. When every `c_i ≤ 0` the
    /// constraint is slack: coordinates with `c_i < 0` go to zero and
    /// coordinates with `c_i = 0` take the value `1/e` (so `c = 0` yields the
    /// interior point `(1/e, …, 1/e)`).
    pub fn linear_max(&self, c: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        if c.len() != self.dim {
            return Err(Error::invalid(format!(
                "objective has length {}, set dimension is {}",
                c.len(),
                self.dim
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("objective has non-finite entries"));
        }
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let inv_e = (-1.0f64).exp();
        if c.max() <= 0.0 {
            return Ok(c.map(|ci| if ci < 0.0 { 0.0 } else { inv_e }));
        }

        let budget = self.budget;
        let g = |mu: f64| -> f64 {
            let mut s = -budget;
            for &ci in c.iter() {
                let z = ci / mu - 1.0;
                let x = z.exp();
                if x != 0.0 {
                    s += x * z;
                }
            }
            s
        };

        // Bracket in log-space: g(lo) > 0 ≥ g(hi).
        let (mut lo, mut hi) = (1e-8_f64.ln(), 1e8_f64.ln());
        while g(hi.exp()) > 0.0 {
            lo = hi;
            hi += 10.0_f64.ln();
        }
        while g(lo.exp()) <= 0.0 {
            hi = lo;
            lo -= 10.0_f64.ln();
        }

        let mut mu = hi.exp();
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = g(mid.exp());
            if gm.abs() <= tol {
                mu = mid.exp();
                return Ok(c.map(|ci| (ci / mu - 1.0).exp()));
            }
            if gm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            mu = hi.exp();
        }
        // Bracket exhausted at machine precision; `hi` is the feasible side.
        Ok(c.map(|ci| (ci / mu - 1.0).exp()))
    }
}

/// `D_k` for the entropy ball: the standard basis, each a member since
/// `1·log 1 = 0 ≤ budget`.
pub fn entropy_ball_dk(dim: usize, budget: f64) -> Result<Vec<DVector<f64>>> {
    if !(budget >= 0.0) {
        return Err(Error::invalid("entropy budget must be nonnegative"));
    }
    Ok((0..dim)
        .map(|i| DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
        .collect())
}

/// Free-function form of [`EntropyBall::linear_max`].
pub fn entropy_ball_linear_max(
    set: &EntropyBall,
    c: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>> {
    set.linear_max(c, tol)
}

/// Either kind of decision set.
#[derive(Debug, Clone)]
pub enum DecisionSet {
    Finite(FiniteSet),
    EntropyBall(EntropyBall),
}

/// The maximizer of a linear objective: an index for finite sets, a point
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Maximizer {
    Index(usize),
    Point(DVector<f64>),
}

impl DecisionSet {
    pub fn dim(&self) -> usize {
        match self {
            DecisionSet::Finite(s) => s.dim(),
            DecisionSet::EntropyBall(b) => b.dim(),
        }
    }

    /// `k`, the dimension of the span of the set.
    pub fn span_dim(&self) -> usize {
        match self {
            DecisionSet::Finite(s) => s.span_dim(),
            DecisionSet::EntropyBall(b) => b.dk_arms().len(),
        }
    }

    /// Number of arms, or `None` for an infinite set.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        match self {
            DecisionSet::Finite(s) => Some(s.len()),
            DecisionSet::EntropyBall(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, DecisionSet::Finite(_))
    }

    pub fn norm_bound(&self) -> f64 {
        match self {
            DecisionSet::Finite(s) => s.norm_bound(),
            DecisionSet::EntropyBall(b) => b.norm_bound(),
        }
    }

    /// The `j`-th member of `D_k`, with its index for finite sets.
    pub fn dk_arm(&self, j: usize) -> (Option<usize>, &DVector<f64>) {
        match self {
            DecisionSet::Finite(s) => {
                let idx = s.dk_indices()[j];
                (Some(idx), &s.arms()[idx])
            }
            DecisionSet::EntropyBall(b) => (None, &b.dk_arms()[j]),
        }
    }

    pub fn dk_vectors(&self) -> Vec<DVector<f64>> {
        (0..self.span_dim()).map(|j| self.dk_arm(j).1.clone()).collect()
    }

    /// Maximize `⟨x, c⟩` over the set.
    pub fn linear_max(&self, c: &DVector<f64>) -> Result<Maximizer> {
        match self {
            DecisionSet::Finite(s) => Ok(Maximizer::Index(s.argmax(c))),
            DecisionSet::EntropyBall(b) => Ok(Maximizer::Point(b.linear_max(c, DEFAULT_BALL_TOL)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn independent_subset_examples() {
        let basis = vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])];
        assert_eq!(select_independent_subset(&basis), (3, vec![0, 1, 2]));
        let arms = vec![v(&[1.0, 0.0]), v(&[2.0, 0.0]), v(&[0.0, 1.0])];
        assert_eq!(select_independent_subset(&arms), (2, vec![0, 2]));
        let with_zero = vec![v(&[0.0, 0.0]), v(&[1.0, 1.0])];
        assert_eq!(select_independent_subset(&with_zero), (1, vec![1]));
    }

    #[test]
    fn argmax_examples() {
        let set = FiniteSet::new(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        assert_eq!(finite_argmax(&set, &v(&[0.3, 0.7])), 1);
        let dup = FiniteSet::new(vec![v(&[0.0, 1.0]), v(&[1.0, 0.0]), v(&[1.0, 0.0])]).unwrap();
        assert_eq!(dup.argmax(&v(&[1.0, 0.0])), 1);
    }

    #[test]
    fn finite_set_validation() {
        assert!(FiniteSet::new(vec![]).is_err());
        assert!(FiniteSet::new(vec![v(&[1.0]), v(&[1.0, 2.0])]).is_err());
        assert!(matches!(
            FiniteSet::with_norm_bound(vec![v(&[3.0, 4.0])], 4.9),
            Err(Error::AssumptionViolated(_))
        ));
        assert!(FiniteSet::with_norm_bound(vec![v(&[3.0, 4.0])], 5.0).is_ok());
    }

    #[test]
    fn ball_zero_objective_is_interior_point() {
        let ball = EntropyBall::new(3, 5.0).unwrap();
        let x = ball.linear_max(&DVector::zeros(3), 1e-10).unwrap();
        let e = (-1.0f64).exp();
        assert!((&x - DVector::from_element(3, e)).amax() < 1e-15);
        assert!(ball.contains(&x, 0.0));
    }

    #[test]
    fn ball_nonpositive_objective_is_slack() {
        let ball = EntropyBall::new(3, 5.0).unwrap();
        let x = ball.linear_max(&v(&[-1.0, 0.0, -2.0]), 1e-10).unwrap();
        assert_eq!(x[0], 0.0);
        assert_eq!(x[2], 0.0);
        assert!(ball.contains(&x, 0.0));
    }

    #[test]
    fn ball_rejects_bad_objective() {
        let ball = EntropyBall::new(2, 5.0).unwrap();
        assert!(ball.linear_max(&v(&[f64::NAN, 1.0]), 1e-10).is_err());
        assert!(ball.linear_max(&v(&[1.0]), 1e-10).is_err());
        assert!(ball.linear_max(&v(&[1.0, 1.0]), 0.0).is_err());
    }

    #[test]
    fn ball_extreme_scales() {
        let ball = EntropyBall::new(4, 5.0).unwrap();
        for c in [v(&[1e-9, 0.0, 0.0, 0.0]), v(&[1e6, -3.0, 2.0, 0.5]), v(&[1e-300, 1.0, 0.0, 0.0])] {
            let x = ball.linear_max(&c, 1e-10).unwrap();
            let g = EntropyBall::entropy(&x).unwrap() - 5.0;
            assert!(g.abs() <= 1e-9, "c={c} g={g}");
        }
    }

    #[test]
    fn ball_dk_is_standard_basis() {
        let dk = entropy_ball_dk(4, 5.0).unwrap();
        let ball = EntropyBall::new(4, 5.0).unwrap();
        for (i, e) in dk.iter().enumerate() {
            assert_eq!(e[i], 1.0);
            assert_eq!(e.sum(), 1.0);
            assert_eq!(EntropyBall::entropy(e), Some(0.0));
            assert!(ball.contains(e, 0.0));
        }
        assert_eq!(select_independent_subset(&dk).0, 4);
    }

    #[test]
    fn coordinate_bound_solves_defining_equation() {
        let ball = EntropyBall::new(4, 5.0).unwrap();
        let b = ball.coordinate_bound();
        let target = 5.0 + 3.0 / std::f64::consts::E;
        assert!((b * b.ln() - target).abs() < 1e-9);
    }
}
