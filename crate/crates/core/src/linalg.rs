//! Dense linear-algebra kernel: orthogonal projectors, the incrementally
//! maintained ridge estimator, and eigenvalues restricted to a span.
//!
//! Dimensions here are small (d ≤ 13 in every shipped experiment), so plain
//! dense `nalgebra` storage is used throughout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a basis counts as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Tolerance for the symmetry invariant of a projector.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Operational tolerance (idempotence, trace, inverse residual).
pub const OPERATIONAL_TOL: f64 = 1e-8;

/// Number of rank-one updates between full re-factorizations of `V⁻¹`.
pub const REFACTOR_INTERVAL: u64 = 512;

/// An orthogonal projection matrix onto a subspace of dimension `subspace_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: DMatrix<f64>,
    subspace_dim: usize,
}

/// Measured deviations of a projector from its defining identities.
#[derive(Debug, Clone, Copy)]
pub struct ProjectorResiduals {
    /// `max |P - Pᵀ|`
    pub symmetry: f64,
    /// `max |P·P - P|`
    pub idempotence: f64,
    /// `|trace(P) - u|`
    pub trace: f64,
}

impl ProjectorResiduals {
    pub fn within_tolerance(&self) -> bool {
        self.symmetry <= SYMMETRY_TOL
            && self.idempotence <= OPERATIONAL_TOL
            && self.trace <= OPERATIONAL_TOL
    }
}

impl Projector {
    /// Projector onto the column space of `basis`: `A (AᵀA)⁻¹ Aᵀ`.
    ///
    /// The Gram system is solved through a Cholesky factorization rather than
    /// an explicit inverse, and the result is symmetrized.
    pub fn from_basis(basis: &DMatrix<f64>) -> Result<Self> {
        let (d, u) = basis.shape();
        if u == 0 || d == 0 {
            return Err(Error::invalid("projector basis must have at least one column"));
        }
        if u > d {
            return Err(Error::DegenerateBasis(format!(
                "{u} columns cannot be independent in R^{d}"
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("projector basis has non-finite entries"));
        }
        check_full_column_rank(basis)?;

        let gram = basis.transpose() * basis;
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::DegenerateBasis("Gram matrix is not positive definite".into()))?;
        let coef = chol.solve(&basis.transpose());
        let raw = basis * coef;
        let matrix = (&raw + raw.transpose()) * 0.5;

        let projector = Projector {
            matrix,
            subspace_dim: u,
        };
        let residuals = projector.residuals();
        if !residuals.within_tolerance() {
            return Err(Error::DegenerateBasis(format!(
                "basis too ill-conditioned for a stable projector ({residuals:?})"
            )));
        }
        Ok(projector)
    }

    /// Diagonal projector keeping the first `keep` coordinates of `R^dim`.
    pub fn diagonal(dim: usize, keep: usize) -> Result<Self> {
        if keep == 0 || keep > dim {
            return Err(Error::invalid(format!(
                "diagonal projector needs 1 <= keep <= dim, got keep={keep}, dim={dim}"
            )));
        }
        let diag = DVector::from_fn(dim, |i, _| if i < keep { 1.0 } else { 0.0 });
        Ok(Projector {
            matrix: DMatrix::from_diagonal(&diag),
            subspace_dim: keep,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::diagonal(dim, dim)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn subspace_dim(&self) -> usize {
        self.subspace_dim
    }

    /// `P·x`, checking the dimension.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector of length {} does not match projector dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.project(x))
    }

    /// `P·x` for a vector already known to have the right length.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// The projector onto the orthogonal complement, `I - P`.
    pub fn complement(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) - &self.matrix
    }

    pub fn residuals(&self) -> ProjectorResiduals {
        let p = &self.matrix;
        ProjectorResiduals {
            symmetry: (p - p.transpose()).amax(),
            idempotence: (p * p - p).amax(),
            trace: (p.trace() - self.subspace_dim as f64).abs(),
        }
    }
}

/// Free-function form of [`Projector::apply`].
pub fn apply_projection(projector: &Projector, x: &DVector<f64>) -> Result<DVector<f64>> {
    projector.apply(x)
}

fn check_full_column_rank(basis: &DMatrix<f64>) -> Result<()> {
    let sv = basis.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if !(max > 0.0) || min <= RANK_TOL * max {
        return Err(Error::DegenerateBasis(format!(
            "columns are linearly dependent (singular values {min:e} / {max:e})"
        )));
    }
    Ok(())
}

fn columns(vectors: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let Some(first) = vectors.first() else {
        return Err(Error::invalid("span basis must be nonempty"));
    };
    let d = first.len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::invalid("span basis vectors differ in length"));
    }
    Ok(DMatrix::from_columns(vectors))
}

/// Orthonormal basis (as columns) of the span of linearly independent vectors.
pub fn orthonormal_basis(vectors: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let b = columns(vectors)?;
    if b.ncols() > b.nrows() {
        return Err(Error::DegenerateBasis(format!(
            "{} vectors cannot be independent in R^{}",
            b.ncols(),
            b.nrows()
        )));
    }
    check_full_column_rank(&b)?;
    Ok(b.qr().q())
}

/// Smallest value of `yᵀ M y` over unit vectors `y` in the span of `span_basis`.
///
/// `M` is compressed onto an orthonormal basis `Q` of the span and the
/// smallest eigenvalue of `Qᵀ M Q` is returned.
pub fn min_eigen_in_span(m: &DMatrix<f64>, span_basis: &[DVector<f64>]) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::invalid("matrix must be square"));
    }
    let q = orthonormal_basis(span_basis)?;
    if q.nrows() != m.nrows() {
        return Err(Error::invalid(format!(
            "span vectors have length {}, matrix is {}x{}",
            q.nrows(),
            m.nrows(),
            m.ncols()
        )));
    }
    let reduced = q.transpose() * m * &q;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    Ok(SymmetricEigen::new(reduced).eigenvalues.min())
}

/// `max |(I - Q Qᵀ) P|`: how far the projector's range sticks out of the span.
pub fn range_outside_span(projector: &Projector, span_basis: &[DVector<f64>]) -> Result<f64> {
    let q = orthonormal_basis(span_basis)?;
    let p = projector.matrix();
    Ok((p - &q * (q.transpose() * p)).amax())
}

/// Regularized least-squares state `V = λI + Σ xxᵀ`, `b = Σ r x`, `θ̂ = V⁻¹ b`.
///
/// `V⁻¹` is maintained with Sherman–Morrison rank-one updates and rebuilt
/// from `V` every [`REFACTOR_INTERVAL`] updates.
#[derive(Debug, Clone)]
pub struct RidgeState {
    v: DMatrix<f64>,
    v_inv: DMatrix<f64>,
    b: DVector<f64>,
    theta_hat: DVector<f64>,
    lambda: f64,
    t: u64,
    // scratch for V⁻¹x
    work: DVector<f64>,
}

impl RidgeState {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ridge dimension must be positive"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("ridge lambda must be positive, got {lambda}")));
        }
        Ok(RidgeState {
            v: DMatrix::identity(dim, dim) * lambda,
            v_inv: DMatrix::identity(dim, dim) / lambda,
            b: DVector::zeros(dim),
            theta_hat: DVector::zeros(dim),
            lambda,
            t: 0,
            work: DVector::zeros(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of observations absorbed so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn v_inv(&self) -> &DMatrix<f64> {
        &self.v_inv
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn theta_hat(&self) -> &DVector<f64> {
        &self.theta_hat
    }

    /// Absorb one observation `(x, r)`.
    pub fn update(&mut self, x: &DVector<f64>, r: f64) {
        assert_eq!(x.len(), self.dim(), "ridge update dimension mismatch");
        self.v.ger(1.0, x, x, 1.0);
        self.b.axpy(r, x, 1.0);
        self.t += 1;

        if self.t.is_multiple_of(REFACTOR_INTERVAL) {
            self.refactor();
        } else {
            self.work.gemv(1.0, &self.v_inv, x, 0.0);
            let denom = 1.0 + x.dot(&self.work);
            self.v_inv.ger(-1.0 / denom, &self.work, &self.work, 1.0);
        }
        self.theta_hat.gemv(1.0, &self.v_inv, &self.b, 0.0);
    }

    /// Rebuild `V⁻¹` from `V` by Cholesky factorization.
    pub fn refactor(&mut self) {
        // V = λI + Σxxᵀ is positive definite by construction.
        let inv = self
            .v
            .clone()
            .cholesky()
            .expect("ridge Gram matrix lost positive definiteness")
            .inverse();
        self.v_inv = (&inv + inv.transpose()) * 0.5;
        self.theta_hat.gemv(1.0, &self.v_inv, &self.b, 0.0);
    }

    /// `max |V·V⁻¹ - I|`.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.dim();
        (&self.v * &self.v_inv - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// `‖x‖_{V⁻¹} = sqrt(xᵀ V⁻¹ x)`.
    pub fn inverse_norm(&self, x: &DVector<f64>) -> f64 {
        quadratic_form(&self.v_inv, x).max(0.0).sqrt()
    }
}

/// `xᵀ M x` without allocating.
fn quadratic_form(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    m.column_iter()
        .zip(x.iter())
        .map(|(col, &xj)| col.dot(x) * xj)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert!((a - b).amax() <= tol, "{a} vs {b}");
    }

    #[test]
    fn orthonormal_basis_projector() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let p = Projector::from_basis(&a).unwrap();
        assert_close(
            p.matrix(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0])),
            1e-12,
        );
        assert_eq!(p.subspace_dim(), 2);
    }

    #[test]
    fn rank_one_projector() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let p = Projector::from_basis(&a).unwrap();
        assert_close(p.matrix(), &DMatrix::from_element(2, 2, 0.5), 1e-12);
        let y = p.apply(&DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert!((y - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-12);
    }

    #[test]
    fn dependent_basis_is_rejected() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(Projector::from_basis(&a), Err(Error::DegenerateBasis(_))));
        let wide = DMatrix::from_element(2, 3, 1.0);
        assert!(matches!(Projector::from_basis(&wide), Err(Error::DegenerateBasis(_))));
    }

    #[test]
    fn diagonal_projectors() {
        let p = Projector::diagonal(3, 2).unwrap();
        assert_eq!(
            p.matrix(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]))
        );
        let wine = Projector::diagonal(13, 12).unwrap();
        for i in 0..13 {
            assert_eq!(wine.matrix()[(i, i)], if i < 12 { 1.0 } else { 0.0 });
        }
        assert_eq!(Projector::diagonal(5, 5).unwrap().matrix(), &DMatrix::identity(5, 5));
        assert!(matches!(Projector::diagonal(3, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(Projector::diagonal(3, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn apply_checks_dimension() {
        let p = Projector::diagonal(3, 2).unwrap();
        let y = apply_projection(&p, &DVector::from_vec(vec![3.0, 4.0, 5.0])).unwrap();
        assert_eq!(y, DVector::from_vec(vec![3.0, 4.0, 0.0]));
        assert!(p.apply(&DVector::zeros(2)).is_err());
    }

    #[test]
    fn ridge_starts_at_scaled_identity() {
        let s = RidgeState::new(4, 1.0).unwrap();
        assert_eq!(s.v_inv(), &DMatrix::identity(4, 4));
        assert_eq!(s.theta_hat(), &DVector::zeros(4));
        assert!(RidgeState::new(4, 0.0).is_err());
    }

    #[test]
    fn ridge_single_update() {
        let mut s = RidgeState::new(3, 1.0).unwrap();
        s.update(&DVector::from_vec(vec![1.0, 0.0, 0.0]), 2.0);
        assert!((s.theta_hat() - DVector::from_vec(vec![1.0, 0.0, 0.0])).amax() < 1e-15);
        assert_eq!(s.t(), 1);
    }

    #[test]
    fn ridge_refactor_keeps_inverse_tight() {
        let mut s = RidgeState::new(3, 1.0).unwrap();
        for i in 0..(REFACTOR_INTERVAL + 7) {
            let f = i as f64;
            s.update(&DVector::from_vec(vec![f.sin(), f.cos(), 0.5]), f.sin());
        }
        assert!(s.inverse_residual() < OPERATIONAL_TOL);
    }

    #[test]
    fn min_eigen_basic_cases() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let v = min_eigen_in_span(&m, &[e1.clone(), e2.clone()]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let ident = DMatrix::identity(2, 2);
        let v = min_eigen_in_span(&ident, &[DVector::from_vec(vec![1.0, 1.0])]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // restricted to the e2 axis only the 4 is visible
        let v = min_eigen_in_span(&m, std::slice::from_ref(&e2)).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert!(matches!(
            min_eigen_in_span(&m, &[e1.clone(), e1 * 2.0]),
            Err(Error::DegenerateBasis(_))
        ));
        assert!(min_eigen_in_span(&m, &[]).is_err());
    }

    #[test]
    fn span_containment() {
        let p = Projector::diagonal(3, 1).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!(range_outside_span(&p, &[e1.clone(), e2.clone()]).unwrap() < 1e-12);
        assert!(range_outside_span(&p, &[e2]).unwrap() > 0.5);
    }
}
