//! Operator equations `A X = B`: the range-inclusion test, the reduced
//! solution, solutions with a prescribed range, and the oblique
//! pseudoinverse determined by a pair of projections.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, null_basis, oblique_projector, pinv, range_basis, relative, require, spectral_norm, svd,
    ObliqueProjection, Scalar, Subspace, Tolerances,
};

/// A solution of `A X = B` with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DouglasSolution<T: Scalar> {
    pub solution: DMatrix<T>,
    /// `||A X - B|| / ||B||`.
    pub residual: f64,
    /// Relative distance of the columns of the solution from the required range.
    pub range_constraint_violation: f64,
}

fn same_rows<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<()> {
    require(a.nrows() == b.nrows(), || {
        format!(
            "A has {} rows but B has {} rows",
            a.nrows(),
            b.nrows()
        )
    })
}

fn inclusion_residual<T: Scalar>(b: &DMatrix<T>, a: &DMatrix<T>, tol: &Tolerances) -> Result<f64> {
    let range = range_basis(a, tol)?;
    Ok(relative(range.distance_of(b), b.norm()))
}

/// `R(B) ⊆ R(A)`, decided as `||(I - P_R(A)) B|| <= residual_rel ||B||`.
pub fn range_included<T: Scalar>(b: &DMatrix<T>, a: &DMatrix<T>, tol: &Tolerances) -> Result<bool> {
    same_rows(a, b)?;
    if b.norm() == 0.0 {
        return Ok(true);
    }
    Ok(inclusion_residual(b, a, tol)? <= tol.residual_rel())
}

/// The unique solution `D = A^† B` with `R(D) ⊆ R(A^H)`.
pub fn reduced_solution<T: Scalar>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    tol: &Tolerances,
) -> Result<DouglasSolution<T>> {
    same_rows(a, b)?;
    if b.norm() > 0.0 {
        let residual = inclusion_residual(b, a, tol)?;
        if residual > tol.residual_rel() {
            return Err(Error::NoSolution { residual });
        }
    }
    let solution = pinv(a, tol)? * b;
    let row_space = range_basis(&a.adjoint(), tol)?;
    Ok(DouglasSolution {
        residual: relative((a * &solution - b).norm(), b.norm()),
        range_constraint_violation: relative(row_space.distance_of(&solution), solution.norm()),
        solution,
    })
}

/// Both sides of the norm identity for a reduced solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormCertificate {
    /// Smallest `λ` with `λ A A^H - B B^H` positive semidefinite.
    pub infimum: f64,
    /// `||D||^2` in the operator norm.
    pub reduced_norm_sq: f64,
}

impl NormCertificate {
    pub fn relative_gap(&self) -> f64 {
        relative((self.infimum - self.reduced_norm_sq).abs(), self.infimum.max(self.reduced_norm_sq))
    }
}

/// Computes `inf { λ > 0 : B B^H <= λ A A^H }` on `R(A)` and pairs it with
/// `||D||^2`.
///
/// Writing `A = U_r Σ_r V_r^H`, the infimum is the largest eigenvalue of
/// `Σ_r^{-1} U_r^H B B^H U_r Σ_r^{-1}`. On `N(A^H)` the inequality holds
/// trivially once `R(B) ⊆ R(A)`.
pub fn douglas_norm_certificate<T: Scalar>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    d: &DMatrix<T>,
    tol: &Tolerances,
) -> Result<NormCertificate> {
    same_rows(a, b)?;
    require(d.nrows() == a.ncols() && d.ncols() == b.ncols(), || {
        format!(
            "solution is {}x{}, expected {}x{}",
            d.nrows(),
            d.ncols(),
            a.ncols(),
            b.ncols()
        )
    })?;
    let dec = svd(a)?;
    let r = dec.rank(tol);
    let reduced_norm_sq = spectral_norm(d)?.powi(2);
    if r == 0 {
        return Ok(NormCertificate {
            infimum: 0.0,
            reduced_norm_sq,
        });
    }
    let mut whitened = dec.u.columns(0, r).adjoint() * b;
    for (i, mut row) in whitened.row_iter_mut().enumerate() {
        row *= T::from_real(1.0 / dec.sigma[i]);
    }
    let pencil = &whitened * whitened.adjoint();
    let (eigenvalues, _) = hermitian_eigen(&pencil)?;
    let infimum = eigenvalues.iter().copied().fold(0.0, f64::max);
    Ok(NormCertificate {
        infimum,
        reduced_norm_sq,
    })
}

/// The unique solution of `A X = B` whose range lies in `M`, where
/// `M ⊕ N(A)` is the whole domain. Computed as `P_{M∥N(A)} A^† B`.
pub fn constrained_solution<T: Scalar>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    m: &Subspace<T>,
    tol: &Tolerances,
) -> Result<DouglasSolution<T>> {
    require(m.ambient_dim() == a.ncols(), || {
        format!(
            "subspace lives in dimension {}, A has {} columns",
            m.ambient_dim(),
            a.ncols()
        )
    })?;
    let reduced = reduced_solution(a, b, tol)?;
    let kernel = null_basis(a, tol)?;
    let proj = oblique_projector(m, &kernel, tol)?;
    let solution = proj.matrix() * &reduced.solution;
    Ok(DouglasSolution {
        residual: relative((a * &solution - b).norm(), b.norm()),
        range_constraint_violation: relative(m.distance_of(&solution), solution.norm()),
        solution,
    })
}

fn check_pair<T: Scalar>(
    b: &DMatrix<T>,
    p: &ObliqueProjection<T>,
    q: &ObliqueProjection<T>,
    tol: &Tolerances,
) -> Result<()> {
    let (m, n) = b.shape();
    require(p.ambient_dim() == m && q.ambient_dim() == n, || {
        format!(
            "B is {m}x{n} but P is {0}x{0} and Q is {1}x{1}",
            p.ambient_dim(),
            q.ambient_dim()
        )
    })?;
    let rb = range_basis(b, tol)?;
    let gap = p.range().principal_residual(&rb);
    if gap > tol.residual_rel() {
        return Err(Error::Precondition(format!(
            "R(P) = R(B) fails (residual {gap:.3e})"
        )));
    }
    let nb = null_basis(b, tol)?;
    let gap = q.nullspace().principal_residual(&nb);
    if gap > tol.residual_rel() {
        return Err(Error::Precondition(format!(
            "N(Q) = N(B) fails (residual {gap:.3e})"
        )));
    }
    Ok(())
}

/// The oblique pseudoinverse: the unique `C` with `B C = P` and `C B = Q`,
/// for projections with `R(P) = R(B)` and `N(Q) = N(B)`. Evaluated as
/// `Q B^† P`.
pub fn oblique_pinv<T: Scalar>(
    b: &DMatrix<T>,
    p: &ObliqueProjection<T>,
    q: &ObliqueProjection<T>,
    tol: &Tolerances,
) -> Result<DMatrix<T>> {
    check_pair(b, p, q, tol)?;
    Ok(q.matrix() * pinv(b, tol)? * p.matrix())
}

/// `Q B1 P` for a caller-supplied {1}-inverse `B1` (`B B1 B = B`).
/// The result does not depend on which {1}-inverse is used.
pub fn oblique_pinv_with_inverse<T: Scalar>(
    b: &DMatrix<T>,
    inner_inverse: &DMatrix<T>,
    p: &ObliqueProjection<T>,
    q: &ObliqueProjection<T>,
    tol: &Tolerances,
) -> Result<DMatrix<T>> {
    require(inner_inverse.shape() == (b.ncols(), b.nrows()), || {
        format!(
            "{{1}}-inverse must be {}x{}",
            b.ncols(),
            b.nrows()
        )
    })?;
    let defect = relative((b * inner_inverse * b - b).norm(), b.norm());
    if defect > tol.residual_rel() {
        return Err(Error::Precondition(format!(
            "B X B = B fails for the supplied inverse (residual {defect:.3e})"
        )));
    }
    check_pair(b, p, q, tol)?;
    Ok(q.matrix() * inner_inverse * p.matrix())
}
