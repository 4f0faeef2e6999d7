//! Compatible pairs `(A, S)` of a positive semidefinite weight and a subspace,
//! the canonical `A`-Hermitian projection `P_{A,S}` onto `S`, and the affine
//! family of all `A`-Hermitian projections with range `S`.
//!
//! Everything is computed in the block picture induced by `S ⊕ S⊥`. With `U`
//! an orthonormal basis of `S` and `W` one of `S⊥`, the equation
//! `P A P X = P A (I - P)` becomes `(U^H A U) d = U^H A W`, its reduced
//! solution is `d`, and `P_{A,S} = U (U^H + d W^H)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    check_psd, idempotency_defect, range_basis, relative, require, spectral_norm, svd, ObliqueProjection,
    Scalar, Subspace, Tolerances,
};

/// `||A Q - Q^H A|| / (||A|| max(1, ||Q||))`.
pub fn a_hermitian_residual<T: Scalar>(a: &DMatrix<T>, q: &DMatrix<T>) -> f64 {
    let scale = a.norm() * q.norm().max(1.0);
    relative((a * q - q.adjoint() * a).norm(), scale)
}

/// Whether `A Q = Q^H A` to tolerance.
pub fn is_a_hermitian<T: Scalar>(a: &DMatrix<T>, q: &DMatrix<T>, tol: &Tolerances) -> Result<bool> {
    require(a.is_square() && a.shape() == q.shape(), || {
        format!(
            "weight is {}x{} and projection is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )
    })?;
    Ok(a_hermitian_residual(a, q) <= tol.residual_rel())
}

/// The blocks of `A` in the splitting `S ⊕ S⊥`, with the spectral split of
/// the Gram block `U^H A U` decided against the scale of `A` itself; noise of
/// order `eps ||A||` in the Gram block is not rank.
struct Blocks<T: Scalar> {
    perp: Subspace<T>,
    cross: DMatrix<T>,
    /// Eigenvectors of the Gram block for the retained eigenvalues.
    kept: DMatrix<T>,
    kept_values: Vec<f64>,
    /// Eigenvectors spanning the numerical nullspace of the Gram block.
    dropped: DMatrix<T>,
    scale: f64,
}

fn blocks<T: Scalar>(a: &DMatrix<T>, s: &Subspace<T>, tol: &Tolerances) -> Result<Blocks<T>> {
    check_psd(a, tol)?;
    require(a.nrows() == s.ambient_dim(), || {
        format!(
            "weight is {0}x{0} but the subspace lives in dimension {1}",
            a.nrows(),
            s.ambient_dim()
        )
    })?;
    let perp = s.complement(tol)?;
    let u = s.basis();
    let au = u.adjoint() * a;
    let gram = crate::linalg::hermitian_part(&(&au * u));
    let k = gram.nrows();
    let scale = spectral_norm(a)?;
    let dec = svd(&gram)?;
    let cutoff = tol.rank_rel() * a.nrows().max(1) as f64 * scale;
    let r = if scale == 0.0 {
        0
    } else {
        dec.sigma.iter().filter(|&&x| x > cutoff).count()
    };
    Ok(Blocks {
        cross: &au * perp.basis(),
        kept: dec.u.columns(0, r).into_owned(),
        kept_values: dec.sigma.iter().take(r).copied().collect(),
        dropped: if k == 0 { DMatrix::zeros(0, 0) } else { dec.v.columns(r, k - r).into_owned() },
        perp,
        scale,
    })
}

impl<T: Scalar> Blocks<T> {
    /// `||(I - P_{R(G)}) H||`, relative to `||A||`.
    fn inclusion_residual(&self) -> f64 {
        let h = &self.cross;
        let outside = h - &self.kept * (self.kept.adjoint() * h);
        relative(outside.norm(), self.scale)
    }
}

/// Numerical compatibility diagnostic: solvability of `P A P X = P A (I - P)`.
/// In finite dimensions every pair is compatible, so `false` means the
/// equation is too ill-conditioned at the given tolerances.
pub fn is_compatible<T: Scalar>(a: &DMatrix<T>, s: &Subspace<T>, tol: &Tolerances) -> Result<bool> {
    let b = blocks(a, s, tol)?;
    Ok(b.inclusion_residual() <= tol.residual_rel())
}

/// `d = G^† H` on the retained spectrum of the Gram block.
fn coupling<T: Scalar>(b: &Blocks<T>, tol: &Tolerances) -> Result<DMatrix<T>> {
    let residual = b.inclusion_residual();
    if residual > tol.residual_rel() {
        return Err(Error::Incompatible(format!(
            "P A P X = P A (I - P) is not solvable (relative residual {residual:.3e})"
        )));
    }
    let mut scaled = b.kept.adjoint() * &b.cross;
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row /= T::from_real(b.kept_values[i]);
    }
    Ok(&b.kept * scaled)
}

fn assemble<T: Scalar>(
    s: &Subspace<T>,
    perp: &Subspace<T>,
    coupling: &DMatrix<T>,
    tol: &Tolerances,
) -> Result<ObliqueProjection<T>> {
    let n = s.ambient_dim();
    if s.is_trivial() {
        return Ok(ObliqueProjection::from_parts(
            DMatrix::zeros(n, n),
            s.clone(),
            Subspace::full(n),
        ));
    }
    if perp.is_trivial() {
        return Ok(ObliqueProjection::from_parts(
            DMatrix::identity(n, n),
            s.clone(),
            Subspace::zero(n),
        ));
    }
    let u = s.basis();
    let matrix = u * (u.adjoint() + coupling * perp.basis().adjoint());
    // N(Q) is spanned by the columns of W - U d.
    let nullspace = range_basis(&(perp.basis() - u * coupling), tol)?;
    Ok(ObliqueProjection::from_parts(matrix, s.clone(), nullspace))
}

fn validate<T: Scalar>(
    a: &DMatrix<T>,
    s: &Subspace<T>,
    q: &ObliqueProjection<T>,
    tol: &Tolerances,
) -> Result<()> {
    let res = tol.residual_rel();
    let defect = q.idempotency_defect();
    if defect > res {
        return Err(Error::Incompatible(format!(
            "projection is not idempotent (defect {defect:.3e})"
        )));
    }
    let outside = relative(s.distance_of(q.matrix()), q.matrix().norm());
    if outside > res {
        return Err(Error::Incompatible(format!(
            "projection leaves the subspace (residual {outside:.3e})"
        )));
    }
    let h = a_hermitian_residual(a, q.matrix());
    if h > res {
        return Err(Error::Incompatible(format!(
            "projection is not A-Hermitian (residual {h:.3e})"
        )));
    }
    Ok(())
}

/// `P_{A,S} = P_S + D`, the projection onto `S` with nullspace
/// `A^{-1}(S⊥) ⊖ (N(A) ∩ S)`.
pub fn canonical_projection<T: Scalar>(
    a: &DMatrix<T>,
    s: &Subspace<T>,
    tol: &Tolerances,
) -> Result<ObliqueProjection<T>> {
    let b = blocks(a, s, tol)?;
    let d = coupling(&b, tol)?;
    let q = assemble(s, &b.perp, &d, tol)?;
    validate(a, s, &q, tol)?;
    Ok(q)
}

/// The affine manifold `P(A,S) = P_{A,S} + L(S⊥, N(A) ∩ S)`.
///
/// Parameters are matrices of shape `dim(N(A) ∩ S) x dim(S⊥)` expressed in
/// the stored orthonormal bases of the two subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionFamily<T: Scalar> {
    canonical: ObliqueProjection<T>,
    range: Subspace<T>,
    free_target: Subspace<T>,
    free_source: Subspace<T>,
    weight: DMatrix<T>,
    coupling: DMatrix<T>,
    tol: Tolerances,
}

pub fn family<T: Scalar>(a: &DMatrix<T>, s: &Subspace<T>, tol: &Tolerances) -> Result<ProjectionFamily<T>> {
    let b = blocks(a, s, tol)?;
    let d = coupling(&b, tol)?;
    let canonical = assemble(s, &b.perp, &d, tol)?;
    validate(a, s, &canonical, tol)?;
    // N(A) ∩ S = U N(U^H A U) for positive semidefinite A.
    let free_target = if s.is_trivial() {
        Subspace::zero(s.ambient_dim())
    } else {
        Subspace::span(&(s.basis() * &b.dropped), tol)?
    };
    Ok(ProjectionFamily {
        canonical,
        range: s.clone(),
        free_target,
        free_source: b.perp,
        weight: a.clone(),
        coupling: d,
        tol: *tol,
    })
}

impl<T: Scalar> ProjectionFamily<T> {
    pub fn canonical(&self) -> &ObliqueProjection<T> {
        &self.canonical
    }

    pub fn range(&self) -> &Subspace<T> {
        &self.range
    }

    /// `N(A) ∩ S`.
    pub fn free_target(&self) -> &Subspace<T> {
        &self.free_target
    }

    /// `S⊥`.
    pub fn free_source(&self) -> &Subspace<T> {
        &self.free_source
    }

    pub fn weight(&self) -> &DMatrix<T> {
        &self.weight
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// `(dim N(A) ∩ S, dim S⊥)`.
    pub fn parameter_shape(&self) -> (usize, usize) {
        (self.free_target.dim(), self.free_source.dim())
    }

    pub fn parameter_dim(&self) -> usize {
        let (t, s) = self.parameter_shape();
        t * s
    }

    pub fn is_singleton(&self) -> bool {
        self.parameter_dim() == 0
    }

    /// `P_{A,S} + T Z S^H`, with `T`, `S` the stored bases of `N(A) ∩ S` and
    /// `S⊥`. Any `Z` is accepted when the family is a singleton.
    pub fn member(&self, z: &DMatrix<T>) -> Result<ObliqueProjection<T>> {
        if self.is_singleton() {
            return Ok(self.canonical.clone());
        }
        let shape = self.parameter_shape();
        require(z.shape() == shape, || {
            format!(
                "parameter must be {}x{}, got {}x{}",
                shape.0,
                shape.1,
                z.nrows(),
                z.ncols()
            )
        })?;
        crate::linalg::check_finite(z)?;
        let u = self.range.basis();
        let shifted = &self.coupling + u.adjoint() * self.free_target.basis() * z;
        let q = assemble(&self.range, &self.free_source, &shifted, &self.tol)?;
        validate(&self.weight, &self.range, &q, &self.tol)?;
        Ok(q)
    }

    /// Coordinates of a member relative to the canonical projection, the
    /// inverse of [`ProjectionFamily::member`].
    pub fn parameter_of(&self, q: &DMatrix<T>) -> Result<DMatrix<T>> {
        let n = self.range.ambient_dim();
        require(q.shape() == (n, n), || format!("projection must be {n}x{n}"))?;
        let delta = q - self.canonical.matrix();
        Ok(self.free_target.basis().adjoint() * delta * self.free_source.basis())
    }
}

/// Checks idempotence, range and `A`-Hermitian property of an arbitrary
/// matrix against the family's defining conditions.
pub fn in_family<T: Scalar>(fam: &ProjectionFamily<T>, q: &DMatrix<T>) -> bool {
    let n = fam.range.ambient_dim();
    if q.shape() != (n, n) {
        return false;
    }
    let tol = &fam.tol;
    let res = tol.residual_rel();
    idempotency_defect(q) <= res
        && relative(fam.range.distance_of(q), q.norm()) <= res
        && (q * fam.range.basis() - fam.range.basis()).norm() <= res * q.norm().max(1.0)
        && a_hermitian_residual(&fam.weight, q) <= res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::null_basis;
    use crate::linalg::{orth_projector, preimage, subspace_intersect, subspace_ominus};
    use nalgebra::dmatrix;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn span(m: DMatrix<f64>) -> Subspace<f64> {
        Subspace::span(&m, &tol()).unwrap()
    }

    #[test]
    fn compatibility_examples() {
        let spd = dmatrix![2.0, 1.0, 0.0; 1.0, 2.0, 1.0; 0.0, 1.0, 2.0];
        let s = span(dmatrix![1.0, 0.0; 1.0, 1.0; 0.0, 2.0]);
        assert!(is_compatible(&spd, &s, &tol()).unwrap());
        assert!(is_compatible(&DMatrix::zeros(3, 3), &s, &tol()).unwrap());
        // 1-dimensional equation 1 * x = 1.
        assert!(is_compatible(&dmatrix![1.0, 1.0; 1.0, 1.0], &span(dmatrix![1.0; 0.0]), &tol()).unwrap());
        assert!(matches!(
            is_compatible(&dmatrix![1.0, 0.0; 0.0, -1.0], &span(dmatrix![1.0; 0.0]), &tol()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn canonical_projection_examples() {
        let s = span(dmatrix![1.0, 0.0; 1.0, 1.0; 0.0, 2.0]);
        let q = canonical_projection(&DMatrix::identity(3, 3), &s, &tol()).unwrap();
        assert!((q.matrix() - orth_projector(&s, &tol()).unwrap().matrix()).norm() < 1e-14);

        let a = dmatrix![1.0, 1.0; 1.0, 1.0];
        let q = canonical_projection(&a, &span(dmatrix![1.0; 0.0]), &tol()).unwrap();
        assert!((q.matrix() - dmatrix![1.0, 1.0; 0.0, 0.0]).norm() < 1e-14);
        assert!(q.nullspace().approx_eq(&span(dmatrix![1.0; -1.0]), &tol()));

        let q = canonical_projection(&a, &Subspace::full(2), &tol()).unwrap();
        assert_eq!(q.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn canonical_nullspace_matches_formula() {
        // Rank-one weight with N(A) ∩ S nontrivial.
        let g = dmatrix![1.0; 0.0; 0.0; 1.0];
        let a = &g * g.transpose();
        let s = span(dmatrix![0.0, 0.0; 1.0, 0.0; 0.0, 1.0; 1.0, 1.0]);
        let q = canonical_projection(&a, &s, &tol()).unwrap();
        let perp = s.complement(&tol()).unwrap();
        let pre = preimage(&a, &perp, &tol()).unwrap();
        let kernel = null_basis(&a, &tol()).unwrap();
        let expected = subspace_ominus(&pre, &subspace_intersect(&kernel, &s, &tol()).unwrap(), &tol()).unwrap();
        assert!(q.nullspace().approx_eq(&expected, &tol()));
        assert!((q.matrix() * expected.basis()).norm() < 1e-12);
        assert_eq!(q.nullspace().dim(), 4 - s.dim());
    }

    #[test]
    fn family_dimensions() {
        let spd = dmatrix![2.0, 1.0; 1.0, 2.0];
        assert!(family(&spd, &span(dmatrix![1.0; 0.0]), &tol()).unwrap().is_singleton());

        let f = family(&dmatrix![1.0, 0.0; 0.0, 0.0], &Subspace::full(2), &tol()).unwrap();
        assert!(f.free_target().approx_eq(&span(dmatrix![0.0; 1.0]), &tol()));
        assert_eq!(f.free_source().dim(), 0);
        assert_eq!(f.parameter_dim(), 0);

        let f = family(&DMatrix::zeros(2, 2), &span(dmatrix![1.0; 0.0]), &tol()).unwrap();
        assert_eq!(f.parameter_shape(), (1, 1));
        assert_eq!(f.parameter_dim(), 1);
    }

    #[test]
    fn member_examples() {
        let f = family(&DMatrix::zeros(2, 2), &span(dmatrix![1.0; 0.0]), &tol()).unwrap();
        assert_eq!(f.member(&dmatrix![0.0]).unwrap(), *f.canonical());
        let m = f.member(&dmatrix![1.0]).unwrap();
        assert!((m.matrix() - dmatrix![1.0, 1.0; 0.0, 0.0]).norm() < 1e-15);
        assert!(m.nullspace().approx_eq(&span(dmatrix![1.0; -1.0]), &tol()));
        assert!(in_family(&f, m.matrix()));
        assert!((f.parameter_of(m.matrix()).unwrap() - dmatrix![1.0]).norm() < 1e-15);
        assert!(matches!(f.member(&dmatrix![1.0, 2.0]), Err(Error::Dimension(_))));

        let spd = family(&dmatrix![2.0, 1.0; 1.0, 2.0], &span(dmatrix![1.0; 0.0]), &tol()).unwrap();
        assert_eq!(spd.member(&dmatrix![5.0, 1.0]).unwrap(), *spd.canonical());
    }

    #[test]
    fn a_hermitian_examples() {
        let q = dmatrix![0.5, 0.5; 0.5, 0.5];
        assert!(is_a_hermitian(&DMatrix::identity(2, 2), &q, &tol()).unwrap());
        assert!(is_a_hermitian(&dmatrix![3.0, 1.0; 1.0, 2.0], &DMatrix::zeros(2, 2), &tol()).unwrap());
        assert!(is_a_hermitian(&dmatrix![1.0, 1.0; 1.0, 1.0], &dmatrix![1.0, 1.0; 0.0, 0.0], &tol()).unwrap());
        assert!(!is_a_hermitian(&DMatrix::identity(2, 2), &dmatrix![1.0, 1.0; 0.0, 0.0], &tol()).unwrap());
    }

    #[test]
    fn trivial_subspace_family() {
        let a = dmatrix![1.0, 0.0; 0.0, 0.0];
        let f = family(&a, &Subspace::zero(2), &tol()).unwrap();
        assert_eq!(f.canonical().matrix(), &DMatrix::zeros(2, 2));
        assert!(f.is_singleton());
    }
}
