//! Dense primitives shared by every construction in the crate.
//!
//! Matrices are `nalgebra::DMatrix` values over a [`Scalar`], either `f64` or
//! `Complex<f64>`. Adjoints are conjugate transposes throughout, so real and
//! complex inputs go through the same code. A [`Subspace`] is stored as an
//! orthonormal basis; the trivial subspace is a basis with zero columns.
//!
//! Every rank decision uses the same rule: a singular value counts when it
//! exceeds `rank_rel * max(rows, cols) * sigma_max`.

pub use nalgebra::Complex;
use nalgebra::{ComplexField, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Field of matrix entries: `f64` or `Complex<f64>`.
pub trait Scalar: ComplexField<RealField = f64> + Copy + backend::Decompose {}

impl Scalar for f64 {}
impl Scalar for Complex<f64> {}

/// Dense decompositions, delegated to faer.
mod backend {
    use nalgebra::{Complex, DMatrix};

    pub trait Decompose: Sized {
        /// Thin SVD `(U, sigma, V)`, or `None` if the iteration fails.
        fn thin_svd(m: &DMatrix<Self>) -> Option<(DMatrix<Self>, Vec<f64>, DMatrix<Self>)>;
        /// Eigenpairs of a Hermitian matrix (lower triangle referenced),
        /// eigenvalues ascending.
        fn hermitian_eigen(m: &DMatrix<Self>) -> Option<(Vec<f64>, DMatrix<Self>)>;
    }

    macro_rules! via_faer {
        ($t:ty, $re:expr) => {
            impl Decompose for $t {
                fn thin_svd(m: &DMatrix<$t>) -> Option<(DMatrix<$t>, Vec<f64>, DMatrix<$t>)> {
                    let f = faer::Mat::<$t>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
                    let dec = f.thin_svd().ok()?;
                    let (u, v) = (dec.U(), dec.V());
                    let s = dec.S().column_vector();
                    let sigma = (0..s.nrows()).map(|i| $re(s[i])).collect();
                    Some((
                        DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
                        sigma,
                        DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
                    ))
                }

                fn hermitian_eigen(m: &DMatrix<$t>) -> Option<(Vec<f64>, DMatrix<$t>)> {
                    let f = faer::Mat::<$t>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
                    let dec = f.self_adjoint_eigen(faer::Side::Lower).ok()?;
                    let u = dec.U();
                    let s = dec.S().column_vector();
                    let values = (0..s.nrows()).map(|i| $re(s[i])).collect();
                    Some((values, DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)])))
                }
            }
        };
    }

    via_faer!(f64, |x: f64| x);
    via_faer!(Complex<f64>, |x: Complex<f64>| x.re);
}

/// Rank cutoff and residual acceptance threshold, both relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    rank_rel: f64,
    residual_rel: f64,
}

impl Tolerances {
    pub fn new(rank_rel: f64, residual_rel: f64) -> Result<Self> {
        for (name, value) in [("rank_rel", rank_rel), ("residual_rel", residual_rel)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} = {value} must lie strictly between 0 and 1"
                )));
            }
        }
        Ok(Self {
            rank_rel,
            residual_rel,
        })
    }

    pub fn rank_rel(&self) -> f64 {
        self.rank_rel
    }

    pub fn residual_rel(&self) -> f64 {
        self.residual_rel
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rel: 1e-12,
            residual_rel: 1e-8,
        }
    }
}

/// `num / den`, or `num` itself when the scale vanishes.
pub(crate) fn relative(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub(crate) fn require(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Dimension(what()))
    }
}

pub fn check_finite<T: Scalar>(m: &DMatrix<T>) -> Result<()> {
    if m
        .iter()
        .all(|x| x.real().is_finite() && x.imaginary().is_finite())
    {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Thin singular value decomposition `M = U diag(sigma) V^H`, sigma descending.
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn rank(&self, tol: &Tolerances) -> usize {
        rank_from_singular_values(self.sigma.as_slice(), self.u.nrows(), self.v.nrows(), tol)
    }
}

pub fn svd<T: Scalar>(m: &DMatrix<T>) -> Result<Svd<T>> {
    check_finite(m)?;
    let (rows, cols) = m.shape();
    if rows.min(cols) == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(rows, 0),
            sigma: DVector::zeros(0),
            v: DMatrix::zeros(cols, 0),
        });
    }
    let (u, sigma, v) = T::thin_svd(m).ok_or(Error::Convergence("singular value decomposition"))?;
    // Reorder defensively; rank decisions assume descending values.
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    Ok(Svd {
        u: u.select_columns(&order),
        sigma: DVector::from_iterator(order.len(), order.iter().map(|&i| sigma[i])),
        v: v.select_columns(&order),
    })
}

/// Eigendecomposition of the Hermitian part of `h`: eigenvalues ascending
/// and the matching orthonormal eigenvectors.
pub fn hermitian_eigen<T: Scalar>(h: &DMatrix<T>) -> Result<(DVector<f64>, DMatrix<T>)> {
    check_finite(h)?;
    require(h.is_square(), || format!("expected a square matrix, got {}x{}", h.nrows(), h.ncols()))?;
    if h.nrows() == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let (values, vectors) =
        T::hermitian_eigen(&hermitian_part(h)).ok_or(Error::Convergence("Hermitian eigendecomposition"))?;
    Ok((DVector::from_vec(values), vectors))
}

fn rank_from_singular_values(sigma: &[f64], rows: usize, cols: usize, tol: &Tolerances) -> usize {
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    rank_at_scale(sigma, rows, cols, smax, tol)
}

/// Rank with the cutoff measured against `scale` instead of the largest
/// singular value, for matrices that may be pure rounding noise.
fn rank_at_scale(sigma: &[f64], rows: usize, cols: usize, scale: f64, tol: &Tolerances) -> usize {
    if scale == 0.0 {
        return 0;
    }
    let cutoff = tol.rank_rel * rows.max(cols) as f64 * scale;
    sigma.iter().filter(|&&s| s > cutoff).count()
}

pub fn numeric_rank<T: Scalar>(m: &DMatrix<T>, tol: &Tolerances) -> Result<usize> {
    Ok(svd(m)?.rank(tol))
}

/// Largest singular value.
pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> Result<f64> {
    Ok(svd(m)?.sigma.iter().copied().fold(0.0, f64::max))
}

/// Moore-Penrose inverse by SVD truncated at the numeric rank.
pub fn pinv<T: Scalar>(m: &DMatrix<T>, tol: &Tolerances) -> Result<DMatrix<T>> {
    let s = svd(m)?;
    let r = s.rank(tol);
    if r == 0 {
        return Ok(DMatrix::zeros(m.ncols(), m.nrows()));
    }
    let mut vr = s.v.columns(0, r).into_owned();
    for (j, mut col) in vr.column_iter_mut().enumerate() {
        col *= T::from_real(1.0 / s.sigma[j]);
    }
    Ok(vr * s.u.columns(0, r).adjoint())
}

/// Rotates every basis column so that its first dominant entry is real and
/// positive. Makes bases, and everything built from them, reproducible.
fn fix_phases<T: Scalar>(mut basis: DMatrix<T>) -> DMatrix<T> {
    for mut col in basis.column_iter_mut() {
        let max = col.iter().map(|x| x.modulus()).fold(0.0, f64::max);
        if max == 0.0 {
            continue;
        }
        if let Some(pivot) = col.iter().copied().find(|x| x.modulus() >= max * (1.0 - 1e-8)) {
            let phase = pivot.unscale(pivot.modulus()).conjugate();
            col *= phase;
        }
    }
    basis
}

/// Orthonormal basis of the column space.
pub fn range_basis<T: Scalar>(m: &DMatrix<T>, tol: &Tolerances) -> Result<Subspace<T>> {
    range_basis_with(m, None, tol)
}

fn range_basis_with<T: Scalar>(m: &DMatrix<T>, scale: Option<f64>, tol: &Tolerances) -> Result<Subspace<T>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Subspace::zero(rows));
    }
    let s = svd(m)?;
    let r = match scale {
        Some(scale) => rank_at_scale(s.sigma.as_slice(), rows, cols, scale, tol),
        None => s.rank(tol),
    };
    Ok(Subspace {
        basis: fix_phases(s.u.columns(0, r).into_owned()),
    })
}

/// Orthonormal basis of the nullspace.
pub fn null_basis<T: Scalar>(m: &DMatrix<T>, tol: &Tolerances) -> Result<Subspace<T>> {
    null_basis_with(m, None, tol)
}

fn null_basis_with<T: Scalar>(m: &DMatrix<T>, scale: Option<f64>, tol: &Tolerances) -> Result<Subspace<T>> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Ok(Subspace::zero(0));
    }
    if rows == 0 {
        return Ok(Subspace::full(cols));
    }
    // Wide matrices are padded with zero rows so the SVD yields all of V.
    let s = if rows < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.rows_mut(0, rows).copy_from(m);
        svd(&padded)?
    } else {
        svd(m)?
    };
    let r = match scale {
        Some(scale) => rank_at_scale(s.sigma.as_slice(), rows, cols, scale, tol),
        None => rank_from_singular_values(s.sigma.as_slice(), rows, cols, tol),
    };
    Ok(Subspace {
        basis: fix_phases(s.v.columns(r, cols - r).into_owned()),
    })
}

/// Subspace of a coordinate space, held as an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T: Scalar> {
    basis: DMatrix<T>,
}

impl<T: Scalar> Subspace<T> {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Wraps columns that are already orthonormal.
    pub fn from_orthonormal(basis: DMatrix<T>, tol: &Tolerances) -> Result<Self> {
        check_finite(&basis)?;
        let k = basis.ncols();
        let defect = (basis.adjoint() * &basis - DMatrix::<T>::identity(k, k)).norm();
        if defect > tol.residual_rel {
            return Err(Error::Precondition(format!(
                "basis columns are not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Column span of arbitrary vectors.
    pub fn span(vectors: &DMatrix<T>, tol: &Tolerances) -> Result<Self> {
        range_basis(vectors, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_trivial(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    /// Orthogonal projector matrix `basis * basis^H`.
    pub fn projector(&self) -> DMatrix<T> {
        let n = self.ambient_dim();
        if self.is_trivial() {
            return DMatrix::zeros(n, n);
        }
        &self.basis * self.basis.adjoint()
    }

    pub fn complement(&self, tol: &Tolerances) -> Result<Self> {
        if self.is_trivial() {
            return Ok(Self::full(self.ambient_dim()));
        }
        null_basis(&self.basis.adjoint(), tol)
    }

    /// Frobenius distance of the given columns from the subspace.
    pub fn distance_of(&self, vectors: &DMatrix<T>) -> f64 {
        if self.is_trivial() {
            return vectors.norm();
        }
        (vectors - &self.basis * (self.basis.adjoint() * vectors)).norm()
    }

    pub fn contains(&self, other: &Subspace<T>, tol: &Tolerances) -> bool {
        self.ambient_dim() == other.ambient_dim()
            && other.dim() <= self.dim()
            && self.distance_of(&other.basis) <= tol.residual_rel
    }

    pub fn contains_vector(&self, v: &DVector<T>, tol: &Tolerances) -> bool {
        let norm = v.norm();
        norm == 0.0 || self.distance_of(&DMatrix::from_column_slice(v.len(), 1, v.as_slice())) <= tol.residual_rel * norm
    }

    /// Symmetric containment residual; zero exactly when the subspaces agree.
    pub fn principal_residual(&self, other: &Subspace<T>) -> f64 {
        self.distance_of(&other.basis).max(other.distance_of(&self.basis))
    }

    pub fn approx_eq(&self, other: &Subspace<T>, tol: &Tolerances) -> bool {
        self.ambient_dim() == other.ambient_dim()
            && self.principal_residual(other) <= tol.residual_rel
    }
}

/// Idempotent matrix together with its range and nullspace.
#[derive(Debug, Clone, PartialEq)]
pub struct ObliqueProjection<T: Scalar> {
    matrix: DMatrix<T>,
    range: Subspace<T>,
    nullspace: Subspace<T>,
}

impl<T: Scalar> ObliqueProjection<T> {
    /// Validates idempotence and computes range and nullspace.
    pub fn from_matrix(matrix: DMatrix<T>, tol: &Tolerances) -> Result<Self> {
        check_finite(&matrix)?;
        let n = matrix.nrows();
        require(matrix.is_square(), || {
            format!("projection must be square, got {}x{}", n, matrix.ncols())
        })?;
        let defect = idempotency_defect(&matrix);
        if defect > tol.residual_rel {
            return Err(Error::NotProjection(format!(
                "relative idempotency defect {defect:.3e}"
            )));
        }
        let range = range_basis(&matrix, tol)?;
        let nullspace = null_basis(&matrix, tol)?;
        if range.dim() + nullspace.dim() != n {
            return Err(Error::NotProjection(format!(
                "range and nullspace dimensions {} + {} do not add up to {n}",
                range.dim(),
                nullspace.dim()
            )));
        }
        Ok(Self {
            matrix,
            range,
            nullspace,
        })
    }

    pub(crate) fn from_parts(matrix: DMatrix<T>, range: Subspace<T>, nullspace: Subspace<T>) -> Self {
        Self {
            matrix,
            range,
            nullspace,
        }
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn range(&self) -> &Subspace<T> {
        &self.range
    }

    pub fn nullspace(&self) -> &Subspace<T> {
        &self.nullspace
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `I - P`, projecting onto the nullspace along the range.
    pub fn complementary(&self) -> Self {
        let n = self.ambient_dim();
        Self {
            matrix: DMatrix::identity(n, n) - &self.matrix,
            range: self.nullspace.clone(),
            nullspace: self.range.clone(),
        }
    }

    pub fn idempotency_defect(&self) -> f64 {
        idempotency_defect(&self.matrix)
    }
}

/// `||P^2 - P|| / max(1, ||P||^2)`.
pub fn idempotency_defect<T: Scalar>(p: &DMatrix<T>) -> f64 {
    let norm = p.norm();
    (p * p - p).norm() / norm.powi(2).max(1.0)
}

pub fn orth_projector<T: Scalar>(s: &Subspace<T>, tol: &Tolerances) -> Result<ObliqueProjection<T>> {
    Ok(ObliqueProjection {
        matrix: s.projector(),
        range: s.clone(),
        nullspace: s.complement(tol)?,
    })
}

/// Projection onto `range` along `nullspace`. The two subspaces must form a
/// direct sum of the ambient space.
pub fn oblique_projector<T: Scalar>(
    range: &Subspace<T>,
    nullspace: &Subspace<T>,
    tol: &Tolerances,
) -> Result<ObliqueProjection<T>> {
    let n = range.ambient_dim();
    require(nullspace.ambient_dim() == n, || {
        format!(
            "range lives in dimension {n}, nullspace in {}",
            nullspace.ambient_dim()
        )
    })?;
    let k = range.dim();
    if k + nullspace.dim() != n {
        return Err(Error::DirectSum);
    }
    let mut joined = DMatrix::zeros(n, n);
    joined.columns_mut(0, k).copy_from(range.basis());
    joined.columns_mut(k, n - k).copy_from(nullspace.basis());
    let dec = svd(&joined)?;
    if dec.rank(tol) < n {
        return Err(Error::DirectSum);
    }
    // Coefficients of x in the joined basis; keep the range block.
    let coeffs = pinv(&joined, tol)?;
    let matrix = if k == 0 {
        DMatrix::zeros(n, n)
    } else {
        range.basis() * coeffs.rows(0, k)
    };
    Ok(ObliqueProjection {
        matrix,
        range: range.clone(),
        nullspace: nullspace.clone(),
    })
}

pub fn subspace_intersect<T: Scalar>(
    s1: &Subspace<T>,
    s2: &Subspace<T>,
    tol: &Tolerances,
) -> Result<Subspace<T>> {
    let n = s1.ambient_dim();
    require(s2.ambient_dim() == n, || {
        format!("ambient dimensions {n} and {} differ", s2.ambient_dim())
    })?;
    if s1.is_trivial() || s2.is_trivial() {
        return Ok(Subspace::zero(n));
    }
    let id = DMatrix::<T>::identity(n, n);
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(&(&id - s1.projector()));
    stacked.rows_mut(n, n).copy_from(&(&id - s2.projector()));
    null_basis_with(&stacked, Some(1.0), tol)
}

/// Orthogonal complement of `inner` inside `outer`.
pub fn subspace_ominus<T: Scalar>(
    outer: &Subspace<T>,
    inner: &Subspace<T>,
    tol: &Tolerances,
) -> Result<Subspace<T>> {
    require(outer.ambient_dim() == inner.ambient_dim(), || {
        format!(
            "ambient dimensions {} and {} differ",
            outer.ambient_dim(),
            inner.ambient_dim()
        )
    })?;
    if !outer.contains(inner, tol) {
        return Err(Error::NotContained(outer.distance_of(inner.basis())));
    }
    range_basis_with(&(outer.projector() - inner.projector()), Some(1.0), tol)
}

/// `A^{-1}(S) = { x : A x in S }`.
pub fn preimage<T: Scalar>(a: &DMatrix<T>, s: &Subspace<T>, tol: &Tolerances) -> Result<Subspace<T>> {
    let m = a.nrows();
    require(s.ambient_dim() == m, || {
        format!("operator maps into dimension {m}, subspace lives in {}", s.ambient_dim())
    })?;
    let away = DMatrix::<T>::identity(m, m) - s.projector();
    null_basis_with(&(away * a), Some(spectral_norm(a)?), tol)
}

pub fn hermitian_part<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.adjoint()) * T::from_real(0.5)
}

/// Accepts Hermitian matrices whose eigenvalues are no lower than
/// `-residual_rel * ||A||`.
pub fn check_psd<T: Scalar>(a: &DMatrix<T>, tol: &Tolerances) -> Result<()> {
    check_finite(a)?;
    require(a.is_square(), || {
        format!("weight must be square, got {}x{}", a.nrows(), a.ncols())
    })?;
    let norm = a.norm();
    let asymmetry = relative((a - a.adjoint()).norm(), norm);
    if asymmetry > tol.residual_rel {
        return Err(Error::NotHermitian(asymmetry));
    }
    let (eigenvalues, _) = hermitian_eigen(a)?;
    let scale = eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if eigenvalues.len() > 0 && min < -tol.residual_rel * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// `Re(x^H A x)` without any checks.
pub fn quadratic_form<T: Scalar>(a: &DMatrix<T>, x: &DVector<T>) -> f64 {
    x.dotc(&(a * x)).real()
}

pub fn seminorm_sq<T: Scalar>(a: &DMatrix<T>, x: &DVector<T>, tol: &Tolerances) -> Result<f64> {
    check_psd(a, tol)?;
    require(a.ncols() == x.len(), || {
        format!("weight of size {} applied to vector of length {}", a.ncols(), x.len())
    })?;
    Ok(quadratic_form(a, x).max(0.0))
}

/// `||x||_A = sqrt(<A x, x>)`.
pub fn seminorm<T: Scalar>(a: &DMatrix<T>, x: &DVector<T>, tol: &Tolerances) -> Result<f64> {
    seminorm_sq(a, x, tol).map(f64::sqrt)
}

/// Positive semidefinite square root through the Hermitian eigendecomposition.
pub fn psd_sqrt<T: Scalar>(a: &DMatrix<T>, tol: &Tolerances) -> Result<DMatrix<T>> {
    check_psd(a, tol)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (values, vectors) = hermitian_eigen(a)?;
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= T::from_real(values[j].max(0.0).sqrt());
    }
    Ok(scaled * vectors.adjoint())
}
