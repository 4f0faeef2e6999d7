//! Seminorm least squares.
//!
//! All problems here reduce to one primitive: minimizing a seminorm `||.||_A`
//! over an affine set `x0 + S`. The minimizers are exactly `(I - Q) x0` for
//! `Q` in `P(A, S)`, and `(I - P_{A,S}) x0` is the one of least Euclidean
//! norm. Built on it:
//!
//! - abstract splines: minimize `||T x||` over `y + S`;
//! - `A2`-least squares: minimize `||B x - y||_{A2}`;
//! - `A1 A2`-least squares: among those, minimize `||x||_{A1}`;
//! - equality-constrained least squares and best linear unbiased estimation.
//!
//! Comparisons use squared seminorms.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::compatibility::{family, ProjectionFamily};
use crate::error::{Error, Result};
use crate::linalg::{
    check_psd, null_basis, pinv, quadratic_form, range_basis, relative, require, subspace_intersect,
    Scalar, Subspace, Tolerances,
};
use crate::weighted_inverse::{wgi_family, WgiFamily};

/// Which description of the solution set applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// The family description of the generic case.
    Generic,
    /// `y ∈ R(B)`: exact solutions exist and the residual vanishes.
    ExactSolution,
    /// The anchor lies in the subspace being searched, so the minimum is zero
    /// and the minimizers are `N(A) ∩ S`.
    DegenerateAnchor,
}

fn column<T: Scalar>(v: &DVector<T>) -> DMatrix<T> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Minimizers of `||x||_A` over `x0 + S`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMinimizer<T: Scalar> {
    anchor: DVector<T>,
    family: ProjectionFamily<T>,
    minimizer: DVector<T>,
    seminorm_sq: f64,
    branch: Branch,
}

/// `(I - P_{A,S}) x0` together with the family `{(I - Q) x0 : Q ∈ P(A,S)}`.
///
/// The anchor need not be orthogonal to `S`; only its `S⊥` component matters.
/// When that component vanishes the minimum is zero and the minimizer set is
/// `N(A) ∩ S`.
pub fn affine_seminorm_min<T: Scalar>(
    a: &DMatrix<T>,
    s: &Subspace<T>,
    x0: &DVector<T>,
    tol: &Tolerances,
) -> Result<AffineMinimizer<T>> {
    require(x0.len() == s.ambient_dim(), || {
        format!(
            "anchor has length {}, subspace lives in dimension {}",
            x0.len(),
            s.ambient_dim()
        )
    })?;
    let fam = family(a, s, tol)?;
    let minimizer = x0 - fam.canonical().matrix() * x0;
    let branch = if s.contains_vector(x0, tol) {
        Branch::DegenerateAnchor
    } else {
        Branch::Generic
    };
    Ok(AffineMinimizer {
        seminorm_sq: quadratic_form(a, &minimizer).max(0.0),
        anchor: x0.clone(),
        family: fam,
        minimizer,
        branch,
    })
}

impl<T: Scalar> AffineMinimizer<T> {
    pub fn anchor(&self) -> &DVector<T> {
        &self.anchor
    }

    pub fn family(&self) -> &ProjectionFamily<T> {
        &self.family
    }

    /// The minimizer of least Euclidean norm.
    pub fn minimizer(&self) -> &DVector<T> {
        &self.minimizer
    }

    pub fn seminorm_sq(&self) -> f64 {
        self.seminorm_sq
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Every minimizer differs from the canonical one by an element of this
    /// subspace, `N(A) ∩ S`.
    pub fn minimizer_directions(&self) -> &Subspace<T> {
        self.family.free_target()
    }

    /// `(I - Q(z)) x0`.
    pub fn member(&self, z: &DMatrix<T>) -> Result<DVector<T>> {
        let q = self.family.member(z)?;
        Ok(&self.anchor - q.matrix() * &self.anchor)
    }
}

/// The spline set `spl(T, S, y)`: minimizers of `||T x||` over `y + S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSet<T: Scalar> {
    operator: DMatrix<T>,
    inner: AffineMinimizer<T>,
}

pub fn splines<T: Scalar>(
    t: &DMatrix<T>,
    s: &Subspace<T>,
    y: &DVector<T>,
    tol: &Tolerances,
) -> Result<SplineSet<T>> {
    require(t.ncols() == s.ambient_dim(), || {
        format!(
            "operator has {} columns, subspace lives in dimension {}",
            t.ncols(),
            s.ambient_dim()
        )
    })?;
    let gram = t.adjoint() * t;
    Ok(SplineSet {
        operator: t.clone(),
        inner: affine_seminorm_min(&crate::linalg::hermitian_part(&gram), s, y, tol)?,
    })
}

impl<T: Scalar> SplineSet<T> {
    pub fn anchor(&self) -> &DVector<T> {
        self.inner.anchor()
    }

    pub fn subspace(&self) -> &Subspace<T> {
        self.inner.family.range()
    }

    /// `P(T^H T, S)`.
    pub fn family(&self) -> &ProjectionFamily<T> {
        self.inner.family()
    }

    /// `(I - P_{A,S}) y`.
    pub fn min_norm_element(&self) -> &DVector<T> {
        self.inner.minimizer()
    }

    pub fn branch(&self) -> Branch {
        self.inner.branch()
    }

    /// `||T x||` for the spline elements.
    pub fn minimum(&self) -> f64 {
        (&self.operator * self.inner.minimizer()).norm()
    }

    pub fn element(&self, z: &DMatrix<T>) -> Result<DVector<T>> {
        self.inner.member(z)
    }
}

/// All `A2`-least squares solutions of `B x = y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LssSolutionSet<T: Scalar> {
    particular: DVector<T>,
    translate: Subspace<T>,
    directions: Subspace<T>,
    range_family: ProjectionFamily<T>,
    rhs: DVector<T>,
    b_pinv: DMatrix<T>,
    residual_sq: f64,
    branch: Branch,
}

fn check_system<T: Scalar>(b: &DMatrix<T>, a2: &DMatrix<T>, y: &DVector<T>) -> Result<()> {
    let m = b.nrows();
    require(a2.shape() == (m, m) && y.len() == m, || {
        format!(
            "B has {m} rows; A2 is {}x{} and y has length {}",
            a2.nrows(),
            a2.ncols(),
            y.len()
        )
    })
}

/// `particular = B^† P_{A2,R(B)} y`. The full solution set is
/// `particular + N(A2 B)`; for `y ∉ R(B)` it is also the union of
/// `B^† P y + N(B)` over `P ∈ P(A2, R(B))`.
pub fn a_lss<T: Scalar>(b: &DMatrix<T>, a2: &DMatrix<T>, y: &DVector<T>, tol: &Tolerances) -> Result<LssSolutionSet<T>> {
    check_system(b, a2, y)?;
    let range = range_basis(b, tol)?;
    let range_family = family(a2, &range, tol)?;
    let b_pinv = pinv(b, tol)?;
    let particular = &b_pinv * (range_family.canonical().matrix() * y);
    let translate = null_basis(b, tol)?;

    // N(A2 B) = N(B) ⊕ B^†(N(A2) ∩ R(B)).
    let lifted = &b_pinv * range_family.free_target().basis();
    let n = b.ncols();
    let mut joined = DMatrix::zeros(n, translate.dim() + lifted.ncols());
    joined.columns_mut(0, translate.dim()).copy_from(translate.basis());
    joined.columns_mut(translate.dim(), lifted.ncols()).copy_from(&lifted);
    let directions = range_basis(&joined, tol)?;

    let branch = if range.contains_vector(y, tol) {
        Branch::ExactSolution
    } else {
        Branch::Generic
    };
    let residual_sq = quadratic_form(a2, &(b * &particular - y)).max(0.0);
    Ok(LssSolutionSet {
        particular,
        translate,
        directions,
        range_family,
        rhs: y.clone(),
        b_pinv,
        residual_sq,
        branch,
    })
}

impl<T: Scalar> LssSolutionSet<T> {
    pub fn particular(&self) -> &DVector<T> {
        &self.particular
    }

    /// `N(B)`.
    pub fn translate(&self) -> &Subspace<T> {
        &self.translate
    }

    /// `N(A2 B)`: the solution set is `particular + directions`.
    pub fn directions(&self) -> &Subspace<T> {
        &self.directions
    }

    /// `P(A2, R(B))`.
    pub fn range_family(&self) -> &ProjectionFamily<T> {
        &self.range_family
    }

    pub fn rhs(&self) -> &DVector<T> {
        &self.rhs
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Minimum of `||B x - y||_{A2}^2`.
    pub fn residual_sq(&self) -> f64 {
        self.residual_sq
    }

    pub fn residual(&self) -> f64 {
        self.residual_sq.sqrt()
    }

    /// `B^† P(z) y`, the minimum-norm solution of `B u = P(z) y`.
    pub fn variant(&self, z: &DMatrix<T>) -> Result<DVector<T>> {
        let p = self.range_family.member(z)?;
        Ok(&self.b_pinv * (p.matrix() * &self.rhs))
    }

    pub fn contains(&self, u: &DVector<T>, tol: &Tolerances) -> bool {
        u.len() == self.particular.len() && self.directions.contains_vector(&(u - &self.particular), tol)
            || (u - &self.particular).norm() <= tol.residual_rel() * self.particular.norm()
    }
}

/// Normal-equation test `B^H A (B u - y) = 0`, valid when `N(A) ∩ R(B) = {0}`.
pub fn normal_equation_check<T: Scalar>(
    b: &DMatrix<T>,
    a: &DMatrix<T>,
    u: &DVector<T>,
    y: &DVector<T>,
    tol: &Tolerances,
) -> Result<bool> {
    check_system(b, a, y)?;
    require(u.len() == b.ncols(), || {
        format!("u has length {}, B has {} columns", u.len(), b.ncols())
    })?;
    check_psd(a, tol)?;
    let overlap = subspace_intersect(&null_basis(a, tol)?, &range_basis(b, tol)?, tol)?;
    if !overlap.is_trivial() {
        return Err(Error::Precondition(format!(
            "N(A) ∩ R(B) has dimension {}",
            overlap.dim()
        )));
    }
    let gradient = b.adjoint() * (a * (b * u - y));
    let nb = b.norm();
    let scale = nb * a.norm() * (nb * u.norm() + y.norm());
    Ok(relative(gradient.norm(), scale) <= tol.residual_rel())
}

/// `A1 A2`-least squares solutions: the `A2`-least squares solutions of
/// least `A1` seminorm.
///
/// The minimizers of `||x||_{A1}` over `particular + N(A2 B)` are
/// `(I - Q) particular` for `Q ∈ P(A1, N(A2 B))`. When
/// `N(A2) ∩ R(B) = {0}` this subspace is `N(B)` and the members coincide
/// with `(I - Q) B^† P y` for `Q ∈ P(A1, N(B))`, see
/// [`A1A2Lss::fiber_member`].
#[derive(Debug, Clone, PartialEq)]
pub struct A1A2Lss<T: Scalar> {
    lss: LssSolutionSet<T>,
    inner: AffineMinimizer<T>,
    wgi: WgiFamily<T>,
    branch: Branch,
}

pub fn a1a2_lss<T: Scalar>(
    b: &DMatrix<T>,
    a1: &DMatrix<T>,
    a2: &DMatrix<T>,
    y: &DVector<T>,
    tol: &Tolerances,
) -> Result<A1A2Lss<T>> {
    let n = b.ncols();
    require(a1.shape() == (n, n), || {
        format!("B has {n} columns, A1 is {}x{}", a1.nrows(), a1.ncols())
    })?;
    let lss = a_lss(b, a2, y, tol)?;
    let inner = affine_seminorm_min(a1, lss.directions(), lss.particular(), tol)?;
    let wgi = wgi_family(b, a1, a2, tol)?;
    let branch = match inner.branch() {
        Branch::DegenerateAnchor => Branch::DegenerateAnchor,
        _ => lss.branch(),
    };
    Ok(A1A2Lss {
        lss,
        inner,
        wgi,
        branch,
    })
}

impl<T: Scalar> A1A2Lss<T> {
    pub fn lss(&self) -> &LssSolutionSet<T> {
        &self.lss
    }

    /// `P(A1, N(A2 B))`.
    pub fn family(&self) -> &ProjectionFamily<T> {
        self.inner.family()
    }

    pub fn wgi(&self) -> &WgiFamily<T> {
        &self.wgi
    }

    /// The member of least Euclidean norm.
    pub fn canonical(&self) -> &DVector<T> {
        self.inner.minimizer()
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn a2_residual_sq(&self) -> f64 {
        self.lss.residual_sq()
    }

    pub fn a1_seminorm_sq(&self) -> f64 {
        self.inner.seminorm_sq()
    }

    pub fn member(&self, z: &DMatrix<T>) -> Result<DVector<T>> {
        self.inner.member(z)
    }

    /// `(I - Q(z_null)) B^† P(z_range) y`: of least `A1` seminorm within the
    /// fiber `B^{-1}{P y}`. These are `A1 A2`-least squares solutions exactly
    /// when [`A1A2Lss::fibers_coincide`] holds.
    pub fn fiber_member(&self, z_null: &DMatrix<T>, z_range: &DMatrix<T>) -> Result<DVector<T>> {
        Ok(self.wgi.member(z_null, z_range)? * self.lss.rhs())
    }

    /// `N(A2) ∩ R(B) = {0}`.
    pub fn fibers_coincide(&self) -> bool {
        self.wgi.fam_range().free_target().is_trivial()
    }
}

/// The canonical optimal solution `(I - P_{A1,N(B)}) B^† P_{A2,R(B)} y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalLss<T: Scalar> {
    #[serde(skip)]
    pub solution: DVector<T>,
    /// `B u0`, which equals `P_{A2,R(B)} y`.
    #[serde(skip)]
    pub image: DVector<T>,
    pub a2_residual_sq: f64,
    pub a1_seminorm_sq: f64,
    pub euclidean_norm: f64,
    pub branch: Branch,
}

/// Among the `A2`-least squares solutions, `B u0 = P_{A2,R(B)} y` minimizes
/// `||y - B u||`; `u0` is then the least-norm vector of the form
/// `(I - Q) B^† P_{A2,R(B)} y`, `Q ∈ P(A1, N(B))`.
pub fn optimal_lss<T: Scalar>(
    b: &DMatrix<T>,
    a1: &DMatrix<T>,
    a2: &DMatrix<T>,
    y: &DVector<T>,
    tol: &Tolerances,
) -> Result<OptimalLss<T>> {
    check_system(b, a2, y)?;
    let wgi = wgi_family(b, a1, a2, tol)?;
    let solution = wgi.canonical() * y;
    let image = b * &solution;
    let branch = if range_basis(b, tol)?.contains_vector(y, tol) {
        Branch::ExactSolution
    } else {
        Branch::Generic
    };
    Ok(OptimalLss {
        a2_residual_sq: quadratic_form(a2, &(&image - y)).max(0.0),
        a1_seminorm_sq: quadratic_form(a1, &solution).max(0.0),
        euclidean_norm: solution.norm(),
        solution,
        image,
        branch,
    })
}

/// Minimizers of `||C x - y||` over `x0 + S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedMin<T: Scalar> {
    inner: AffineMinimizer<T>,
    offset: DVector<T>,
    minimizer: DVector<T>,
    residual: f64,
    operator: DMatrix<T>,
    rhs: DVector<T>,
}

/// Substituting `x = u + C^† y` turns the problem into minimizing
/// `||u||_{C^H C}` over `x0 - C^† y + S`, whose solutions are
/// `u = (I - Q)(x0 - C^† y)` with `Q ∈ P(C^H C, S)`.
pub fn constrained_min<T: Scalar>(
    c: &DMatrix<T>,
    s: &Subspace<T>,
    x0: &DVector<T>,
    y: &DVector<T>,
    tol: &Tolerances,
) -> Result<ConstrainedMin<T>> {
    let (m, n) = c.shape();
    require(s.ambient_dim() == n && x0.len() == n && y.len() == m, || {
        format!(
            "C is {m}x{n}; subspace dimension {}, x0 length {}, y length {}",
            s.ambient_dim(),
            x0.len(),
            y.len()
        )
    })?;
    let offset = pinv(c, tol)? * y;
    let gram = crate::linalg::hermitian_part(&(c.adjoint() * c));
    let inner = affine_seminorm_min(&gram, s, &(x0 - &offset), tol)?;
    let minimizer = inner.minimizer() + &offset;
    Ok(ConstrainedMin {
        residual: (c * &minimizer - y).norm(),
        inner,
        offset,
        minimizer,
        operator: c.clone(),
        rhs: y.clone(),
    })
}

impl<T: Scalar> ConstrainedMin<T> {
    /// The shifted variable `u = (I - P_{C^H C, S})(x0 - C^† y)`.
    pub fn shifted(&self) -> &DVector<T> {
        self.inner.minimizer()
    }

    /// The constrained minimizer `x = u + C^† y`, of least norm distance
    /// to `C^† y`.
    pub fn minimizer(&self) -> &DVector<T> {
        &self.minimizer
    }

    /// `||C x - y||` at the minimum.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn family(&self) -> &ProjectionFamily<T> {
        self.inner.family()
    }

    pub fn branch(&self) -> Branch {
        self.inner.branch()
    }

    pub fn member(&self, z: &DMatrix<T>) -> Result<DVector<T>> {
        Ok(self.inner.member(z)? + &self.offset)
    }

    pub fn residual_of(&self, x: &DVector<T>) -> f64 {
        (&self.operator * x - &self.rhs).norm()
    }
}

/// Best linear unbiased estimator: the minimizer of `<V2 g, g>` subject to
/// `B^H g = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blue<T: Scalar> {
    inner: AffineMinimizer<T>,
    objective: f64,
    feasibility_residual: f64,
}

/// Writes the feasible set as `(B^H)^† c + N(B^H)` and minimizes the
/// `V2` seminorm over it.
pub fn blue<T: Scalar>(b: &DMatrix<T>, v2: &DMatrix<T>, c: &DVector<T>, tol: &Tolerances) -> Result<Blue<T>> {
    let (m, n) = b.shape();
    require(v2.shape() == (m, m) && c.len() == n, || {
        format!(
            "B is {m}x{n}; V2 is {}x{} and c has length {}",
            v2.nrows(),
            v2.ncols(),
            c.len()
        )
    })?;
    let bh = b.adjoint();
    let cnorm = c.norm();
    if cnorm > 0.0 {
        let residual = relative(range_basis(&bh, tol)?.distance_of(&column(c)), cnorm);
        if residual > tol.residual_rel() {
            return Err(Error::Infeasible { residual });
        }
    }
    let start = pinv(&bh, tol)? * c;
    let kernel = null_basis(&bh, tol)?;
    let inner = affine_seminorm_min(v2, &kernel, &start, tol)?;
    let g = inner.minimizer();
    Ok(Blue {
        objective: quadratic_form(v2, g).max(0.0),
        feasibility_residual: relative((&bh * g - c).norm(), cnorm),
        inner,
    })
}

impl<T: Scalar> Blue<T> {
    pub fn estimate(&self) -> &DVector<T> {
        self.inner.minimizer()
    }

    /// `<V2 g, g>`.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// `||B^H g - c|| / ||c||`.
    pub fn feasibility_residual(&self) -> f64 {
        self.feasibility_residual
    }

    pub fn branch(&self) -> Branch {
        self.inner.branch()
    }

    /// `P(V2, N(B^H))`.
    pub fn family(&self) -> &ProjectionFamily<T> {
        self.inner.family()
    }

    pub fn member(&self, z: &DMatrix<T>) -> Result<DVector<T>> {
        self.inner.member(z)
    }
}
