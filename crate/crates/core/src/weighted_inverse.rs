//! The set `GI(B, A1, A2)` of all solutions `C` of
//!
//! ```text
//! B C B = B,   C B C = C,   A1 C B = (C B)^H A1,   A2 B C = (B C)^H A2
//! ```
//!
//! Every solution has the form `(I - Q) B^† P` with `Q` an `A1`-Hermitian
//! projection onto `N(B)` and `P` an `A2`-Hermitian projection onto `R(B)`,
//! and different pairs give different solutions. The family is therefore
//! parametrized by the two coordinate blocks of the projection families.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::compatibility::{family, is_compatible, ProjectionFamily};
use crate::error::Result;
use crate::linalg::{check_psd, null_basis, pinv, range_basis, relative, require, Scalar, Tolerances};

fn check_shapes<T: Scalar>(b: &DMatrix<T>, a1: &DMatrix<T>, a2: &DMatrix<T>) -> Result<()> {
    let (m, n) = b.shape();
    require(a1.shape() == (n, n) && a2.shape() == (m, m), || {
        format!(
            "B is {m}x{n}, so A1 must be {n}x{n} and A2 {m}x{m}; got {}x{} and {}x{}",
            a1.nrows(),
            a1.ncols(),
            a2.nrows(),
            a2.ncols()
        )
    })
}

/// Solvability of the weighted system: `(A1, N(B))` and `(A2, R(B))` must be
/// compatible. Always true in exact arithmetic; `false` flags numerical
/// incompatibility at the given tolerances.
pub fn gi_exists<T: Scalar>(b: &DMatrix<T>, a1: &DMatrix<T>, a2: &DMatrix<T>, tol: &Tolerances) -> Result<bool> {
    check_shapes(b, a1, a2)?;
    check_psd(a1, tol)?;
    check_psd(a2, tol)?;
    let kernel = null_basis(b, tol)?;
    let range = range_basis(b, tol)?;
    Ok(is_compatible(a1, &kernel, tol)? && is_compatible(a2, &range, tol)?)
}

/// The solution set together with its canonical element
/// `(I - P_{A1,N(B)}) B^† P_{A2,R(B)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WgiFamily<T: Scalar> {
    b: DMatrix<T>,
    weight_in: DMatrix<T>,
    weight_out: DMatrix<T>,
    b_pinv: DMatrix<T>,
    fam_null: ProjectionFamily<T>,
    fam_range: ProjectionFamily<T>,
    canonical: DMatrix<T>,
}

pub fn wgi_family<T: Scalar>(
    b: &DMatrix<T>,
    a1: &DMatrix<T>,
    a2: &DMatrix<T>,
    tol: &Tolerances,
) -> Result<WgiFamily<T>> {
    check_shapes(b, a1, a2)?;
    let fam_null = family(a1, &null_basis(b, tol)?, tol)?;
    let fam_range = family(a2, &range_basis(b, tol)?, tol)?;
    let b_pinv = pinv(b, tol)?;
    let canonical = assemble(&b_pinv, fam_null.canonical().matrix(), fam_range.canonical().matrix());
    Ok(WgiFamily {
        b: b.clone(),
        weight_in: a1.clone(),
        weight_out: a2.clone(),
        b_pinv,
        fam_null,
        fam_range,
        canonical,
    })
}

fn assemble<T: Scalar>(b_pinv: &DMatrix<T>, q: &DMatrix<T>, p: &DMatrix<T>) -> DMatrix<T> {
    let n = q.nrows();
    (DMatrix::identity(n, n) - q) * b_pinv * p
}

impl<T: Scalar> WgiFamily<T> {
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn weight_in(&self) -> &DMatrix<T> {
        &self.weight_in
    }

    pub fn weight_out(&self) -> &DMatrix<T> {
        &self.weight_out
    }

    pub fn b_pinv(&self) -> &DMatrix<T> {
        &self.b_pinv
    }

    /// `P(A1, N(B))`.
    pub fn fam_null(&self) -> &ProjectionFamily<T> {
        &self.fam_null
    }

    /// `P(A2, R(B))`.
    pub fn fam_range(&self) -> &ProjectionFamily<T> {
        &self.fam_range
    }

    pub fn canonical(&self) -> &DMatrix<T> {
        &self.canonical
    }

    /// Parameter shapes for the null-side and range-side blocks.
    pub fn parameter_shapes(&self) -> ((usize, usize), (usize, usize)) {
        (self.fam_null.parameter_shape(), self.fam_range.parameter_shape())
    }

    /// Dimension of the product parameter space.
    pub fn parameter_dim(&self) -> usize {
        self.fam_null.parameter_dim() + self.fam_range.parameter_dim()
    }

    pub fn is_singleton(&self) -> bool {
        self.parameter_dim() == 0
    }

    /// `(I - Q(z_null)) B^† P(z_range)`.
    pub fn member(&self, z_null: &DMatrix<T>, z_range: &DMatrix<T>) -> Result<DMatrix<T>> {
        let q = self.fam_null.member(z_null)?;
        let p = self.fam_range.member(z_range)?;
        Ok(assemble(&self.b_pinv, q.matrix(), p.matrix()))
    }
}

/// Relative residuals of the four defining equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GiResiduals {
    /// `||B C B - B|| / ||B||`
    pub penrose_1: f64,
    /// `||C B C - C|| / ||C||`
    pub penrose_2: f64,
    /// `||A1 C B - (C B)^H A1|| / (||A1|| ||C|| ||B||)`
    pub hermitian_in: f64,
    /// `||A2 B C - (B C)^H A2|| / (||A2|| ||B|| ||C||)`
    pub hermitian_out: f64,
    /// All four residuals within `residual_rel`.
    pub member: bool,
}

impl GiResiduals {
    pub fn max(&self) -> f64 {
        self.penrose_1
            .max(self.penrose_2)
            .max(self.hermitian_in)
            .max(self.hermitian_out)
    }
}

pub fn verify_gi<T: Scalar>(
    b: &DMatrix<T>,
    a1: &DMatrix<T>,
    a2: &DMatrix<T>,
    c: &DMatrix<T>,
    tol: &Tolerances,
) -> Result<GiResiduals> {
    check_shapes(b, a1, a2)?;
    require(c.shape() == (b.ncols(), b.nrows()), || {
        format!(
            "candidate must be {}x{}, got {}x{}",
            b.ncols(),
            b.nrows(),
            c.nrows(),
            c.ncols()
        )
    })?;
    crate::linalg::check_finite(c)?;
    let (nb, nc) = (b.norm(), c.norm());
    let cb = c * b;
    let bc = b * c;
    let mut r = GiResiduals {
        penrose_1: relative((b * &cb - b).norm(), nb),
        penrose_2: relative((&cb * c - c).norm(), nc),
        hermitian_in: relative((a1 * &cb - cb.adjoint() * a1).norm(), a1.norm() * nc * nb),
        hermitian_out: relative((a2 * &bc - bc.adjoint() * a2).norm(), a2.norm() * nb * nc),
        member: false,
    };
    r.member = r.max() <= tol.residual_rel();
    Ok(r)
}
