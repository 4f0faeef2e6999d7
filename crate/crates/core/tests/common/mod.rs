//! Random instance generators and reference computations built directly on
//! nalgebra, independent of the library's own decompositions.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// A product of Gaussian factors, rank `r` almost surely.
pub fn rank_r(rng: &mut ChaCha8Rng, m: usize, n: usize, r: usize) -> DMatrix<f64> {
    gaussian(rng, m, r) * gaussian(rng, r, n)
}

pub fn complex_rank_r(rng: &mut ChaCha8Rng, m: usize, n: usize, r: usize) -> DMatrix<Complex<f64>> {
    complex_gaussian(rng, m, r) * complex_gaussian(rng, r, n)
}

/// `G G^T` with `G` of size `n x r`; the zero matrix for `r = 0`.
pub fn psd(rng: &mut ChaCha8Rng, n: usize, r: usize) -> DMatrix<f64> {
    let g = gaussian(rng, n, r);
    &g * g.transpose()
}

pub fn complex_psd(rng: &mut ChaCha8Rng, n: usize, r: usize) -> DMatrix<Complex<f64>> {
    let g = complex_gaussian(rng, n, r);
    &g * g.adjoint()
}

pub fn spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    psd(rng, n, n) + DMatrix::identity(n, n) * 0.5
}

/// nalgebra's symmetric eigensolver, with its factorization checked.
pub fn sym_eigen(s: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let e = SymmetricEigen::new(s.clone());
    let back = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues) * e.eigenvectors.transpose();
    assert!((back - s).norm() <= 1e-12 * s.norm().max(1.0), "eigensolver failed to factor the matrix");
    e
}

/// Eigenvector split of a symmetric PSD matrix at `rel * lambda_max`:
/// `(range, kernel)` orthonormal bases.
pub fn eig_split(s: &DMatrix<f64>, rel: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = s.nrows();
    let e = sym_eigen(s);
    let top = e.eigenvalues.iter().copied().fold(0.0, f64::max);
    let (big, small): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| top > 0.0 && e.eigenvalues[i] > rel * top);
    let pick = |idx: &[usize]| {
        let mut m = DMatrix::zeros(n, idx.len());
        for (k, &i) in idx.iter().enumerate() {
            m.set_column(k, &e.eigenvectors.column(i));
        }
        m
    };
    (pick(&big), pick(&small))
}

/// Orthonormal bases `(R(B), R(B)⊥, R(B^T), N(B))`.
pub fn four_spaces(b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (range, range_perp) = eig_split(&(b * b.transpose()), 1e-12);
    let (row, kernel) = eig_split(&(b.transpose() * b), 1e-12);
    (range, range_perp, row, kernel)
}

/// Moore-Penrose inverse from the eigenpairs `±sigma, (u; ±v) / sqrt(2)` of
/// the symmetric dilation `[[0, M], [M^T, 0]]`.
pub fn reference_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    let mut out = DMatrix::zeros(cols, rows);
    if m.is_empty() {
        return out;
    }
    let mut dil = DMatrix::zeros(rows + cols, rows + cols);
    dil.view_mut((0, rows), (rows, cols)).copy_from(m);
    dil.view_mut((rows, 0), (cols, rows)).copy_from(&m.transpose());
    let e = sym_eigen(&dil);
    let top = e.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let cut = 1e-12 * rows.max(cols) as f64 * top;
    for (k, &lambda) in e.eigenvalues.iter().enumerate() {
        if top > 0.0 && lambda.abs() > cut {
            let x = e.eigenvectors.column(k);
            out += x.rows(rows, cols) * x.rows(0, rows).transpose() / lambda;
        }
    }
    out
}

/// Moore-Penrose inverse of a symmetric matrix from its eigenpairs.
pub fn sym_pinv(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut out = DMatrix::zeros(n, n);
    if n == 0 {
        return out;
    }
    let e = sym_eigen(s);
    let top = e.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    for (k, &lambda) in e.eigenvalues.iter().enumerate() {
        if top > 0.0 && lambda.abs() > 1e-12 * n as f64 * top {
            let x = e.eigenvectors.column(k);
            out += x * x.transpose() / lambda;
        }
    }
    out
}

/// Symmetric square root of a PSD matrix by eigendecomposition.
pub fn reference_sqrt(s: &DMatrix<f64>) -> DMatrix<f64> {
    let e = sym_eigen(s);
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| x.max(0.0).sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

pub fn reference_inv_sqrt(s: &DMatrix<f64>) -> DMatrix<f64> {
    let e = sym_eigen(s);
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| 1.0 / x.sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// The projection onto the span of `range` along the span of `null`.
pub fn projection_from_bases(range: &DMatrix<f64>, null: &DMatrix<f64>) -> DMatrix<f64> {
    let n = range.nrows();
    let k = range.ncols();
    let mut x = DMatrix::zeros(n, n);
    x.columns_mut(0, k).copy_from(range);
    x.columns_mut(k, n - k).copy_from(null);
    let mut d = DMatrix::zeros(n, n);
    for i in 0..k {
        d[(i, i)] = 1.0;
    }
    &x * d * x.try_inverse().expect("complementary bases")
}

/// A random complement of `span(base)`: `perp + base K` with `K` Gaussian.
pub fn skewed_complement(rng: &mut ChaCha8Rng, base: &DMatrix<f64>, perp: &DMatrix<f64>, skew: f64) -> DMatrix<f64> {
    perp + base * gaussian(rng, base.ncols(), perp.ncols()) * skew
}

/// `B^† + N K1 + K2 W^T` with `N` spanning `N(B)` and `W` spanning `R(B)⊥`:
/// a {1}-inverse of `B` that is not the Moore-Penrose inverse.
pub fn perturbed_inner_inverse(rng: &mut ChaCha8Rng, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = b.shape();
    let (_, range_perp, _, kernel) = four_spaces(b);
    let k1 = gaussian(rng, kernel.ncols(), m);
    let k2 = gaussian(rng, n, range_perp.ncols());
    reference_pinv(b) + &kernel * k1 + k2 * range_perp.transpose()
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}
