//! JSON encoding of results. Keys are emitted in sorted order and floats in
//! shortest round-trip form, so equal inputs give byte-identical reports.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use crate::linalg::Scalar;

/// Scalars the front end can print and sample.
pub trait CliScalar: Scalar {
    fn to_json(self) -> Value;
    fn sample<R: Rng>(rng: &mut R) -> Self;
}

impl CliScalar for f64 {
    fn to_json(self) -> Value {
        json!(self)
    }

    fn sample<R: Rng>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

/// Complex entries are written as `[re, im]`.
impl CliScalar for Complex<f64> {
    fn to_json(self) -> Value {
        json!([self.re, self.im])
    }

    fn sample<R: Rng>(rng: &mut R) -> Self {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }
}

/// Row-major nested arrays.
pub fn matrix<T: CliScalar>(m: &DMatrix<T>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|&x| x.to_json()).collect()))
            .collect(),
    )
}

pub fn vector<T: CliScalar>(v: &DVector<T>) -> Value {
    Value::Array(v.iter().map(|&x| x.to_json()).collect())
}

pub fn shape((rows, cols): (usize, usize)) -> Value {
    json!([rows, cols])
}

pub fn random_matrix<T: CliScalar, R: Rng>(rng: &mut R, (rows, cols): (usize, usize)) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| T::sample(rng))
}
