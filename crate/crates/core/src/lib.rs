//! Weighted generalized inverses with positive semidefinite, possibly
//! singular, weights.
//!
//! The crate solves the system
//!
//! ```text
//! B X B = B,   X B X = X,   (A1 X B)^H = A1 X B,   (A2 B X)^H = A2 B X
//! ```
//!
//! for dense real or complex matrices, describes the whole solution set, and
//! uses the same machinery for seminorm least squares, abstract splines and
//! best linear unbiased estimation with singular covariance.
//!
//! Module map:
//! - [`linalg`]: SVD, numeric rank, pseudoinverse, subspaces, projectors.
//! - [`douglas`]: range inclusion, reduced and range-constrained solutions of
//!   `A X = B`, oblique pseudoinverses.
//! - [`compatibility`]: `A`-Hermitian projections with prescribed range.
//! - [`weighted_inverse`]: the solution set of the weighted system above.
//! - [`least_squares`]: seminorm least squares, splines, BLUE.
//! - [`cli`]: the `wginv` command-line front end.

pub mod cli;
pub mod compatibility;
pub mod douglas;
pub mod error;
pub mod least_squares;
pub mod linalg;
pub mod weighted_inverse;

pub use error::{Error, Result};
pub use linalg::{ObliqueProjection, Scalar, Subspace, Tolerances};
