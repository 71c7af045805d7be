//! Exact local computations for branched opers and logarithmic connections
//! at a single point of the formal disk.
//!
//! The arithmetic layer ([`Series`], [`Matrix`], [`SeriesMat`]) is generic over
//! an exact [`Scalar`] field. The geometric layer works over [`Rat`].

pub mod connection;
pub mod error;
pub mod global_p1;
pub mod hecke;
pub mod log_side;
pub mod matrix;
pub mod oper;
#[cfg(feature = "sample")]
pub mod sample;
pub mod scalar;
pub mod series;
pub mod series_mat;

use num_rational::BigRational;

pub use connection::{FlatBasis, MeroConnection, ResidueData};
pub use error::{Error, Result};
pub use hecke::{HeckeStep, Lattice};
pub use log_side::{HeckeChainTrace, LogConditionReport, LogOperCandidate, ObstructionVector};
pub use matrix::Matrix;
pub use oper::{OperLocalData, OperReport};
pub use scalar::Scalar;
pub use series::{Series, DEFAULT_PRECISION, EXACT};
pub use series_mat::SeriesMat;

/// Arbitrary precision rational numbers, always in lowest terms.
pub type Rat = BigRational;

/// Truncated Laurent series over [`Rat`].
pub type Laurent = Series<Rat>;

/// Matrix of Laurent series over [`Rat`].
pub type LaurentMat = SeriesMat<Rat>;

/// Constant matrix over [`Rat`].
pub type RatMatrix = Matrix<Rat>;

/// Shorthand for `p/q` as a [`Rat`].
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::from_frac(p, q)
}
