//! Random 1-Lipschitz graphs as limits of nested parallelogram families.
//!
//! All construction geometry is exact: coordinates, slopes and heights are
//! arbitrary-precision rationals, so nesting, adjacency and area identities
//! are checked as equalities. Floating point appears only when a cell is
//! handed to [`crate::geometry`].

mod generation;
mod quadtree;
mod ratio_serde;
mod sample;
mod sequence;

use num_bigint::BigInt;
use num_rational::BigRational;

pub use generation::{
    child, layout, root, AlternatingExtremes, CellFlag, ConstantPiles, Generation, Layout,
    Parallelogram, PileChooser, ScriptedPiles, SeededPiles, LAMBDA,
};
pub use quadtree::{quadtree_sample, QuadtreeSet};
pub use sample::{build_omega, sample_omega, OmegaSample};
pub use sequence::{build_sequence, MkSequence, MAX_DEPTH};

/// Exact rational used for all construction coordinates.
pub type Q = BigRational;

pub(crate) fn q_int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub(crate) fn q_frac(num: i64, den: u64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn q_pow2_inv(k: usize) -> Q {
    Q::new(BigInt::from(1), BigInt::from(1) << k)
}

pub(crate) fn to_f64(q: &Q) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}
