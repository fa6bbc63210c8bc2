//! Random 1-Lipschitz graphs built from nested parallelogram families,
//! the density and intersection measurements taken on them, and a discrete
//! p-modulus solver for finite curve families on a pixel grid.
//!
//! The crate is split into four layers:
//!
//! - [`geometry`]: floating point planar primitives (isometries, convex
//!   clipping, unions of axis-aligned squares, isometry nets).
//! - [`wormgraphs`]: the exact-rational construction of generations of
//!   parallelograms and the random branches through them.
//! - [`densitylab`]: densities of isometric copies of a set inside a
//!   generation, concentration bounds and tail experiments.
//! - [`modulus`]: admissible densities, the constraint-generation solver,
//!   level-set bookkeeping and the probes built on top of it.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densitylab;
pub mod error;
pub mod geometry;
pub mod modulus;
pub mod rng;
pub mod svg;
pub mod wormgraphs;

pub use error::{Error, Result};
