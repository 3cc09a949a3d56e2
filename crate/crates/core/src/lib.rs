//! Numerical laboratory for small-scale equidistribution of lattice points
//! on spheres, Heegner points and closed geodesics.

pub mod arith;
pub mod error;
pub mod fmt;
pub mod identities;
pub mod lattice;
pub mod modular;
pub mod quad;
pub mod special;
pub mod sphere;
pub mod transforms;
pub mod variance;

pub use error::{Error, Result};
