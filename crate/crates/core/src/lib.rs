//! Exact Rauzy induction for classical and non-classical interval exchanges,
//! splitting cylinders of train tracks, and the random-walk experiments that
//! contrast Lebesgue and harmonic measure.

pub mod error;
pub mod exact;
pub mod iet;
pub mod mat2;
pub mod measure;
pub mod polytope;
pub mod rational;
pub mod rauzy;
pub mod surface;
pub mod torus;
pub mod walk;

pub use error::{Error, Halt, Result};
