//! Numerical Θ-spherical analysis on root systems.

pub mod atlas;
pub mod coeffs;
pub mod error;
pub mod expcalc;
pub mod hcseries;
pub mod oracles;
pub mod paleywiener;
pub mod rootsys;
pub mod scalar;
pub mod thetasph;
pub mod transform;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

/// Double-precision instantiations.
pub type RootSystem = rootsys::RootSystem<f64>;
pub type RootSystemF32 = rootsys::RootSystem<f32>;
pub type Complex64 = num_complex::Complex<f64>;
pub type Complex32 = num_complex::Complex<f32>;
pub type CompactFunction = transform::CompactFunction<f64>;
pub type CompactFunctionF32 = transform::CompactFunction<f32>;
