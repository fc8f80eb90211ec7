//! Orthogonal projection onto tensor-product spline spaces and a numerical
//! laboratory around it: Gram decay, kernel bounds, Lebesgue constants,
//! strong maximal function domination, Remez constants and the Bohr/Saks
//! divergence construction.

pub mod bspline;
pub mod error;
pub mod gram;
pub mod maximal;
pub mod mesh;
pub mod projection;
pub mod quadrature;
pub mod remez;
pub mod saks;
pub mod rng;
pub mod step;

pub use error::{Error, Result};
