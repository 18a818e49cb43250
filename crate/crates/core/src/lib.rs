//! Weighted and shifted Lubich difference operators for left and right
//! Riemann-Liouville derivatives, their spectral analysis, and a
//! Crank-Nicolson solver for 1D space-fractional diffusion.

pub mod bench;
pub mod error;
pub mod lubich;
pub mod solver;
pub mod spectral;
mod util;
pub mod wsld;

pub use error::{Result, WsldError};
