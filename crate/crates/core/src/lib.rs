//! Phase-space Hilbert-space mechanics and coherent-state projection
//! quantization on periodic spectral grids.

pub mod error;
pub mod fft;
pub mod galileo_rep;
pub mod irrep;
pub mod koopman;
pub mod phase_grid;
pub mod qdynamics;
pub mod quantize;
pub mod states;
pub mod symbol;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Library version, echoed into run artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
