//! Truncated Fock-space simulation of continuous-variable circuits and a
//! hybrid classical/CV-quantum classifier trained by finite differences.
//!
//! Registers of `m` qumodes at cutoff `n` are dense vectors of length `n^m`;
//! mode 0 is the most significant digit of the flat index.

pub mod appendix;
pub mod dataio;
pub mod error;
pub mod fock;
pub mod gates;
pub mod measurement;
pub mod qnn;
pub mod wigner;

pub use error::{Error, Result};
pub use fock::{Cutoff, DensityMatrix, Operator, State, C64};
