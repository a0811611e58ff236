//! Matrix information geometry detection of targets in clutter.
//!
//! HPD matrix functions, total Bregman divergences and their means, influence
//! analysis, a clutter signal model, detectors, and a Monte Carlo harness.

pub mod detectors;
pub mod divergence;
pub mod error;
pub mod harness;
pub mod hpd;
pub mod influence;
pub mod means;
pub mod random;
pub mod report;
pub mod signal;
pub mod sum;

pub use divergence::DivergenceKind;
pub use error::{Error, Result};
pub use hpd::{CMatrix, CVector, Hermitian, Hpd};
pub use means::{MeanKind, MeanReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
