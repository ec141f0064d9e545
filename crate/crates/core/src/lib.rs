//! Exact solution of the periodic cluster-XY chain
//!
//! `H = -sum X_{i-1} Z_i X_{i+1} - h sum Z_i + lambda_y sum Y_i Y_{i+1} + lambda_x sum X_i X_{i+1}`
//!
//! through its free-fermion form: dispersion and critical surfaces
//! ([`spectrum`]), ground-state overlaps and the quantum geometric tensor
//! ([`geometry`]), Loschmidt echoes after sudden quenches ([`quench`]), and a
//! dense exact-diagonalization cross-check for small chains ([`oracle`]).
//! [`sweep`] and [`dataset`] run parameter scans and write them as CSV or JSON.

pub mod dataset;
pub mod error;
pub mod flags;
pub mod geometry;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod quench;
pub mod spectrum;
pub mod sweep;

pub use error::{Error, Result};
pub use flags::{Flagged, Flags};
pub use model::{momentum_grid, Axis, CouplingPoint, ModeTable, MomentumGrid, ParitySector};
