//! Symbolic and extended-precision algebra for Dulac return maps of simple
//! alternant polycycles in the logarithmic chart `ζ = −ln z`.
//!
//! * [`series`]: truncated sums `Σ b e^{μζ}` with exact coefficients.
//! * [`logchart`]: flow-box expansions, transit generators and the
//!   polycycle compiler.
//! * [`group`]: composition, inversion and conjugation of near-identity
//!   maps, and the additive decomposition of words.
//! * [`level1`]: generalized exponents, graded coefficients, STAR-series and
//!   the ordering procedure.
//! * [`numeric`]: certified evaluation, accuracy checks and flatness fits.
//! * [`syntax`]: text forms and parsers.

pub mod error;
pub mod group;
pub mod level1;
pub mod logchart;
pub mod numeric;
pub mod scalar;
pub mod series;
pub mod syntax;

pub use error::{Error, Result};
