//! Numerical laboratory for Möbius disjointness experiments.
//!
//! The crate bundles the arithmetic input (a segmented Möbius sieve and the
//! Cesàro / logarithmic averaging operators), a small zoo of topological
//! dynamical systems with their metrics, mean-metric covering numbers, step-2
//! nilpotent group arithmetic in Mal'cev coordinates, small-boundary codings,
//! restricted Fourier-uniformity functionals and the block-sequence
//! constructions used to turn a correlating signal into a low-complexity
//! subshift.
//!
//! Every experiment is deterministic: random samples are drawn from seeded
//! ChaCha streams and all reductions run in a fixed order.

pub mod arith;
pub mod coding;
pub mod complexity;
pub mod construct;
pub mod error;
pub mod experiments;
pub mod fourier;
pub mod nil;
pub mod numeric;
pub mod systems;

pub use error::{Error, Result};
pub use num_complex::Complex64;
