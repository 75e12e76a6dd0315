//! Approximate near neighbor search for symmetric norms.
//!
//! The crate is organized bottom-up:
//!
//! * [`vecnorm`]: symmetric norms, their duals and majorization.
//! * [`leveling`]: level decomposition and the rounding maps on vectors.
//! * [`netgen`]: enumeration of rounded dual vectors and the linear embedding
//!   of a symmetric norm into a max of weighted sums of top-k norms.
//! * [`randmap`]: random coordinate scalings into `l_inf`.
//! * [`annindex`]: ring-separator trees over distance oracles and the
//!   composed search pipelines.
//! * [`bench`]: planted workloads, reports and invariant suites.

pub mod annindex;
pub mod bench;
pub mod error;
pub mod leveling;
pub mod netgen;
pub mod randmap;
pub mod rng;
pub mod vecnorm;

pub use error::{Error, Result};
