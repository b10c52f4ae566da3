//! Exact lattice oracles, seeded Monte Carlo estimators and asymptotic
//! constants for the tail of the all-time maximum `M = sup_n S_n` of a
//! random walk with negative drift whose increments belong to the class of
//! exponentially twisted subexponential laws (`S_γ`, `γ > 0`) with
//! `φ_F(γ) < 1`.
//!
//! The crate is organised around four layers:
//!
//! * [`increments`]: parametric increment laws with exact class parameters,
//!   samplers and numerical class-membership diagnostics.
//! * [`lattice`]: discretisation onto a uniform grid and dynamic-programming
//!   oracles for the laws of `M`, `M_N`, the maximum stopped at the first
//!   descending epoch, and big-jump decompositions.
//! * [`montecarlo`]: reproducible sharded path simulation and estimators.
//! * [`asymptotics`]: predicted constants and convergence reports.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod increments;
mod interval;
pub mod lattice;
pub mod montecarlo;
pub mod quadrature;

pub use error::{Error, Result};
pub use increments::{HChoice, IncrementModel, MgfValue};
pub use interval::Interval;
pub use lattice::{LatticePmf, MaxLaw, StoppedLaw};
pub use montecarlo::{EstimatorReport, SimConfig};

/// Version string embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
