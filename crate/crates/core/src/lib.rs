//! Verification laboratory for Pareto efficiency and competitive equilibrium
//! in finite exchange economies whose participants include artificial
//! entities.
//!
//! The model extends a textbook pure-exchange economy in three directions:
//! rights coordinates travel alongside consumption in every bundle, an
//! institutional state records governance facts (protections, verified
//! attributes, governed action channels, internalized delegates), and every
//! entity carries a status (tool, delegate, agent, welfare-subject) that
//! determines whose welfare counts. Everything is finite and enumerable, so
//! every verdict the library emits is established by exhaustive scan rather
//! than fixed-point machinery, and every scan is deterministic: grids are
//! canonically ordered, enumeration is lexicographic, and reports serialize
//! byte-stably.
//!
//! Module map:
//! - [`economy`]: entities, statuses, grids, rights tags, institutional
//!   states, delegation records, action channels, and structural validation.
//! - [`welfare`]: welfare function families plus local nonsatiation,
//!   Lipschitz, and upper-contour convexity diagnostics.
//! - [`feasibility`]: aggregate resource accounting and exhaustive
//!   enumeration of feasible allocations.
//! - [`equilibrium`]: budget sets, the four equilibrium clauses, price
//!   search, and the price-perturbation degradation bound.
//! - [`conditions`]: the seven efficiency preconditions and the combined
//!   diagnostic report.
//! - [`pareto`]: the welfare-status-aware Pareto oracle, its classical
//!   restriction, and paired status-assignment comparison.
//! - [`delegation`]: divergence profiles, chain composition, and the
//!   two-sup divergence loss bound.
//! - [`externality`]: uncompensated-channel detection, corrective transfer
//!   schedules, and the effects-aware Pareto scan.
//! - [`lindahl`]: personalized state prices and the cross-state oracle.
//! - [`scenarios`]: named worked instances and the seeded random generator.

pub mod conditions;
pub mod delegation;
pub mod economy;
pub mod equilibrium;
pub mod externality;
pub mod feasibility;
pub mod lindahl;
pub mod pareto;
pub mod scenarios;
pub mod welfare;

mod error;

pub use error::{Error, ErrorKind, Result};

/// Absolute tolerance for welfare and budget comparisons.
///
/// Weak comparisons accept a shortfall up to `TOL`; strict comparisons
/// require an excess above `TOL`. Grid coordinates are required to be
/// separated by far more than `TOL` (see [`MIN_GRID_GAP`]), so integer-valued
/// fixtures are classified exactly.
pub const TOL: f64 = 1e-9;

/// Minimum separation between distinct coordinate values on a grid axis.
/// Keeps tolerance-based point lookup unambiguous.
pub const MIN_GRID_GAP: f64 = 1e-6;

/// Default cap on the raw candidate product accepted by exhaustive scans.
pub const DEFAULT_CAP: u64 = 10_000_000;
