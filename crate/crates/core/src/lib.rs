//! Solvers for the simple plant location problem with customer preferences
//! (SPLPO): every customer ranks all candidate sites and must be served by
//! its most preferred open facility.
//!
//! The crate provides
//!
//! * instance handling (canonical text format, OR-Library import, a seeded
//!   generator) in [`instance`],
//! * solution evaluation and the greedy upper-bound heuristics in [`solution`],
//! * the closed-form Lagrangean relaxation and its subgradient method in
//!   [`lagrange`],
//! * the semi-Lagrangean relaxation and its dual ascent in [`semilagrange`],
//! * an exact branch-and-bound engine plus a brute-force oracle in [`exact`],
//! * the variable fixing heuristic and the accelerated dual ascent pipeline
//!   in [`ada`],
//! * tabular run reports in [`report`].

pub mod ada;
pub mod error;
pub mod exact;
pub mod instance;
pub mod lagrange;
pub mod par;
pub mod report;
pub mod semilagrange;
pub mod solution;

pub use error::{Result, SplpoError};
pub use instance::{CostLadder, Instance};
pub use solution::Solution;

/// Absolute tolerance used when comparing dual values.
pub const DUAL_TOL: f64 = 1e-9;
