//! Sparse approximate minimization of smooth convex objectives over a
//! finite dictionary, by two greedy drivers:
//!
//! - a gradient-pairing rule with a per-iteration weakness factor, and
//! - an energy rule that takes the best one-dimensional update,
//!
//! each followed by a certified re-minimization over the span of all
//! selected atoms. The analysis layer measures the constants those
//! methods' convergence guarantees depend on (smoothness, restricted
//! strong convexity, dictionary incoherence), evaluates the resulting
//! per-iteration bounds, and verifies the optimality and decay
//! certificates on recorded runs.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dictionary;
pub mod error;
pub mod greedy;
pub mod linalg;
pub mod objective;
pub mod problems;
pub mod report;
pub mod space;
pub mod threads;
pub mod weakness;

pub use dictionary::Dictionary;
pub use error::{Error, Result};
pub use greedy::{run_greedy, GreedyRun, SolverConfig, Variant};
pub use objective::Objective;
pub use space::{dual_pairing, norm_of, NormSpec, Point};
pub use weakness::WeaknessSequence;
