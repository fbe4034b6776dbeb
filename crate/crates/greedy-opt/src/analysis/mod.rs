//! Constants measurement, bound evaluation, and certificate checks.
//!
//! Estimators are sampling-based and one-sided by construction: suprema
//! are estimated from below, infima from above. Bound verification
//! therefore prefers analytic constants declared by the problem
//! generators and treats the estimators as cross-checks.

pub mod bounds;
pub mod certificates;
pub mod incoherence;
pub mod recursion;
pub mod rsc;
pub mod sampling;
pub mod smoothness;

pub use bounds::{
    evaluate_bound, evaluate_thm11_rate, evaluate_thm21_bound, evaluate_thm22_bound,
    ConstantsProfile, RateFit,
};
pub use certificates::{
    egca_dominance_check, verify_certificates, CertificateReport, DominanceCheck,
};
pub use incoherence::{incoherence_constant, IncoherenceMode, IncoherenceProfile};
pub use recursion::{recursion_check, remaining_support_l1, RecursionReport};
pub use rsc::{estimate_rsc, RscEstimate};
pub use sampling::DomainSampler;
pub use smoothness::{default_u_grid, estimate_smoothness, SmoothnessFit};
