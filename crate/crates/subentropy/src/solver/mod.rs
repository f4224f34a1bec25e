//! Structured convex solvers with certificates: the interior-point core,
//! the cone programs behind every optimization-valued entropy, the exact
//! Neyman–Pearson optimizer, closed-form pair divergences, the smoothed
//! min-divergence search, and Rényi optimizers.

pub mod dmin;
pub mod ipm;
pub mod neyman;
pub mod pair;
pub mod problems;
pub mod renyi_opt;

pub use ipm::{CertifiedSolve, SolverCertificate, SolverOptions};
pub use problems::SolverError;
