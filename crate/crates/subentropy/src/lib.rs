//! Numerical toolkit for entropies of finite-dimensional von Neumann
//! subalgebras: divergences D, D_α, D_max, D_min, D_H^ε and their smoothed
//! variants, Stinespring dilations of conditional expectations, the
//! Pimsner–Popa index, and the MIO/DIO resource-dilution channels built
//! from them.
//!
//! Layout:
//! - [`linops`]: dense complex-matrix foundation (eigendecomposition,
//!   matrix functions, tensor ops, fidelity/purified distance).
//! - [`algebra`]: subalgebra structures N ⊆ B(H), conditional expectations,
//!   index, decomposition from generators.
//! - [`dilation`]: Stinespring isometries, purifications, dilated states.
//! - [`solver`]: interior-point core and the structured convex programs
//!   behind every optimization-valued entropy, with certificates.
//! - [`entropy`]: public entropy API, duality checks, AEP scans.
//! - [`resource`]: MIO/DIO predicates and dilution channel constructions.

pub mod algebra;
pub mod dilation;
pub mod entropy;
pub mod json;
pub mod linops;
pub mod rand_util;
pub mod resource;
pub mod solver;

pub use linops::{C64, CMat, DensityOperator, Projection};
pub use algebra::SubalgebraStructure;
