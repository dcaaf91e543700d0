//! Lowest-order edge elements for the 2D H(curl)-elliptic problem
//!
//! ```text
//! curl*(ε curl u) + κ u = f  in Ω,    u ∧ n = 0  on ∂Ω
//! ```
//!
//! with piecewise-constant ε and constant κ, together with two residual-type
//! a posteriori error estimators: a coefficient-robust one built on the
//! weighted mesh size `min(h/√ε, 1/√κ)` and the classical `ε⁻¹h²`-weighted one.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`]: conforming triangulations, red and newest-vertex refinement.
//! * [`linalg`]: CSR matrices and Jacobi-preconditioned conjugate gradients.
//! * [`quadrature`]: triangle and edge rules.
//! * [`element`]: Whitney basis functions and exact element matrices.
//! * [`fem`]: assembly, solve, evaluation of the discrete field, energy error.
//! * [`problems`]: coefficient fields and manufactured problems.
//! * [`estimators`]: residuals, jumps, weighted sizes, indicators, oscillations.
//! * [`amr`]: Dörfler marking and the adaptive loop.
//! * [`report`]: convergence tables, robustness sweeps, CSV/markdown output.

pub mod amr;
pub mod element;
pub mod error;
pub mod estimators;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};

/// Points in the plane.
pub type Point = nalgebra::Point2<f64>;
/// Vectors in the plane.
pub type Vector = nalgebra::Vector2<f64>;
