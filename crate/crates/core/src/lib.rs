//! Criticality eigenvalue λ (k_eff = 1/λ) of the normalized coupled
//! neutronics / enthalpy problem
//!
//! ```text
//! −φ'' + φ = λ Σ(h) φ,   h' = φ,   0 < z < 1,
//! h(0) = 0, h(1) = 1, φ(0) = φ(1) = 0, φ > 0 inside,
//! ```
//!
//! with Σ known through three samples. Four independent routes are
//! provided and cross-checked:
//!
//! * [`analytic`]: closed forms of I(λ) = ∫₀¹ dh/√ψ_λ through elliptic
//!   integrals, plus the regularized quadrature oracle;
//! * [`cn`]: the Crank–Nicolson relation on a sin²-graded enthalpy mesh,
//!   which reduces the discrete problem to one scalar equation;
//! * [`coupling`]: the classical alternating eigen-solve / enthalpy update.

// NaN-rejecting guards are written as !(x > 0.0) on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cn;
pub mod coupling;
pub mod elliptic;
pub mod error;
pub mod model;
// Kronrod tables are kept at full tabulated precision
#[allow(clippy::excessive_precision)]
pub mod quad;
pub mod roots;

pub use error::{Error, Result};
pub use model::{build_model, make_samples, ModelKind, SigmaModel, SigmaSamples};
