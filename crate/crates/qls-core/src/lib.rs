//! Constructive solver for small-amplitude quasi-periodic standing waves of
//! quasi-linear Schrödinger equations on the torus,
//!
//! ```text
//!     i u_t − Δu + ρ u + Δ(∂H/∂ū) = 0,      H(u,ū) = |u|⁴ + Σ α_{l,l′} u^l ū^{l′},
//! ```
//!
//! built as a Lyapunov–Schmidt reduction over the integer lattice spanned by a
//! chosen set of spatial frequencies. The crate is organized around that
//! reduction:
//!
//! - [`lattice`]: basis geometry, weighted analytic sequence norms, exact
//!   lattice convolution, and the resonant/non-resonant projectors;
//! - [`resonance`]: exact integer enumeration and classification of the
//!   resonant mode set, plus exhaustive basis search;
//! - [`poly`]: exact integer-coefficient multivariate polynomials (symbolic
//!   amplitudes);
//! - [`nonlinear`]: the nonlinearity S(u) = ∂H/∂ū and its derivative as exact
//!   convolutions, and symbolic cubic-coefficient extraction;
//! - [`diophantine`]: finite certificates for the irrationality quality of ρ
//!   and the gauge shift ρ ↦ ρ + ρ′;
//! - [`range`]: the non-resonant (range) equation solved by contraction, with
//!   small-divisor audits;
//! - [`bifurcation`]: the resonant equations: frequency corrections, resonant
//!   amplitude corrections, the quadratic-coefficient matrix A, and the
//!   Monte-Carlo estimate of its excluded amplitude set;
//! - [`pipeline`]: the outer alternation tying the stages together, residual
//!   verification, and solution import/export.
//!
//! All randomized paths take explicit seeds; identical inputs produce
//! byte-identical outputs.

pub mod bifurcation;
pub mod diophantine;
pub mod error;
#[cfg(test)]
pub(crate) mod testutil;
pub mod lattice;
pub mod nonlinear;
pub mod pipeline;
pub mod poly;
pub mod range;
pub mod resonance;

pub use error::{Error, OutcomeTag, Result};
