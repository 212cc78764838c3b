//! Biphoton OAM spectra of collinear type-II SPDC sources and the inverse
//! problem of shaping them into maximally entangled qudit pairs.
//!
//! The building blocks are layered bottom-up:
//!
//! * [`mode_math`]: Laguerre-Gaussian angular spectra, pump superpositions and
//!   their position-space profiles.
//! * [`phase_matching`]: longitudinal mismatch, nonlinearity envelopes and the
//!   phase-matching function of periodic, cosine-series and custom-poled crystals.
//! * [`amplitude`]: the LG expansion amplitudes `C^{ls,li}` by reduced 3D
//!   quadrature, the per-coefficient basis tensor, and the relative-mode-number
//!   reduced integral.
//! * [`entanglement`]: subspace restriction, Schmidt decomposition and MES checks.
//! * [`engineering`]: relative mode numbers, feasibility of target states and the
//!   two-stage crystal/pump solve.
//! * [`poling`]: compilation of a cosine envelope into a ±1 domain pattern.
//! * [`scenario`] and [`export`]: configuration documents and output formats.

// NaN must fail the positivity checks, hence the negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplitude;
pub mod engineering;
pub mod entanglement;
mod error;
pub mod export;
pub mod linalg;
pub mod mode_math;
pub mod phase_matching;
pub mod poling;
pub mod quadrature;
pub mod scenario;

pub use error::{Error, Result};
pub use num_complex::Complex64;
