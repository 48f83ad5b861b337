//! Numerical toolkit for the Klein-Gordon equation in Minkowski and
//! light-cone coordinates.
//!
//! The crate represents solutions through their mass-shell densities —
//! a pair (a₀, a₁) over spatial momentum in the Minkowski parametrization,
//! or a single density b over light-cone momentum (p⁺, p⊥) — and provides:
//!
//! * the coordinate map κ, the on-shell parametrizations and the squeezing
//!   maps ν/μ between momentum parametrizations ([`kinematics`]);
//! * closed-form test-function families with exact derivatives and Fourier
//!   transforms ([`testfn`]);
//! * uniform grids, a bit-exact file format and CSV export ([`grids_io`]);
//! * deterministic tensor quadrature and the two mass-shell pairing
//!   measures ([`quadrature`]);
//! * discrete Fourier transforms in the exact sign conventions used
//!   throughout, plus the initial-data conversion laws ([`transform`]);
//! * density construction from Cauchy data and transport between the two
//!   parametrizations ([`massshell`]);
//! * time evolution, the characteristic solve and restriction, and
//!   residual checks ([`evolution`]);
//! * numerical certificates for squeezed-space membership and the
//!   multiplicator criterion ([`seminorms`]);
//! * the Pauli-Jordan worked example computed by independent routes
//!   ([`pauli_jordan`]);
//! * the named verification suites behind the `verify` CLI ([`suites`]).

pub mod error;
pub mod evolution;
pub mod grids_io;
pub mod kinematics;
pub mod massshell;
pub mod pauli_jordan;
pub mod quadrature;
pub mod seminorms;
pub mod testfn;
pub mod transform;

pub use error::{Error, Result};
pub use kinematics::{ModelParams, SqueezeSign};
pub use num_complex::Complex64;
