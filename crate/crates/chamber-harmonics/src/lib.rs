//! Harmonic functions with Dirichlet boundary conditions on unions of
//! semi-infinite cylinders ("chambers").
//!
//! The crate computes, classifies and cross-validates such functions:
//!
//! * [`section`] — Dirichlet Laplacian eigenpairs of cross-section domains;
//! * [`field`] — mode series with exponential axial profiles, including the
//!   canonical growing semicylinder solution;
//! * [`almgren`] — cylindrical and radial frequency quotients and their
//!   extracted limits;
//! * [`junction`] — the overlap operator between two nested sections, the
//!   contraction transfer operator, and the matched two-sided solution;
//! * [`classify`] — dimension counts and explicit bases for solution spaces
//!   cut out by frequency thresholds;
//! * [`chain`] — composition of junction transfers across many chambers and
//!   the end-to-end amplitude constant κ;
//! * [`oracle`] — an independent finite-difference solver on truncated
//!   chambered domains used to cross-check every spectral quantity;
//! * [`cli`] — the `chamber-harmonics` command-line front end.

pub mod almgren;
pub mod chain;
pub mod classify;
pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod junction;
pub mod oracle;
pub mod report;
pub mod section;

pub use error::{Error, Result};
pub use section::{compute_spectrum, CrossSection, SectionKind};
