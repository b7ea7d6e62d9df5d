//! Certified finite-horizon analysis of constrained switched linear systems.
//!
//! The crate revolves around one object: a finite family of square matrices
//! whose products are restricted by a {0,1} transition constraint. For such
//! a family it computes
//!
//! * two-sided brackets on the constrained joint spectral radius (periodic
//!   spectral radii from below, word norms from above), with stability
//!   certificates, dilation checks, and sampled robustness probes
//!   ([`bounds`]);
//! * Markov switching machinery: stationary vectors, cylinder measures,
//!   sampled laws, Lyapunov exponents and spectra, and the closing of one
//!   sampled trajectory into periodic words ([`markov`]);
//! * a gallery of rotation-driven cocycles where periodic data provably
//!   fails to attain or control the uniform growth rate ([`rotation`]);
//! * fundamental matrices of randomly driven linear ODEs with
//!   quasi-contraction subdivision tests and ergodic stability criteria
//!   ([`flow`]).
//!
//! Every stochastic routine takes an explicit seed and reproduces
//! bit-for-bit. Everything else is a pure function of its inputs.

pub mod bounds;
pub mod constraint;
pub mod error;
pub mod flow;
pub mod markov;
pub mod matrix;
pub mod rng;
pub mod rotation;

pub use bounds::{BoundsTrace, DecayCertificate, MatrixFamily};
pub use constraint::{Constraint, Word};
pub use error::{Error, Result};
pub use matrix::{Matrix, NormKind};
