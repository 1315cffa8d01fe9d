//! Numerical machinery for mean values of multiplicative functions in
//! arithmetic progressions: sieved arithmetic tables, exact Dirichlet
//! character groups, multiplicative-function models and convolution
//! splittings, progression-sum decompositions, truncated Dirichlet series
//! with an exceptional-character classifier, the pretentious distance with
//! its minimization and kernel order tests, and a reproducible experiment
//! harness.
//!
//! Everything here works in the half-plane of absolute convergence; no
//! analytic continuation is performed anywhere. Continuum suprema are
//! replaced by declared grids, so classifier-style outputs are lower bounds
//! for the quantities they discretize.

pub mod arith;
pub mod dirichlet;
pub mod error;
pub mod harness;
pub mod lseries;
pub mod meanvalue;
pub mod multfun;
pub mod pretense;
pub mod rng;
pub mod ser;

pub use error::{Error, Result};
