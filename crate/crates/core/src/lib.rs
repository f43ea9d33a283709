//! Exact-arithmetic computations in affine Hecke algebras attached to root data
//! with positive label functions.
//!
//! The crate is organized around the pipeline
//! root datum -> affine Weyl group -> Hecke algebra -> spectral data -> K-theory ranks:
//!
//! - [`coefficients`]: multivariate Laurent polynomials in the label variables
//!   `q_i^{1/2}` with integer coefficients, and exact/float specialization.
//! - [`root_datum`]: root data `(X, Y, R0, R0v, F0)`, the built-in families,
//!   duals, products and parabolic subdata.
//! - [`weyl`]: finite and affine Weyl groups, the translation-aware length
//!   function, reduced words, and growth estimates.
//! - [`hecke`]: the affine Hecke algebra in the `N_w` basis, the Bernstein
//!   presentation, traces and idempotents.
//! - [`spectral`]: torus points with exact unitary/label-exponent parts,
//!   c-function bookkeeping and the residual coset classification.
//! - [`reps`]: principal series matrices, weights, intertwiners, tempered and
//!   discrete-series tests, truncated projectors.
//! - [`ktheory`]: extended quotients, character-sum Betti numbers, partition
//!   formulas and the spectrum rank tables.

pub mod coefficients;
pub mod error;
pub mod hecke;
pub mod intmat;
pub mod ktheory;
pub mod reps;
pub mod root_datum;
pub mod spectral;
pub mod weyl;

pub use error::HkError;
