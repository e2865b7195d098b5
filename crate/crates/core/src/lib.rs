//! Statistical-query hard instances on the Boolean hypercube.
//!
//! The crate builds one-dimensional distributions that match the low-order
//! moments of `Bin(m, 1/2)`, embeds them as hidden-junta distributions over
//! `{0,1}^M`, and checks the identities that make those families hard for
//! statistical-query algorithms: exact moment matching, Kravchuk/Fourier
//! structure, pairwise correlations, TV identities and query-budget
//! arithmetic. Everything runs either in exact rational arithmetic or in
//! MPFR floats of configurable precision; see [`scalar`].

pub mod cli;
pub mod error;
pub mod instance;
pub mod junta;
pub mod momentmatch;
pub mod orthopoly;
pub mod report;
pub mod scalar;
pub mod sqharness;
pub mod univariate;

pub use error::{Error, Result};
pub use scalar::{Arith, Scalar};
