//! Exact CM values of Borcherds forms attached to imaginary quadratic
//! fields ℚ(√−d) with d ≡ 3 (mod 4).
//!
//! Values of the form Σ e_p·log p are carried exactly as [`FactoredLog`];
//! the one transcendental constant, k₀(0), stays symbolic until a report
//! asks for numbers.

pub mod arith;
pub mod cmvalue;
pub mod error;
pub mod forms;
pub mod gzoracle;
pub mod kappa;
pub mod lattice;
pub mod locwhit;
pub mod precise;
pub mod quadfield;
pub mod selftest;
pub mod special;

pub use arith::{FactoredLog, Place, Rational};
pub use error::{Error, Result};
