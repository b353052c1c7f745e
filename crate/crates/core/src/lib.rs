//! Atoms of weighted Hardy-type spaces on the positive half-line, the Hardy
//! operator `H` and its dual `H*` in closed form, and numerical certificates
//! for the Hardy-type inequalities satisfied by their images.
//!
//! The crate is organized bottom-up:
//!
//! * [`funcrep`] exact piecewise representation of sums of `c·x^k·(ln x)^m`;
//! * [`quad`] and [`norms`] adaptive quadrature and weighted `L^q` norms;
//! * [`atoms`] synthesis and validation of `(p,q,s)_w`-atoms;
//! * [`operators`] closed-form `H` and `H*`;
//! * [`verify`] inequality checks producing [`verify::BoundReport`]s;
//! * [`extremal`] derivative-free search for worst-case atoms.

pub mod atoms;
pub mod constants;
pub mod error;
pub mod extremal;
pub mod funcrep;
pub mod norms;
pub mod operators;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
