//! Numerical laboratory for typical points of one-parameter families of
//! piecewise expanding interval maps.
//!
//! The crate is organised bottom-up: [`maps`] builds families and evaluates
//! them, [`symbolic`] enumerates cylinders and kneading words,
//! [`param_derivative`] differentiates orbits in the parameter, [`density`]
//! estimates invariant densities and [`typicality`] compares Birkhoff averages
//! against them. [`cli`] wires everything to the `typlab` binary.

pub mod cli;
pub mod curve;
pub mod density;
pub mod error;
pub mod grid;
pub mod interval;
pub mod maps;
pub mod output;
pub mod param_derivative;
pub mod symbolic;
pub mod typicality;

pub use error::{Error, Result};
pub use interval::Interval;
