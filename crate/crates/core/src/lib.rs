//! Pseudo-spectral solver for a Navier–Stokes–Cahn–Hilliard system coupled to a
//! Keller–Segel-type concentration with cross diffusion and logistic
//! degradation, with diagnostics for its energy law, mass dynamics,
//! coercivity bounds and sign preservation.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli_io;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod init;
pub mod par;
pub mod potential;
pub mod spectral;
pub mod timestepper;

pub use error::{Error, Result};
pub use par::Exec;
pub use spectral::{DomainMode, Grid, NormKind, ScalarField, Spectrum, VectorField};
