//! Divergence functionals and their Fisher limit, Gaussian fluctuation
//! kernels, Madelung hydrodynamics, reference Schrödinger solvers and a
//! position/momentum transform.
//!
//! Everything works on uniform periodic 1-D grids ([`lattice::Grid`]).

// NaN must fail parameter checks, hence `!(x > 0.0)` style guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod fluctuation;
mod fourier;
pub mod hydrodyn;
pub mod infometrics;
pub mod lattice;
pub mod packets;
pub mod schrodinger;
pub mod transform;
pub mod variational;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
