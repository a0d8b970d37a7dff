//! Fractional quantum mechanics in an infinite square well.
//!
//! The crate provides the real-space Riesz operator, the closed-form
//! spectrum, two independent propagator constructions, the Levy stable
//! densities behind them, and the moving-wall quasienergy model.
//!
//! Data-parallel kernels run on rayon with the default `parallel` feature.
//! Building without it, or wrapping a call in [`par::sequential`], selects
//! the sequential path; both produce bit-identical results.

pub mod error;
pub mod operator;
pub mod par;
pub mod params;
pub mod propagator;
pub mod quadrature;
pub mod spectral;
pub mod stable;
pub mod walls;

pub use error::{Error, Result};
pub use params::{BoxParams, Grid, GridFunction, QuadratureSpec};
