//! Swept-beam photoacoustic fluence modelling and compensation.
//!
//! The crate evaluates diffusion-theory fluence models for an obliquely
//! incident pencil beam, checks them against a photon-transport Monte Carlo
//! reference, estimates the medium's optical parameters from multi-fiber
//! photoacoustic measurements and corrects measured absorption spectra for the
//! wavelength-dependent fluence.
//!
//! Lengths are in millimetres and optical coefficients in mm⁻¹ throughout.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod config;
pub mod correct;
pub mod error;
pub mod estimation;
pub mod fluence;
pub mod geometry;
pub mod io;
pub mod montecarlo;
pub mod quadrature;
pub mod synth;
pub mod tensor;

pub use error::{Error, ErrorClass, Result};
