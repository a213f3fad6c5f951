//! Diffraction tomography with arbitrary beam illumination.
//!
//! A weakly scattering 2D object is illuminated by an incident field built as
//! a superposition of monochromatic plane waves (a "beam profile" on the unit
//! circle). The beam makes a full rotation around the object while the
//! scattered wave is recorded on a fixed line. This crate simulates such
//! measurements and reconstructs the scattering potential in two steps:
//!
//! 1. per-frequency deconvolution of the angular convolution operator by
//!    truncated SVD in the Fourier basis on the circle,
//! 2. filtered backpropagation of the recovered k-space data, weighted by the
//!    Jacobian of the coverage map and its Banach indicatrix.
//!
//! The companion binary `beamdt` exposes the pipeline as subcommands
//! (`phantom`, `simulate`, `reconstruct`, `picard`, `fdt-check`,
//! `forward-direct`, `compare`, `beamview`).

pub mod beam;
pub mod cli;
pub mod error;
pub mod forward;
pub mod fourier;
pub mod inversion;
pub mod io;
pub mod kspace;
pub mod metrics;
pub mod phantom;
pub mod special;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
