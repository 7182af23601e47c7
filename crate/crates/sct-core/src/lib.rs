//! Scarce-view CT toolkit core: scan geometry, sinogram containers, a
//! parallel-beam projector with exact adjoint, SIRT/SART reconstruction,
//! deterministic sinogram up-sampling baselines, a small from-scratch
//! neural stack with per-offset interpolation U-nets, and PSNR metrics.
//!
//! The crate is `no_std` (with `alloc`); file formats, the CLI and the
//! experiment pipeline live in the companion `sct` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baseline;
pub mod enhance;
mod error;
pub mod geometry;
pub mod image;
pub mod interp;
pub mod metrics;
pub mod nn;
pub mod phantom;
pub mod projector;
pub mod recon;
pub mod rng;
pub mod sinogram;

pub use error::Error;
pub use geometry::ScanGeometry;
pub use image::Image;
pub use sinogram::{NormParams, Sinogram};

pub type Result<T> = core::result::Result<T, Error>;
