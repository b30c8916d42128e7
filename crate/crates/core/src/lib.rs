//! Synthetic motion-corrupted MR slices with exact SSIM labels, and the
//! evaluation protocol for reference-free SSIM regressors.
//!
//! The generation pipeline for one sample is
//! [`image::random_slice`] → [`augment::random_augment`] →
//! [`corrupt::corrupt_random`] → [`image::conform`] → [`ssim::ssim_mean`];
//! [`dataset`] runs it over many indices and writes a replayable manifest.
//! [`eval`] scores prediction files against a manifest.

pub mod augment;
pub mod binning;
pub mod corrupt;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fft;
pub mod image;
pub mod io;
pub mod manifest;
pub mod motion;
pub mod parallel;
pub mod phantom;
pub mod rng;
pub mod ssim;

pub use error::{Error, Result};
pub use image::{Slice2D, SliceRef, Volume3D};
pub use parallel::Execution;
pub use rng::SeedRng;
