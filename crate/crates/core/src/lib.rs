//! X-ray voxelization: reconstructing a y-resolved voxel volume from a single
//! projection image by example-based super-resolution over a database of
//! training volumes.
//!
//! The pipeline is `project_y` / `downsample_y` to synthesize training pairs,
//! [`training::extract_pairs`] and [`index::PatchIndex`] to hold exemplars,
//! and [`inference::voxelize`] to assemble a patch MRF, solve it and stitch
//! ranked alternative volumes. [`eval`] holds the phantom generator and the
//! resolution study.

pub mod cli;
pub mod error;
pub mod eval;
pub mod index;
pub mod inference;
pub mod io;
pub mod pgm;
pub mod projection;
pub mod training;
pub mod volume;

pub use error::{Error, Result};
pub use index::PatchIndex;
pub use training::PatchSpec;
pub use volume::{ProjectionImage, Volume};
