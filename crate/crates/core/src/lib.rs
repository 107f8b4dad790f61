//! Optical Braille recognition: page images in, Grade-1 English text out.
//!
//! The pipeline runs [`raster::preprocess`] → [`dot_detect::hough_circles`] →
//! [`cell_cluster::cluster_cells`] → [`transcribe`] and is wrapped end to end
//! by [`pipeline::analyze`]. [`synth`] renders pages with ground truth and
//! [`eval`] scores results against it.

pub mod cell_cluster;
pub mod dot_detect;
pub mod error;
pub mod eval;
#[cfg(feature = "oracles")]
pub mod oracles;
pub mod pipeline;
pub mod raster;
pub mod synth;
pub mod transcribe;

pub use cell_cluster::{BrailleCell, BrailleGeometry, LayoutParams, NeighborStats};
pub use dot_detect::{Dot, HoughParams};
pub use error::{Error, Result};
pub use raster::{BinaryRaster, GrayRaster, Image, RgbRaster};
pub use transcribe::{BrailleTable, Centroid, FeatureVector, ForestModel};
