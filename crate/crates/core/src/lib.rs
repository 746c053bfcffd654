//! Object detection with histograms of oriented gradients and template
//! matching.
//!
//! The pipeline runs in this order:
//!
//! - [`imgio`] decodes PNG/PGM/PPM, converts to luminance and resamples.
//! - [`features`] computes centered-difference gradients and thresholded
//!   per-cell orientation counts.
//! - [`glyph`] renders those counts as oriented line glyphs.
//! - [`training`] turns annotated windows into a template: the mean of the
//!   positive features minus the mean of the negative features.
//! - [`detector`] scores templates by cosine similarity, suppresses nearby
//!   boxes and searches an image pyramid.
//!
//! All kernels are deterministic; parallel execution (capped through the
//! `HOGKIT_THREADS` environment variable) never changes results.

pub mod bench;
pub mod cli;
pub mod detector;
pub mod error;
pub mod features;
pub mod glyph;
pub mod imgio;
pub mod overlay;
pub mod parallel;
pub mod training;

pub use detector::{
    detect, detect_multiscale, nms_top_n, score_map, Detection, NmsConfig, PyramidConfig, ScoreGrid,
};
pub use error::{Error, Result};
pub use features::{gradient, hog, normalize_cells, GradientField, HogGrid, HogParams};
pub use glyph::{hogdraw, GlyphConfig};
pub use imgio::{load_image, resize_bilinear, save_image, to_gray, GrayImage, RgbImage};
pub use training::{build_template, extract_patch, Annotation, Polarity, Template};
