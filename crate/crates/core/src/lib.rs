//! Iterative calibration of wide-angle and fisheye cameras from AprilGrid boards.
//!
//! The pipeline detects the board, fits an intermediate camera model, reprojects the
//! full board through it to recover features the detector missed, refines every feature
//! to subpixel accuracy and re-solves. [`synth`] renders ground-truth scenes for
//! verification.

pub mod app;
pub mod board;
pub mod camera;
pub mod config;
pub mod detector;
pub mod error;
pub mod io;
pub mod lm;
pub mod pipeline;
pub mod pose;
pub mod raster;
pub mod refine;
pub mod report;
pub mod solver;
pub mod synth;

pub use camera::{CameraModel, ModelKind, Pixel, Point3, Projection};
pub use error::{Error, Result};
