//! Visual odometry for RGB-D sequences that contain independently moving
//! rigid objects.
//!
//! The pipeline samples one scene flow vector per grid cell, segments the
//! flow into rigid motions with entropy-guided hypothesis search and DBSCAN,
//! tracks segments over time with a per-cell dual-mode (apparent/candidate)
//! label model, and estimates the camera motion from cells labelled static.
//!
//! ```text
//! depth + intensity ──► sceneflow ──► segmentation ──► tracking ──► odometry
//!                                                                 │
//!                          synth (ground truth) ──────────────────┘
//! ```

pub mod config;
pub mod dataset;
pub mod geometry;
pub mod image;
pub mod odometry;
pub mod plot;
pub mod run;
pub mod sceneflow;
pub mod segmentation;
pub mod synth;
pub mod tracking;

pub use config::RunConfig;
pub use geometry::{Pose, PointSet3, Trajectory};
pub use odometry::{FrameResult, Pipeline};
pub use sceneflow::{CameraIntrinsics, GridFlowField};
