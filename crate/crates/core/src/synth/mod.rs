//! Ray-cast synthetic RGB-D sequences with exact scene flow.
//!
//! Scenes are axis-aligned boxes and planes in their own body frames, each
//! following a per-frame pose trajectory, seen by a moving pinhole camera.
//! Ground truth flow is computed analytically at cell centers before any
//! noise is added.

pub mod presets;
mod render;
mod spec;

pub use render::{cast_ray, render_sequence, FrameScene, RayHit, Sequence};
pub use spec::{BodySpec, NoiseSpec, PoseSpec, SceneSpec, Shape, TrajectorySpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene has no bodies or no frames")]
    EmptyScene,
    #[error("{what} trajectory has {found} poses, expected {expected}")]
    TrajectoryLength { what: String, expected: usize, found: usize },
    #[error("bodies {0} and {1} intersect at frame 0")]
    BodiesIntersect(usize, usize),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
