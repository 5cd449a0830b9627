//! Rigid-body math: poses, least-squares rigid fitting, the per-point
//! rigid transformation error, trajectories and relative pose error.

mod fit;
mod pose;
mod rpe;
mod trajectory;

pub use fit::{fit_correspondences, fit_rigid, rigid_error, squared_residual, PointSet3};
pub use pose::Pose;
pub use rpe::{relative_pose_error, RpeInterval, RpeSummary, ASSOCIATION_TOLERANCE};
pub use trajectory::{Trajectory, TrajectoryError};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("need at least 3 valid point pairs, got {0}")]
    InsufficientPoints(usize),
    #[error("degenerate point configuration (collinear or coincident)")]
    DegenerateConfiguration,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("trajectories have no overlapping intervals")]
    NoTemporalOverlap,
}
