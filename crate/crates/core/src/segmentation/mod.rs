//! Per-frame-pair spatial motion segmentation.
//!
//! Hypotheses are drawn from small neighbourhoods seeded where the current
//! hypothesis set explains the flow worst (the entropy field), refined on
//! all of their inliers, and finally grouped with DBSCAN into distinct
//! rigid motions that partition the grid.

mod cluster;
mod dbscan;
mod entropy;
mod hypothesis;
mod search;

pub use cluster::{cluster_hypotheses, format_segmentation, SpatialSegmentation};
pub use dbscan::dbscan;
pub use entropy::{update_entropy, EntropyField};
pub use hypothesis::{neighborhood, refine_hypothesis, sample_hypothesis, MotionHypothesis};
pub use search::{search_motions, segment, MotionSearch};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentationError {
    #[error("no valid scene flow")]
    NoValidFlow,
    #[error("could not sample a hypothesis after repeated seed retries")]
    SamplingFailed,
    #[error("hypothesis support collapsed below 3 cells")]
    CollapsedSupport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationParams {
    /// Maximum number of hypotheses per frame pair.
    pub h_max: usize,
    /// Squared-error inlier threshold (m^2).
    pub th_inlier: f64,
    /// Points per minimal sample.
    pub m: usize,
    /// Neighbourhood radius for the sample, in grid cells (Chebyshev).
    pub r_search: usize,
    pub lambda: f64,
    pub delta: f64,
    /// Stop once mean entropy over valid cells drops below this.
    pub s_stop: f64,
    /// Stop once mean entropy fell by less than this over `saturation_window` appends.
    pub s_saturation: f64,
    pub saturation_window: usize,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub max_refine_iterations: usize,
    pub max_seed_retries: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            h_max: 20,
            th_inlier: 3e-5,
            m: 7,
            r_search: 2,
            lambda: 1e3,
            delta: 1e-2,
            s_stop: 0.1,
            s_saturation: 0.01,
            saturation_window: 3,
            dbscan_eps: 0.005,
            dbscan_min_pts: 1,
            max_refine_iterations: 10,
            max_seed_retries: 10,
        }
    }
}

#[cfg(test)]
pub(crate) mod test_fields {
    use crate::geometry::Pose;
    use crate::sceneflow::{CameraIntrinsics, GridFlowField};

    /// Cells on a curved surface about 2 m away, each moved by the motion
    /// picked by `owner(row, col)`.
    pub fn field_from_motions(cols: usize, rows: usize, owner: impl Fn(usize, usize) -> usize, motions: &[Pose]) -> GridFlowField {
        let k = CameraIntrinsics {
            fx: 525.0,
            fy: 525.0,
            cx: (cols * 8) as f64,
            cy: (rows * 8) as f64,
            depth_scale: 5000.0,
            width: cols * 16,
            height: rows * 16,
        };
        let mut f = GridFlowField::empty(cols, rows, 16);
        for i in 0..f.len() {
            let (r, c) = f.row_col(i);
            let z = 2.0 + 0.3 * (c as f64 * 0.4).sin() + 0.2 * (r as f64 * 0.3).cos();
            let px = f.pixels_prev[i];
            let p = k.back_project(px.x, px.y, z);
            let q = motions[owner(r, c)].transform_point(&p);
            f.points_prev[i] = p;
            f.points_curr[i] = q;
            f.pixels_curr[i] = k.project(&q).unwrap();
            f.valid[i] = true;
        }
        f
    }

    pub fn single_motion_field(cols: usize, rows: usize, motion: &Pose) -> GridFlowField {
        field_from_motions(cols, rows, |_, _| 0, std::slice::from_ref(motion))
    }
}
