//! Grid-based scene flow: one tracked point per grid cell, lifted to 3D
//! with the depth of both frames.

mod depth;
mod gridflow;
mod lift;
mod lk;

pub use depth::{preprocess_depth, DepthFilter};
pub use gridflow::{format_flow, load_flow, parse_flow, save_flow, FlowFileError};
pub use lift::{bilinear_depth, lift_to_scene_flow};
pub use lk::{track_grid, LkParams, Track};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{DepthImage, GrayImage};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntrinsicsError {
    #[error("invalid intrinsics: {0}")]
    Invalid(String),
}

/// Pinhole intrinsics plus the depth unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Raw depth units per meter (5000 for TUM).
    pub depth_scale: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    /// TUM freiburg default intrinsics at VGA.
    pub fn tum_default() -> Self {
        Self {
            fx: 525.0,
            fy: 525.0,
            cx: 319.5,
            cy: 239.5,
            depth_scale: 5000.0,
            width: 640,
            height: 480,
        }
    }

    pub fn validate(&self) -> Result<(), IntrinsicsError> {
        let bad = |m: &str| Err(IntrinsicsError::Invalid(m.to_string()));
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return bad("focal lengths must be positive");
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64) {
            return bad("cx outside image");
        }
        if !(self.cy > 0.0 && self.cy < self.height as f64) {
            return bad("cy outside image");
        }
        if !(self.depth_scale > 0.0) {
            return bad("depth scale must be positive");
        }
        Ok(())
    }

    #[inline]
    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Pixel coordinates of a camera-frame point in front of the camera.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Option<Vector2<f64>> {
        (p.z > 0.0).then(|| Vector2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

/// Per-cell 3D correspondences between two frames, stored column-wise.
///
/// Cell `i` sits at row `i / cols`, column `i % cols`; its tracked pixel in
/// the previous frame is the cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFlowField {
    pub cell_size: usize,
    pub cols: usize,
    pub rows: usize,
    pub pixels_prev: Vec<Vector2<f64>>,
    pub pixels_curr: Vec<Vector2<f64>>,
    pub points_prev: Vec<Vector3<f64>>,
    pub points_curr: Vec<Vector3<f64>>,
    pub valid: Vec<bool>,
}

impl GridFlowField {
    /// All-invalid field with cell centers filled in.
    pub fn empty(cols: usize, rows: usize, cell_size: usize) -> Self {
        let n = cols * rows;
        let pixels_prev: Vec<_> = (0..n).map(|i| cell_center(i, cols, cell_size)).collect();
        Self {
            cell_size,
            cols,
            rows,
            pixels_curr: pixels_prev.clone(),
            pixels_prev,
            points_prev: vec![Vector3::zeros(); n],
            points_curr: vec![Vector3::zeros(); n],
            valid: vec![false; n],
        }
    }

    /// Grid covering an image: `floor(width / cell) x floor(height / cell)` cells.
    pub fn for_image(width: usize, height: usize, cell_size: usize) -> Self {
        Self::empty(width / cell_size, height / cell_size, cell_size)
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub fn cell_center(&self, index: usize) -> Vector2<f64> {
        cell_center(index, self.cols, self.cell_size)
    }

    /// Image-plane displacement of each cell.
    pub fn displacement(&self, index: usize) -> Vector2<f64> {
        self.pixels_curr[index] - self.pixels_prev[index]
    }

    /// Median depth of valid previous-frame points, if any.
    pub fn median_depth(&self) -> Option<f64> {
        let mut z: Vec<f64> = (0..self.len()).filter(|&i| self.valid[i]).map(|i| self.points_prev[i].z).collect();
        if z.is_empty() {
            return None;
        }
        let mid = (z.len() - 1) / 2;
        let (_, m, _) = z.select_nth_unstable_by(mid, f64::total_cmp);
        Some(*m)
    }
}

fn cell_center(index: usize, cols: usize, cell_size: usize) -> Vector2<f64> {
    let (row, col) = (index / cols, index % cols);
    let half = (cell_size / 2) as f64;
    Vector2::new((col * cell_size) as f64 + half, (row * cell_size) as f64 + half)
}

/// Full scene flow between two RGB-D frames: depth preprocessing, grid
/// tracking and lifting.
#[allow(clippy::too_many_arguments)]
pub fn compute_scene_flow(
    prev_gray: &GrayImage,
    curr_gray: &GrayImage,
    prev_depth: &DepthImage,
    curr_depth: &DepthImage,
    intrinsics: &CameraIntrinsics,
    filter: &DepthFilter,
    cell_size: usize,
    lk: &LkParams,
) -> GridFlowField {
    let dp = preprocess_depth(prev_depth, filter, intrinsics.depth_scale);
    let dc = preprocess_depth(curr_depth, filter, intrinsics.depth_scale);
    let grid = GridFlowField::for_image(prev_gray.width, prev_gray.height, cell_size);
    let tracks = track_grid(prev_gray, curr_gray, &grid.pixels_prev, lk);
    lift_to_scene_flow(&grid, &tracks, &dp, &dc, intrinsics, filter)
}
