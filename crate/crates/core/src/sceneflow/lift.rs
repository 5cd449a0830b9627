use super::{CameraIntrinsics, DepthFilter, GridFlowField, Track};
use crate::image::DepthImage;

/// Lifts 2D grid tracks to 3D correspondences.
///
/// The previous point uses the depth at the (integer) cell center; the
/// current point uses bilinearly interpolated depth at the tracked subpixel
/// location. Every stencil pixel with non-zero weight must be valid.
pub fn lift_to_scene_flow(
    grid: &GridFlowField,
    tracks: &[Track],
    depth_prev: &DepthImage,
    depth_curr: &DepthImage,
    intrinsics: &CameraIntrinsics,
    filter: &DepthFilter,
) -> GridFlowField {
    assert_eq!(grid.len(), tracks.len());
    let mut out = GridFlowField::empty(grid.cols, grid.rows, grid.cell_size);
    let scale = intrinsics.depth_scale;
    for (i, track) in tracks.iter().enumerate() {
        let c = out.pixels_prev[i];
        out.pixels_curr[i] = track.pixel;
        if !track.converged {
            continue;
        }
        let (u, v) = (c.x as usize, c.y as usize);
        if u >= depth_prev.width || v >= depth_prev.height {
            continue;
        }
        let Some(z_prev) = filter.meters(depth_prev.get(u, v), scale) else {
            continue;
        };
        let Some(z_curr) = bilinear_depth(depth_curr, track.pixel.x, track.pixel.y, filter, scale) else {
            continue;
        };
        out.points_prev[i] = intrinsics.back_project(c.x, c.y, z_prev);
        out.points_curr[i] = intrinsics.back_project(track.pixel.x, track.pixel.y, z_curr);
        out.valid[i] = true;
    }
    out
}

/// Bilinear interpolation of metric depth; `None` if any contributing
/// stencil pixel is invalid or outside the image.
pub fn bilinear_depth(depth: &DepthImage, x: f64, y: f64, filter: &DepthFilter, scale: f64) -> Option<f64> {
    if !(x >= 0.0 && y >= 0.0) {
        return None;
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let ax = x - x0 as f64;
    let ay = y - y0 as f64;
    let mut acc = 0.0;
    for (dx, dy, w) in [
        (0, 0, (1.0 - ax) * (1.0 - ay)),
        (1, 0, ax * (1.0 - ay)),
        (0, 1, (1.0 - ax) * ay),
        (1, 1, ax * ay),
    ] {
        if w <= 0.0 {
            continue;
        }
        let (xx, yy) = (x0 + dx, y0 + dy);
        if xx >= depth.width || yy >= depth.height {
            return None;
        }
        acc += w * filter.meters(depth.get(xx, yy), scale)?;
    }
    Some(acc)
}
