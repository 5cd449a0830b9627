//! Frame-to-frame camera motion from the cells labelled static.

mod pipeline;

pub use pipeline::{Diagnostics, FrameResult, Pipeline, PipelineParams, StageTimes};

use thiserror::Error;

use crate::geometry::{fit_correspondences, squared_residual, GeometryError, Pose};
use crate::sceneflow::GridFlowField;
use crate::tracking::LabelField;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OdometryError {
    #[error("no labeled valid cells")]
    NoLabeledCells,
    #[error("static cells do not determine a rigid motion: {0}")]
    StaticSetDegenerate(GeometryError),
}

/// How the background label is picked among tracked labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StaticLabelRule {
    /// Largest number of valid cells each frame.
    Majority,
    /// Keep the previous background label while it still covers at least
    /// three valid cells; fall back to the majority otherwise.
    #[default]
    Persistent,
}

impl std::str::FromStr for StaticLabelRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" => Ok(Self::Majority),
            "persistent" => Ok(Self::Persistent),
            other => Err(format!("unknown static rule '{other}' (majority|persistent)")),
        }
    }
}

impl std::fmt::Display for StaticLabelRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Majority => "majority",
            Self::Persistent => "persistent",
        })
    }
}

/// Label covering the most valid cells. Ties go to the label with the
/// longer `lifetime`, then to the lower id.
pub fn select_static_label(labels: &LabelField, valid: &[bool], lifetime: impl Fn(u32) -> usize) -> Result<u32, OdometryError> {
    let max = labels.labels.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0usize; max + 1];
    for (&l, &v) in labels.labels.iter().zip(valid) {
        if v && l > 0 {
            counts[l as usize] += 1;
        }
    }
    (1..=max)
        .filter(|&l| counts[l] > 0)
        .max_by(|&a, &b| {
            counts[a]
                .cmp(&counts[b])
                .then(lifetime(a as u32).cmp(&lifetime(b as u32)))
                .then(b.cmp(&a))
        })
        .map(|l| l as u32)
        .ok_or(OdometryError::NoLabeledCells)
}

/// Rigid scene motion over the masked valid cells, refitted once on the
/// cells whose residual is within `th_inlier` when at least three remain.
pub fn fit_masked_motion(flow: &GridFlowField, mask: &[bool], th_inlier: f64) -> Result<Pose, GeometryError> {
    let sel = |i: usize| (mask[i] && flow.valid[i]) as u8 as f64;
    let first = fit_correspondences(&flow.points_prev, &flow.points_curr, sel)?;
    let keep: Vec<bool> = (0..flow.len())
        .map(|i| sel(i) > 0.0 && squared_residual(&first, &flow.points_prev[i], &flow.points_curr[i]) <= th_inlier)
        .collect();
    if keep.iter().filter(|k| **k).count() < 3 {
        return Ok(first);
    }
    Ok(fit_correspondences(&flow.points_prev, &flow.points_curr, |i| keep[i] as u8 as f64).unwrap_or(first))
}

/// Camera motion from frame `k - 1` to `k`: the inverse of the static
/// scene's rigid motion.
pub fn estimate_ego_motion(flow: &GridFlowField, static_mask: &[bool], th_inlier: f64) -> Result<Pose, OdometryError> {
    fit_masked_motion(flow, static_mask, th_inlier)
        .map(|h| h.inverse())
        .map_err(OdometryError::StaticSetDegenerate)
}
