use rand::seq::index;
use rand::Rng;

use super::{EntropyField, SegmentationError, SegmentationParams};
use crate::geometry::{fit_correspondences, squared_residual, Pose};
use crate::sceneflow::GridFlowField;

/// Candidate rigid motion with its per-cell squared errors and inliers.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionHypothesis {
    pub motion: Pose,
    /// `None` for cells without valid flow.
    pub errors: Vec<Option<f64>>,
    pub inliers: Vec<bool>,
    pub support: usize,
}

impl MotionHypothesis {
    /// Scores `motion` against every valid cell of `flow`.
    pub fn evaluate(motion: Pose, flow: &GridFlowField, th_inlier: f64) -> Self {
        let errors: Vec<Option<f64>> = (0..flow.len())
            .map(|i| flow.valid[i].then(|| squared_residual(&motion, &flow.points_prev[i], &flow.points_curr[i])))
            .collect();
        let inliers: Vec<bool> = errors.iter().map(|e| e.is_some_and(|e| e < th_inlier)).collect();
        let support = inliers.iter().filter(|b| **b).count();
        Self {
            motion,
            errors,
            inliers,
            support,
        }
    }
}

/// Valid cells within Chebyshev grid radius `radius` of `seed`, seed excluded.
pub fn neighborhood(flow: &GridFlowField, seed: usize, radius: usize) -> Vec<usize> {
    let (row, col) = flow.row_col(seed);
    let mut out = Vec::new();
    for r in row.saturating_sub(radius)..=(row + radius).min(flow.rows - 1) {
        for c in col.saturating_sub(radius)..=(col + radius).min(flow.cols - 1) {
            let i = flow.index(r, c);
            if i != seed && flow.valid[i] {
                out.push(i);
            }
        }
    }
    out
}

/// Draws an index with probability proportional to `weights`.
fn weighted_draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last
}

/// One minimal-sample hypothesis: an entropy-weighted seed cell plus
/// `m - 1` random valid cells from its grid neighborhood.
pub fn sample_hypothesis<R: Rng + ?Sized>(
    flow: &GridFlowField,
    entropy: &EntropyField,
    params: &SegmentationParams,
    rng: &mut R,
) -> Result<MotionHypothesis, SegmentationError> {
    let weights: Vec<f64> = (0..flow.len())
        .map(|i| if flow.valid[i] { entropy.s[i].max(0.0) } else { 0.0 })
        .collect();
    let need = params.m.saturating_sub(1);
    for _ in 0..=params.max_seed_retries {
        let Some(seed) = weighted_draw(&weights, rng) else {
            return Err(SegmentationError::NoValidFlow);
        };
        let nbrs = neighborhood(flow, seed, params.r_search);
        if nbrs.len() < need {
            continue;
        }
        let mut cells = vec![seed];
        cells.extend(index::sample(rng, nbrs.len(), need).into_iter().map(|k| nbrs[k]));
        let mut selected = vec![false; flow.len()];
        for &c in &cells {
            selected[c] = true;
        }
        let Ok(motion) = fit_correspondences(&flow.points_prev, &flow.points_curr, |i| selected[i] as u8 as f64) else {
            continue;
        };
        return Ok(MotionHypothesis::evaluate(motion, flow, params.th_inlier));
    }
    Err(SegmentationError::SamplingFailed)
}

/// Refits on all current inliers, wherever they are in the image, until
/// the inlier set stops changing (at most `max_refine_iterations` fits).
pub fn refine_hypothesis(
    hypothesis: &MotionHypothesis,
    flow: &GridFlowField,
    th_inlier: f64,
    max_iterations: usize,
) -> Result<MotionHypothesis, SegmentationError> {
    let mut current = hypothesis.clone();
    for _ in 0..max_iterations.max(1) {
        if current.support < 3 {
            return Err(SegmentationError::CollapsedSupport);
        }
        let inliers = &current.inliers;
        let motion = fit_correspondences(&flow.points_prev, &flow.points_curr, |i| inliers[i] as u8 as f64)
            .map_err(|_| SegmentationError::CollapsedSupport)?;
        let next = MotionHypothesis::evaluate(motion, flow, th_inlier);
        let fixed = next.inliers == current.inliers;
        current = next;
        if fixed {
            break;
        }
    }
    if current.support < 3 {
        return Err(SegmentationError::CollapsedSupport);
    }
    Ok(current)
}
