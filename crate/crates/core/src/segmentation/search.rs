use rand::Rng;

use super::{
    cluster_hypotheses, refine_hypothesis, sample_hypothesis, update_entropy, EntropyField, MotionHypothesis, SegmentationError,
    SegmentationParams, SpatialSegmentation,
};
use crate::sceneflow::GridFlowField;

#[derive(Debug, Clone)]
pub struct MotionSearch {
    pub hypotheses: Vec<MotionHypothesis>,
    pub entropy: EntropyField,
    /// Mean entropy over valid cells, starting with the initial field.
    pub mean_entropy: Vec<f64>,
    /// Sampling attempts, failed ones included.
    pub attempts: usize,
}

/// Sample, refine, append, update entropy; repeat until `h_max` hypotheses
/// exist, mean entropy falls under `s_stop`, or it stops falling.
pub fn search_motions<R: Rng + ?Sized>(
    flow: &GridFlowField,
    params: &SegmentationParams,
    rng: &mut R,
) -> Result<MotionSearch, SegmentationError> {
    if flow.n_valid() < params.m.max(3) {
        return Err(SegmentationError::NoValidFlow);
    }
    let mut hypotheses = Vec::with_capacity(params.h_max);
    let mut entropy = update_entropy(&hypotheses, &flow.valid, params.lambda, params.delta);
    let mut means = vec![entropy.mean(&flow.valid)];
    let max_attempts = 3 * params.h_max.max(1);
    let mut attempts = 0;

    while hypotheses.len() < params.h_max && attempts < max_attempts {
        attempts += 1;
        let Ok(sampled) = sample_hypothesis(flow, &entropy, params, rng) else {
            continue;
        };
        let Ok(refined) = refine_hypothesis(&sampled, flow, params.th_inlier, params.max_refine_iterations) else {
            continue;
        };
        hypotheses.push(refined);
        entropy = update_entropy(&hypotheses, &flow.valid, params.lambda, params.delta);
        let mean = entropy.mean(&flow.valid);
        means.push(mean);
        if mean < params.s_stop {
            break;
        }
        let w = params.saturation_window;
        if w > 0 && means.len() > w && means[means.len() - 1 - w] - mean < params.s_saturation {
            break;
        }
    }
    Ok(MotionSearch {
        hypotheses,
        entropy,
        mean_entropy: means,
        attempts,
    })
}

/// Hypothesis search followed by clustering.
pub fn segment<R: Rng + ?Sized>(
    flow: &GridFlowField,
    params: &SegmentationParams,
    rng: &mut R,
) -> Result<SpatialSegmentation, SegmentationError> {
    let search = search_motions(flow, params, rng)?;
    if search.hypotheses.is_empty() {
        return Err(SegmentationError::SamplingFailed);
    }
    Ok(cluster_hypotheses(&search.hypotheses, flow, params))
}
