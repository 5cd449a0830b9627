use std::collections::{BTreeMap, VecDeque};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{estimate_ego_motion, fit_masked_motion, select_static_label, StaticLabelRule};
use crate::geometry::Pose;
use crate::image::{DepthImage, GrayImage};
use crate::sceneflow::{compute_scene_flow, CameraIntrinsics, DepthFilter, GridFlowField, LkParams};
use crate::segmentation::{segment, SegmentationParams};
use crate::tracking::{
    compensate_models, extract_labels, match_segments, relabel, update_models, warp_labels, DualModeCell, LabelField, LabelRegistry,
    LabeledFrame, SegmentMatch, TrackingParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub intrinsics: CameraIntrinsics,
    pub cell_size: usize,
    pub depth_filter: DepthFilter,
    pub lk: LkParams,
    pub segmentation: SegmentationParams,
    pub tracking: TrackingParams,
    pub static_rule: StaticLabelRule,
    pub seed: u64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::tum_default(),
            cell_size: 16,
            depth_filter: DepthFilter::default(),
            lk: LkParams::default(),
            segmentation: SegmentationParams::default(),
            tracking: TrackingParams::default(),
            static_rule: StaticLabelRule::default(),
            seed: 0,
        }
    }
}

/// Wall time per stage in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimes {
    pub flow: f64,
    pub segmentation: f64,
    pub tracking: f64,
    pub ego_motion: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.flow + self.segmentation + self.tracking + self.ego_motion
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub n_valid_cells: usize,
    /// Distinct motions found in this frame pair.
    pub g: usize,
    /// Segment matching score, 0 when there was nothing to match.
    pub score: f64,
    /// Pipeline time excluding scene flow computation.
    pub runtime_ms: f64,
    pub stages: StageTimes,
    /// The pose delta was carried over from the previous frame.
    pub hold: bool,
    /// Background label, 0 if none.
    pub static_label: u32,
}

/// Output for frame `index`. Per-cell fields live on the grid of frame
/// `index - 1`, where the frame pair's flow is sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub index: usize,
    /// Camera motion from frame `index - 1` to `index`.
    pub pose_delta: Pose,
    /// Camera-to-world pose; the first frame defines the world frame.
    pub pose_world: Pose,
    /// Spatial segment per cell (0 = unassigned).
    pub segments: Vec<u32>,
    pub labels: LabelField,
    pub static_mask: Vec<bool>,
    /// Rigid motion of each dynamic label's points, expressed as
    /// `x_curr = H x_prev` in camera coordinates.
    pub object_motions: BTreeMap<u32, Pose>,
    pub diagnostics: Diagnostics,
}

/// Sequential odometry state. Feed frames with [`Pipeline::process_frame`]
/// or precomputed flow with [`Pipeline::process_flow`].
#[derive(Debug, Clone)]
pub struct Pipeline {
    params: PipelineParams,
    rng: ChaCha8Rng,
    index: usize,
    previous_images: Option<(GrayImage, DepthImage)>,
    previous_flow: Option<GridFlowField>,
    history: VecDeque<LabeledFrame>,
    cells: Vec<DualModeCell>,
    labels: LabelField,
    registry: LabelRegistry,
    pose_world: Pose,
    pose_delta: Pose,
    static_label: Option<u32>,
}

impl Pipeline {
    pub fn new(params: PipelineParams) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            registry: LabelRegistry::new(params.tracking.n_obj),
            params,
            index: 0,
            previous_images: None,
            previous_flow: None,
            history: VecDeque::new(),
            cells: Vec::new(),
            labels: LabelField::default(),
            pose_world: Pose::identity(),
            pose_delta: Pose::identity(),
            static_label: None,
        }
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    /// Index of the last processed frame.
    pub fn frame_index(&self) -> usize {
        self.index
    }

    pub fn registry(&self) -> &LabelRegistry {
        &self.registry
    }

    /// Current per-cell label models.
    pub fn models(&self) -> &[DualModeCell] {
        &self.cells
    }

    /// Computes scene flow against the previous frame and processes it. The
    /// first call only stores the frame and returns the identity.
    pub fn process_frame(&mut self, gray: GrayImage, depth: DepthImage) -> FrameResult {
        let Some((pg, pd)) = self.previous_images.take() else {
            self.previous_images = Some((gray, depth));
            return self.initial_result();
        };
        let t = Instant::now();
        let p = &self.params;
        let flow = compute_scene_flow(&pg, &gray, &pd, &depth, &p.intrinsics, &p.depth_filter, p.cell_size, &p.lk);
        let flow_ms = ms(t);
        self.previous_images = Some((gray, depth));
        let mut r = self.process_flow(flow);
        r.diagnostics.stages.flow = flow_ms;
        r
    }

    /// Result for frame 0: identity pose, nothing labeled.
    pub fn initial_result(&self) -> FrameResult {
        FrameResult {
            index: 0,
            pose_delta: Pose::identity(),
            pose_world: Pose::identity(),
            segments: Vec::new(),
            labels: LabelField::default(),
            static_mask: Vec::new(),
            object_motions: BTreeMap::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    /// Processes the flow from the last frame to a new one.
    pub fn process_flow(&mut self, flow: GridFlowField) -> FrameResult {
        let start = Instant::now();
        self.index += 1;
        let k = self.index;
        let tp = self.params.tracking;
        let n = flow.len();

        let t = Instant::now();
        if self.cells.len() != n || self.previous_flow.as_ref().is_some_and(|f| (f.cols, f.rows) != (flow.cols, flow.rows)) {
            self.cells = vec![DualModeCell::default(); n];
            self.labels = LabelField::unknown(n);
            self.history.clear();
            self.previous_flow = None;
        }
        if let Some(pf) = self.previous_flow.take() {
            self.cells = compensate_models(&self.cells, &pf, tp.alpha_max);
            self.labels.labels = warp_labels(&self.labels.labels, &pf);
            for h in self.history.iter_mut() {
                h.labels = warp_labels(&h.labels, &pf);
            }
        }
        let carry_ms = ms(t);

        let t = Instant::now();
        let segmentation = segment(&flow, &self.params.segmentation, &mut self.rng);
        let seg_ms = ms(t);
        let n_valid = flow.n_valid();
        let Ok(seg) = segmentation else {
            let mut r = self.hold_result(k, n, n_valid);
            r.diagnostics.stages.tracking = carry_ms;
            r.diagnostics.stages.segmentation = seg_ms;
            r.diagnostics.runtime_ms = ms(start);
            self.previous_flow = Some(flow);
            return r;
        };

        let t = Instant::now();
        let history: Vec<LabeledFrame> = self.history.iter().cloned().collect();
        let matched = match_segments(&seg.assignment, &history, tp.c_min).unwrap_or_else(|_| SegmentMatch::all_unmatched(&seg.assignment));
        let (measurement, mapping) = relabel(&seg.assignment, &matched, &mut self.registry, k);
        let updated = update_models(&mut self.cells, &measurement.labels, tp.n_obj, tp.alpha_max);
        self.labels = extract_labels(&self.cells, &updated, &self.labels);
        self.history.push_back(LabeledFrame {
            frame: k,
            labels: measurement.labels.clone(),
        });
        while self.history.len() > tp.history.max(1) {
            self.history.pop_front();
        }
        let track_ms = carry_ms + ms(t);

        let t = Instant::now();
        let warm_up = (k as f64) <= tp.alpha_max;
        let registry = &self.registry;
        let lifetime = |l: u32| registry.lifetime(l, k).unwrap_or(0);
        let majority = select_static_label(&self.labels, &flow.valid, lifetime).ok();
        let static_label = if warm_up {
            mapping.first().copied().filter(|&l| l > 0).or(majority)
        } else {
            match (self.params.static_rule, self.static_label) {
                (StaticLabelRule::Persistent, Some(prev)) if self.labels.count(prev, &flow.valid) >= 3 => Some(prev),
                _ => majority,
            }
        };
        self.static_label = static_label.or(self.static_label);
        let s = static_label.unwrap_or(0);
        let static_mask = label_mask(&self.labels, &measurement, &flow.valid, s);
        let (pose_delta, hold) = match estimate_ego_motion(&flow, &static_mask, self.params.segmentation.th_inlier) {
            Ok(p) if s > 0 => (p, false),
            _ => (self.pose_delta, true),
        };

        let mut object_motions = BTreeMap::new();
        let mut present: Vec<u32> = self.labels.labels.iter().copied().filter(|&l| l > 0 && l != s).collect();
        present.sort_unstable();
        present.dedup();
        for l in present {
            let mask = label_mask(&self.labels, &measurement, &flow.valid, l);
            if mask.iter().filter(|m| **m).count() >= 3 {
                if let Ok(h) = fit_masked_motion(&flow, &mask, self.params.segmentation.th_inlier) {
                    object_motions.insert(l, h);
                }
            }
        }
        let ego_ms = ms(t);

        self.pose_delta = pose_delta;
        self.pose_world = self.pose_world * pose_delta;
        self.previous_flow = Some(flow);
        FrameResult {
            index: k,
            pose_delta,
            pose_world: self.pose_world,
            segments: seg.assignment.clone(),
            labels: self.labels.clone(),
            static_mask,
            object_motions,
            diagnostics: Diagnostics {
                n_valid_cells: n_valid,
                g: seg.g(),
                score: matched.score,
                runtime_ms: ms(start),
                stages: StageTimes {
                    flow: 0.0,
                    segmentation: seg_ms,
                    tracking: track_ms,
                    ego_motion: ego_ms,
                },
                hold,
                static_label: s,
            },
        }
    }

    fn hold_result(&mut self, k: usize, n: usize, n_valid: usize) -> FrameResult {
        self.pose_world = self.pose_world * self.pose_delta;
        FrameResult {
            index: k,
            pose_delta: self.pose_delta,
            pose_world: self.pose_world,
            segments: vec![0; n],
            labels: self.labels.clone(),
            static_mask: vec![false; n],
            object_motions: BTreeMap::new(),
            diagnostics: Diagnostics {
                n_valid_cells: n_valid,
                hold: true,
                static_label: self.static_label.unwrap_or(0),
                ..Diagnostics::default()
            },
        }
    }
}

/// Valid cells whose model label and current measurement both equal
/// `label`; model label alone if that leaves fewer than three cells.
fn label_mask(model: &LabelField, measurement: &LabelField, valid: &[bool], label: u32) -> Vec<bool> {
    if label == 0 {
        return vec![false; valid.len()];
    }
    let both: Vec<bool> = (0..valid.len())
        .map(|i| valid[i] && model.labels[i] == label && measurement.labels[i] == label)
        .collect();
    if both.iter().filter(|b| **b).count() >= 3 {
        return both;
    }
    (0..valid.len()).map(|i| valid[i] && model.labels[i] == label).collect()
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
