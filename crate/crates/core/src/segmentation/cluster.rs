use std::fmt::Write as _;

use super::{dbscan, MotionHypothesis, SegmentationParams};
use crate::geometry::{fit_correspondences, squared_residual, Pose};
use crate::sceneflow::GridFlowField;

/// Reassign/refit rounds when settling cell assignment.
const MAX_ASSIGNMENT_ROUNDS: usize = 10;
/// A motion needs this many assigned cells to survive.
const MIN_SEGMENT_CELLS: usize = 3;

/// Distinct motions of one frame pair and the cell-to-motion assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSegmentation {
    /// Motion `k` (1-based id) is `motions[k - 1]`.
    pub motions: Vec<Pose>,
    /// Per cell: `0` = unassigned, otherwise a motion id in `1..=g`.
    pub assignment: Vec<u32>,
    /// Cells assigned to each motion; non-increasing.
    pub support: Vec<usize>,
}

impl SpatialSegmentation {
    pub fn g(&self) -> usize {
        self.motions.len()
    }

    pub fn motion(&self, id: u32) -> Option<&Pose> {
        (id >= 1).then(|| self.motions.get(id as usize - 1)).flatten()
    }

    /// Segmentation with every valid cell in one segment moving by `motion`.
    pub fn single(valid: &[bool], motion: Pose) -> Self {
        let assignment: Vec<u32> = valid.iter().map(|&v| v as u32).collect();
        let support = vec![assignment.iter().filter(|&&a| a == 1).count()];
        Self {
            motions: vec![motion],
            assignment,
            support,
        }
    }
}

/// Groups hypotheses into distinct motions and assigns cells.
///
/// Each hypothesis is embedded as `[axis-angle, t / rho]` with `rho` the
/// median scene depth, clustered with DBSCAN, and each cluster refitted on
/// the union of its members' inliers. Cells then take the motion with the
/// smallest error if that error is below `th_inlier`; motions are refitted
/// on their cells until the assignment settles. Motions left with fewer
/// than three cells are dropped. Ids are ordered by descending support.
pub fn cluster_hypotheses(hypotheses: &[MotionHypothesis], flow: &GridFlowField, params: &SegmentationParams) -> SpatialSegmentation {
    let n = flow.len();
    if hypotheses.is_empty() {
        return SpatialSegmentation {
            motions: Vec::new(),
            assignment: vec![0; n],
            support: Vec::new(),
        };
    }
    let rho = flow.median_depth().filter(|d| *d > 0.0).unwrap_or(1.0);
    let features: Vec<[f64; 6]> = hypotheses
        .iter()
        .map(|h| {
            let t = h.motion.twist_coordinates();
            [t[0], t[1], t[2], t[3] / rho, t[4] / rho, t[5] / rho]
        })
        .collect();
    let labels = dbscan(&features, params.dbscan_eps, params.dbscan_min_pts);
    let n_clusters = labels.iter().copied().max().unwrap_or(0);

    let mut motions = Vec::with_capacity(n_clusters);
    for c in 1..=n_clusters {
        let members: Vec<&MotionHypothesis> = hypotheses.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(h, _)| h).collect();
        let union: Vec<bool> = (0..n).map(|i| members.iter().any(|h| h.inliers[i])).collect();
        let fallback = members.iter().max_by_key(|h| h.support).map(|h| h.motion).unwrap();
        let motion = fit_correspondences(&flow.points_prev, &flow.points_curr, |i| union[i] as u8 as f64).unwrap_or(fallback);
        motions.push(motion);
    }

    let mut previous: Option<Vec<u32>> = None;
    for _ in 0..MAX_ASSIGNMENT_ROUNDS {
        let assignment = assign_cells(&motions, flow, params.th_inlier);
        let counts = count_segments(&assignment, motions.len());
        if counts.iter().any(|&c| c < MIN_SEGMENT_CELLS) {
            motions = motions.into_iter().zip(&counts).filter(|(_, &c)| c >= MIN_SEGMENT_CELLS).map(|(m, _)| m).collect();
            previous = None;
            continue;
        }
        if previous.as_ref() == Some(&assignment) {
            break;
        }
        motions = motions
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let id = k as u32 + 1;
                fit_correspondences(&flow.points_prev, &flow.points_curr, |i| (assignment[i] == id) as u8 as f64).unwrap_or(*m)
            })
            .collect();
        previous = Some(assignment);
    }

    let mut assignment = assign_cells(&motions, flow, params.th_inlier);
    let counts = count_segments(&assignment, motions.len());
    let mut order: Vec<usize> = (0..motions.len()).filter(|&k| counts[k] > 0).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut remap = vec![0u32; motions.len() + 1];
    for (new, &old) in order.iter().enumerate() {
        remap[old + 1] = new as u32 + 1;
    }
    for a in assignment.iter_mut() {
        *a = remap[*a as usize];
    }
    SpatialSegmentation {
        motions: order.iter().map(|&k| motions[k]).collect(),
        support: order.iter().map(|&k| counts[k]).collect(),
        assignment,
    }
}

/// Lowest-error motion per valid cell, gated by `th_inlier` (ties go to
/// the lower id).
fn assign_cells(motions: &[Pose], flow: &GridFlowField, th_inlier: f64) -> Vec<u32> {
    (0..flow.len())
        .map(|i| {
            if !flow.valid[i] {
                return 0;
            }
            let mut best = (0u32, f64::INFINITY);
            for (k, m) in motions.iter().enumerate() {
                let e = squared_residual(m, &flow.points_prev[i], &flow.points_curr[i]);
                if e < best.1 {
                    best = (k as u32 + 1, e);
                }
            }
            if best.1 < th_inlier {
                best.0
            } else {
                0
            }
        })
        .collect()
}

fn count_segments(assignment: &[u32], g: usize) -> Vec<usize> {
    let mut counts = vec![0usize; g];
    for &a in assignment {
        if a > 0 {
            counts[a as usize - 1] += 1;
        }
    }
    counts
}

/// `index G_i` per line.
pub fn format_segmentation(assignment: &[u32]) -> String {
    let mut out = String::with_capacity(assignment.len() * 8);
    for (i, g) in assignment.iter().enumerate() {
        writeln!(out, "{i} {g}").unwrap();
    }
    out
}
