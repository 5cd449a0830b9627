use super::{GeometryError, Trajectory};

/// Maximum timestamp gap when pairing samples across trajectories.
pub const ASSOCIATION_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpeInterval {
    pub t_start: f64,
    pub t_end: f64,
    /// Translational drift over the interval divided by the nominal delta (m/s).
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpeSummary {
    pub delta: f64,
    pub rmse: f64,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub intervals: Vec<RpeInterval>,
}

/// Translational relative pose error with a fixed time delta.
///
/// For every estimate sample `i` the partner `j` is the estimate sample
/// nearest `t_i + delta`; ground truth is looked up by nearest timestamp.
/// The per-interval error is `|trans((Q_i^-1 Q_j)^-1 (P_i^-1 P_j))| / delta`.
pub fn relative_pose_error(estimate: &Trajectory, ground_truth: &Trajectory, delta: f64) -> Result<RpeSummary, GeometryError> {
    let tol = ASSOCIATION_TOLERANCE;
    let est = estimate.samples();
    let mut intervals = Vec::new();
    for (t_i, p_i) in est {
        let Some((j, p_j)) = estimate.lookup(t_i + delta, tol) else {
            continue;
        };
        let t_j = est[j].0;
        if t_j <= *t_i {
            continue;
        }
        let (Some((_, q_i)), Some((_, q_j))) = (ground_truth.lookup(*t_i, tol), ground_truth.lookup(t_j, tol)) else {
            continue;
        };
        let gt_rel = q_i.inverse() * *q_j;
        let est_rel = p_i.inverse() * *p_j;
        let err = gt_rel.inverse() * est_rel;
        intervals.push(RpeInterval {
            t_start: *t_i,
            t_end: t_j,
            error: err.translation.norm() / delta,
        });
    }
    if intervals.is_empty() {
        return Err(GeometryError::NoTemporalOverlap);
    }
    let n = intervals.len() as f64;
    let mean = intervals.iter().map(|iv| iv.error).sum::<f64>() / n;
    let rmse = (intervals.iter().map(|iv| iv.error * iv.error).sum::<f64>() / n).sqrt();
    let mut sorted: Vec<f64> = intervals.iter().map(|iv| iv.error).collect();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    Ok(RpeSummary {
        delta,
        rmse,
        mean,
        median,
        max: *sorted.last().unwrap(),
        intervals,
    })
}
