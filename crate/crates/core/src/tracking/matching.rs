use nalgebra::DMatrix;

use super::{LabelField, LabelRegistry, TrackingError};

/// Label field of an earlier frame, already moved onto the current grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledFrame {
    pub frame: usize,
    pub labels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMatch {
    /// Frame number of the best-matching history entry.
    pub frame: usize,
    /// Support-weighted mean of each segment's best correlation, in `[0, 1]`.
    pub score: f64,
    /// `C[(i - 1, j - 1)]` for segment `i` and label `j`.
    pub correlation: DMatrix<f64>,
    /// One entry per current segment id `1..=g`: `(segment, label)`, with
    /// `None` for unmatched segments.
    pub pairs: Vec<(u32, Option<u32>)>,
}

/// `C_ij = N_ij / sqrt(N_i N_j)` between segment ids of `current` and label
/// ids of `previous`; id 0 is ignored on both sides.
pub fn correlation_matrix(current: &[u32], previous: &[u32]) -> DMatrix<f64> {
    let gk = current.iter().copied().max().unwrap_or(0) as usize;
    let gl = previous.iter().copied().max().unwrap_or(0) as usize;
    let mut n_ij = DMatrix::<f64>::zeros(gk, gl);
    let mut n_i = vec![0.0f64; gk];
    let mut n_j = vec![0.0; gl];
    for (&a, &b) in current.iter().zip(previous) {
        if a > 0 {
            n_i[a as usize - 1] += 1.0;
        }
        if b > 0 {
            n_j[b as usize - 1] += 1.0;
        }
        if a > 0 && b > 0 {
            n_ij[(a as usize - 1, b as usize - 1)] += 1.0;
        }
    }
    for i in 0..gk {
        for j in 0..gl {
            if n_ij[(i, j)] > 0.0 {
                n_ij[(i, j)] /= (n_i[i] * n_j[j]).sqrt();
            }
        }
    }
    n_ij
}

fn score(c: &DMatrix<f64>, support: &[f64]) -> f64 {
    let total: f64 = support.iter().sum();
    if total == 0.0 || c.ncols() == 0 {
        return 0.0;
    }
    let weighted: f64 = (0..c.nrows()).map(|i| support[i] * c.row(i).max()).sum();
    weighted / total
}

/// Matches current segments against `history` (oldest first).
///
/// The history frame with the highest score wins, later frames winning
/// ties. Each segment pairs with its most correlated label there (lower
/// label on ties). A pair is dropped when its correlation is below `c_min`,
/// or when a more correlated segment claimed the same label.
pub fn match_segments(current: &[u32], history: &[LabeledFrame], c_min: f64) -> Result<SegmentMatch, TrackingError> {
    if history.is_empty() {
        return Err(TrackingError::EmptyHistory);
    }
    let g = current.iter().copied().max().unwrap_or(0) as usize;
    let mut support = vec![0.0; g];
    for &a in current.iter().filter(|a| **a > 0) {
        support[a as usize - 1] += 1.0;
    }
    let mut best: Option<(usize, f64, DMatrix<f64>)> = None;
    for h in history {
        let c = correlation_matrix(current, &h.labels);
        let s = score(&c, &support);
        if best.as_ref().is_none_or(|(_, bs, _)| s >= *bs) {
            best = Some((h.frame, s, c));
        }
    }
    let (frame, score, correlation) = best.unwrap();

    let mut choice: Vec<Option<(u32, f64)>> = (0..g)
        .map(|i| {
            let mut arg = None;
            for j in 0..correlation.ncols() {
                let v = correlation[(i, j)];
                if v >= c_min && arg.is_none_or(|(_, b)| v > b) {
                    arg = Some((j as u32 + 1, v));
                }
            }
            arg
        })
        .collect();
    for i in 0..g {
        let Some((label, v)) = choice[i] else { continue };
        let beaten = (0..g).any(|k| k != i && choice[k].is_some_and(|(l, w)| l == label && (w > v || (w == v && k < i))));
        if beaten {
            choice[i] = None;
        }
    }
    let pairs = choice.iter().enumerate().map(|(i, c)| (i as u32 + 1, c.map(|(l, _)| l))).collect();
    Ok(SegmentMatch {
        frame,
        score,
        correlation,
        pairs,
    })
}

/// Measurement label field for the current segmentation: matched segments
/// inherit their label, unmatched ones get a fresh id from `registry`.
/// Returns the field and the label given to each segment id `1..=g`.
pub fn relabel(current: &[u32], matched: &SegmentMatch, registry: &mut LabelRegistry, frame: usize) -> (LabelField, Vec<u32>) {
    let mut in_use: Vec<u32> = matched.pairs.iter().filter_map(|p| p.1).collect();
    let mut mapping = Vec::with_capacity(matched.pairs.len());
    for &(_, label) in &matched.pairs {
        let l = match label {
            Some(l) => {
                registry.touch(l, frame);
                l
            }
            None => match registry.allocate(frame, &in_use) {
                Some(l) => {
                    in_use.push(l);
                    l
                }
                None => 0,
            },
        };
        mapping.push(l);
    }
    let labels = current.iter().map(|&a| if a == 0 { 0 } else { mapping[a as usize - 1] }).collect();
    (LabelField { labels }, mapping)
}

/// Match for the very first segmentation: every segment is new.
impl SegmentMatch {
    pub fn all_unmatched(current: &[u32]) -> Self {
        let g = current.iter().copied().max().unwrap_or(0);
        Self {
            frame: 0,
            score: 0.0,
            correlation: DMatrix::zeros(g as usize, 0),
            pairs: (1..=g).map(|i| (i, None)).collect(),
        }
    }
}
