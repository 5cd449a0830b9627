use crate::sceneflow::GridFlowField;
use nalgebra::Vector2;

/// Share of a displaced source cell landing on a target cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub source: usize,
    pub target: usize,
    /// Overlap area over cell area, in `(0, 1]`.
    pub fraction: f64,
}

/// Overlaps of every cell footprint, shifted by its image displacement,
/// with the cells of the same grid.
///
/// Invalid cells move by the component-wise median displacement of the
/// valid ones (zero if there are none). Parts of a footprint that leave the
/// grid are lost.
pub fn footprint_overlaps(flow: &GridFlowField) -> Vec<Overlap> {
    let w = flow.cell_size as f64;
    let fallback = median_displacement(flow);
    let mut out = Vec::with_capacity(flow.len() * 4);
    for j in 0..flow.len() {
        let d = if flow.valid[j] { flow.displacement(j) } else { fallback };
        if !(d.x.is_finite() && d.y.is_finite()) {
            continue;
        }
        let (r, c) = flow.row_col(j);
        let x0 = c as f64 * w + d.x;
        let y0 = r as f64 * w + d.y;
        let (c_lo, c_hi) = span(x0, w, flow.cols);
        let (r_lo, r_hi) = span(y0, w, flow.rows);
        for tr in r_lo..r_hi {
            let oy = overlap_1d(y0, tr as f64 * w, w);
            for tc in c_lo..c_hi {
                let ox = overlap_1d(x0, tc as f64 * w, w);
                let fraction = ox * oy / (w * w);
                if fraction > 0.0 {
                    out.push(Overlap {
                        source: j,
                        target: flow.index(tr, tc),
                        fraction,
                    });
                }
            }
        }
    }
    out
}

/// Target index range touched by `[x0, x0 + w)`.
fn span(x0: f64, w: f64, n: usize) -> (usize, usize) {
    let lo = (x0 / w).floor().max(0.0);
    let hi = ((x0 + w) / w).ceil().min(n as f64);
    if hi <= lo {
        return (0, 0);
    }
    (lo as usize, hi as usize)
}

fn overlap_1d(a0: f64, b0: f64, w: f64) -> f64 {
    ((a0 + w).min(b0 + w) - a0.max(b0)).max(0.0)
}

fn median_displacement(flow: &GridFlowField) -> Vector2<f64> {
    let (mut xs, mut ys): (Vec<f64>, Vec<f64>) = (0..flow.len())
        .filter(|&i| flow.valid[i])
        .map(|i| {
            let d = flow.displacement(i);
            (d.x, d.y)
        })
        .unzip();
    if xs.is_empty() {
        return Vector2::zeros();
    }
    let mid = (xs.len() - 1) / 2;
    let x = *xs.select_nth_unstable_by(mid, f64::total_cmp).1;
    let y = *ys.select_nth_unstable_by(mid, f64::total_cmp).1;
    Vector2::new(x, y)
}

/// Moves a label field along `flow`: each target cell takes the nonzero
/// label with the largest overlap (ties to the lower label), or 0.
pub fn warp_labels(labels: &[u32], flow: &GridFlowField) -> Vec<u32> {
    let max_label = labels.iter().copied().max().unwrap_or(0) as usize;
    if max_label == 0 {
        return vec![0; flow.len()];
    }
    let mut votes = vec![0.0f64; flow.len() * (max_label + 1)];
    for o in footprint_overlaps(flow) {
        let l = labels[o.source] as usize;
        if l > 0 {
            votes[o.target * (max_label + 1) + l] += o.fraction;
        }
    }
    votes
        .chunks(max_label + 1)
        .map(|v| {
            let mut best = (0u32, 0.0);
            for (l, &a) in v.iter().enumerate().skip(1) {
                if a > best.1 {
                    best = (l as u32, a);
                }
            }
            best.0
        })
        .collect()
}
