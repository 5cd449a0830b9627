use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::image::DepthImage;

/// Depth validity range and hole filling width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthFilter {
    /// Holes whose thickness is below this many pixels get filled.
    pub max_hole_width: usize,
    pub min_depth: f64,
    pub max_depth: f64,
}

impl Default for DepthFilter {
    fn default() -> Self {
        Self {
            max_hole_width: 4,
            min_depth: 0.3,
            max_depth: 10.0,
        }
    }
}

impl DepthFilter {
    /// Metric depth of a raw value, or `None` when missing or out of range.
    #[inline]
    pub fn meters(&self, raw: u16, depth_scale: f64) -> Option<f64> {
        if raw == 0 {
            return None;
        }
        let z = raw as f64 / depth_scale;
        (z >= self.min_depth && z <= self.max_depth).then_some(z)
    }
}

/// Fills narrow depth holes and leaves out-of-range readings invalid.
///
/// Holes are 4-connected components of zero pixels. A component is narrow
/// when every pixel has a horizontal or vertical zero run shorter than
/// `max_hole_width`; narrow components are filled completely with the
/// median of in-range pixels in a `(2w+1)^2` window, falling back to the
/// median of the component's in-range border. Wide components and
/// out-of-range readings are left untouched, which makes the operation
/// idempotent.
pub fn preprocess_depth(raw: &DepthImage, filter: &DepthFilter, depth_scale: f64) -> DepthImage {
    let (w, h) = (raw.width, raw.height);
    let mut out = raw.clone();
    let limit = filter.max_hole_width;
    if limit == 0 || w == 0 || h == 0 {
        return out;
    }
    let in_range: Vec<bool> = raw.data.iter().map(|&v| filter.meters(v, depth_scale).is_some()).collect();
    let hole: Vec<bool> = raw.data.iter().map(|&v| v == 0).collect();

    // run lengths of zero pixels through each hole pixel
    let mut hrun = vec![0usize; w * h];
    for y in 0..h {
        let mut x = 0;
        while x < w {
            if hole[y * w + x] {
                let start = x;
                while x < w && hole[y * w + x] {
                    x += 1;
                }
                for xx in start..x {
                    hrun[y * w + xx] = x - start;
                }
            } else {
                x += 1;
            }
        }
    }
    let mut vrun = vec![0usize; w * h];
    for x in 0..w {
        let mut y = 0;
        while y < h {
            if hole[y * w + x] {
                let start = y;
                while y < h && hole[y * w + x] {
                    y += 1;
                }
                for yy in start..y {
                    vrun[yy * w + x] = y - start;
                }
            } else {
                y += 1;
            }
        }
    }

    let mut visited = vec![false; w * h];
    let mut queue = VecDeque::new();
    let mut window = Vec::with_capacity((2 * limit + 1).pow(2));
    for seed in 0..w * h {
        if !hole[seed] || visited[seed] {
            continue;
        }
        let mut component = Vec::new();
        let mut border = Vec::new();
        let mut narrow = true;
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            component.push(p);
            if hrun[p].min(vrun[p]) >= limit {
                narrow = false;
            }
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if hole[q] {
                    if !visited[q] {
                        visited[q] = true;
                        queue.push_back(q);
                    }
                } else if in_range[q] {
                    border.push(raw.data[q]);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        if !narrow {
            continue;
        }
        let border_median = lower_median(&mut border);
        let mut fills = Vec::with_capacity(component.len());
        for &p in &component {
            let (x, y) = (p % w, p / w);
            window.clear();
            for yy in y.saturating_sub(limit)..(y + limit + 1).min(h) {
                for xx in x.saturating_sub(limit)..(x + limit + 1).min(w) {
                    let q = yy * w + xx;
                    if in_range[q] {
                        window.push(raw.data[q]);
                    }
                }
            }
            match lower_median(&mut window).or(border_median) {
                Some(v) => fills.push(v),
                None => break,
            }
        }
        if fills.len() == component.len() {
            for (&p, v) in component.iter().zip(fills) {
                out.data[p] = v;
            }
        }
    }
    out
}

fn lower_median(values: &mut [u16]) -> Option<u16> {
    if values.is_empty() {
        return None;
    }
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable(mid);
    Some(*m)
}
