//! Temporal persistence of motion segments.
//!
//! Per-frame segments are matched against the last few labeled frames by
//! overlap correlation and relabeled with persistent object ids. Each grid
//! cell then keeps two probabilistic label models (apparent and candidate)
//! that are carried along the image motion and updated with the matched
//! labels as measurements.

mod dual_mode;
mod matching;
mod registry;
mod warp;

pub use dual_mode::{compensate_models, extract_labels, format_models, update_models, DualModeCell, LabelModel};
pub use matching::{correlation_matrix, match_segments, relabel, LabeledFrame, SegmentMatch};
pub use registry::LabelRegistry;
pub use warp::{footprint_overlaps, warp_labels, Overlap};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrackingError {
    #[error("no labeled frames to match against")]
    EmptyHistory,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingParams {
    /// Age saturation of the per-cell models.
    pub alpha_max: f64,
    /// Number of persistent label ids.
    pub n_obj: usize,
    /// Labeled frames kept for matching.
    pub history: usize,
    /// Segments whose best correlation is below this get a new label.
    pub c_min: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            alpha_max: 5.0,
            n_obj: 15,
            history: 3,
            c_min: 0.1,
        }
    }
}

/// Persistent label per grid cell; `0` means never observed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelField {
    pub labels: Vec<u32>,
}

impl LabelField {
    pub fn unknown(n: usize) -> Self {
        Self { labels: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of cells carrying `label` among those flagged in `mask`.
    pub fn count(&self, label: u32, mask: &[bool]) -> usize {
        self.labels.iter().zip(mask).filter(|(l, m)| **m && **l == label).count()
    }
}
