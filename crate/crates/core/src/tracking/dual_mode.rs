use std::fmt::Write as _;

use super::{footprint_overlaps, LabelField};
use crate::sceneflow::GridFlowField;

/// Label distribution with an evidence count.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelModel {
    /// `p[l - 1]` is the probability of label `l`.
    pub p: Vec<f64>,
    pub age: f64,
}

impl LabelModel {
    /// One-hot model for `label` with age 1.
    pub fn observed(label: u32, n_obj: usize) -> Self {
        let mut p = vec![0.0; n_obj];
        p[label as usize - 1] = 1.0;
        Self { p, age: 1.0 }
    }

    /// Most probable label, the lower one on ties.
    pub fn modal_label(&self) -> u32 {
        let mut best = 0;
        for (k, &v) in self.p.iter().enumerate() {
            if v > self.p[best] {
                best = k;
            }
        }
        best as u32 + 1
    }

    /// `P <- (age P + e_label) / (age + 1)`, `age <- min(age + 1, alpha_max)`.
    fn absorb(&mut self, label: u32, alpha_max: f64) {
        let a = self.age;
        for v in self.p.iter_mut() {
            *v *= a / (a + 1.0);
        }
        self.p[label as usize - 1] += 1.0 / (a + 1.0);
        self.age = (a + 1.0).min(alpha_max);
    }
}

/// Apparent and candidate models of one grid cell; `None` is empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualModeCell {
    pub apparent: Option<LabelModel>,
    pub candidate: Option<LabelModel>,
}

#[derive(Clone)]
struct Accum {
    area: f64,
    age: f64,
    p: Vec<f64>,
}

/// Carries models along the image motion of `flow` by area-weighted
/// transport.
///
/// A target cell's distribution is the overlap-weighted mean of the
/// distributions landing on it. Its age is the overlap-weighted sum of the
/// incoming ages (clamped to `alpha_max`), so total age is preserved when no
/// footprint leaves the grid. Cells nothing lands on become empty.
pub fn compensate_models(cells: &[DualModeCell], flow: &GridFlowField, alpha_max: f64) -> Vec<DualModeCell> {
    let n = flow.len();
    assert_eq!(cells.len(), n, "model grid and flow grid differ");
    let mut app: Vec<Option<Accum>> = vec![None; n];
    let mut cand: Vec<Option<Accum>> = vec![None; n];
    for o in footprint_overlaps(flow) {
        let src = &cells[o.source];
        for (model, acc) in [(&src.apparent, &mut app), (&src.candidate, &mut cand)] {
            let Some(m) = model else { continue };
            let a = acc[o.target].get_or_insert_with(|| Accum {
                area: 0.0,
                age: 0.0,
                p: vec![0.0; m.p.len()],
            });
            a.area += o.fraction;
            a.age += o.fraction * m.age;
            for (t, v) in a.p.iter_mut().zip(&m.p) {
                *t += o.fraction * v;
            }
        }
    }
    let finish = |a: Option<Accum>| {
        a.map(|a| LabelModel {
            p: a.p.iter().map(|v| v / a.area).collect(),
            age: a.age.min(alpha_max),
        })
    };
    app.into_iter()
        .zip(cand)
        .map(|(a, c)| DualModeCell {
            apparent: finish(a),
            candidate: finish(c),
        })
        .collect()
}

/// Applies one frame of label measurements (`0` = no measurement) to
/// compensated models. Returns which cells had their apparent model
/// initialized, updated or replaced.
///
/// A measurement agreeing with the apparent modal label updates the
/// apparent model; otherwise the candidate is updated (or started). The
/// candidate replaces the apparent model once its age reaches `alpha_max`
/// or exceeds the apparent age, leaving the candidate empty.
pub fn update_models(cells: &mut [DualModeCell], measurement: &[u32], n_obj: usize, alpha_max: f64) -> Vec<bool> {
    cells
        .iter_mut()
        .zip(measurement)
        .map(|(cell, &label)| {
            if label == 0 || label as usize > n_obj {
                return false;
            }
            let Some(app) = cell.apparent.as_mut() else {
                cell.apparent = Some(LabelModel::observed(label, n_obj));
                return true;
            };
            if app.modal_label() == label {
                app.absorb(label, alpha_max);
                return true;
            }
            let app_age = app.age;
            let cand = match cell.candidate.as_mut() {
                Some(c) => {
                    c.absorb(label, alpha_max);
                    c
                }
                None => cell.candidate.insert(LabelModel::observed(label, n_obj)),
            };
            if cand.age >= alpha_max || cand.age > app_age {
                cell.apparent = cell.candidate.take();
                return true;
            }
            false
        })
        .collect()
}

/// Modal apparent label where `updated`, the previous label elsewhere.
pub fn extract_labels(cells: &[DualModeCell], updated: &[bool], previous: &LabelField) -> LabelField {
    let labels = cells
        .iter()
        .enumerate()
        .map(|(i, c)| match (&c.apparent, updated[i]) {
            (Some(m), true) => m.modal_label(),
            _ => previous.labels.get(i).copied().unwrap_or(0),
        })
        .collect();
    LabelField { labels }
}

/// One line per cell: `index A age p.. C age p..`, `-` for empty models,
/// six significant digits.
pub fn format_models(cells: &[DualModeCell]) -> String {
    let mut out = String::new();
    for (i, c) in cells.iter().enumerate() {
        write!(out, "{i}").unwrap();
        for (tag, m) in [("A", &c.apparent), ("C", &c.candidate)] {
            match m {
                Some(m) => {
                    write!(out, " {tag} {:.5e}", m.age).unwrap();
                    for v in &m.p {
                        write!(out, " {v:.5e}").unwrap();
                    }
                }
                None => write!(out, " {tag} -").unwrap(),
            }
        }
        out.push('\n');
    }
    out
}
