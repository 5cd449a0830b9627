//! RGB-D sequences on disk in the TUM layout.
//!
//! A dataset directory holds `rgb/` and `depth/` PNGs listed either in
//! `associations.txt` (`t_rgb rgb_path t_depth depth_path`) or in `rgb.txt`
//! plus `depth.txt` (`t path`), which are then paired by nearest timestamp.
//! `groundtruth.txt` (TUM trajectory) and `flow/NNNNNN.gridflow` are
//! optional; flow file `k` holds the pair `k - 1 -> k`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::RunConfig;
use crate::geometry::{Trajectory, TrajectoryError, ASSOCIATION_TOLERANCE};
use crate::image::{DepthImage, GrayImage, ImageIoError};
use crate::sceneflow::{load_flow, save_flow, FlowFileError, GridFlowField};
use crate::synth::{SceneSpec, Sequence};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing association: {0}")]
    MissingAssociation(String),
    #[error("unreadable image {path}: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("flow file {path}: {source}")]
    Flow {
        path: PathBuf,
        #[source]
        source: FlowFileError,
    },
    #[error("ground truth: {0}")]
    Trajectory(#[from] TrajectoryError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<ImageIoError> for DatasetError {
    fn from(e: ImageIoError) -> Self {
        match e {
            ImageIoError::Unreadable { path, source } | ImageIoError::Write { path, source } => Self::UnreadableImage {
                path,
                reason: source.to_string(),
            },
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameEntry {
    pub timestamp: f64,
    pub rgb: PathBuf,
    pub depth: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub frames: Vec<FrameEntry>,
    pub ground_truth: Option<Trajectory>,
}

/// `(timestamp, path)` rows of a TUM list file.
fn parse_list(path: &Path) -> Result<Vec<(f64, String)>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |t: Option<&str>| -> Result<f64, DatasetError> {
            t.and_then(|t| t.parse().ok()).ok_or_else(|| DatasetError::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: format!("bad row '{line}'"),
            })
        };
        let t = parse(it.next())?;
        let p = it.next().ok_or_else(|| DatasetError::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg: "missing file name".into(),
        })?;
        rows.push((t, p.to_string()));
    }
    Ok(rows)
}

/// Pairs every rgb row with the nearest unused depth row within `tol`.
pub fn associate(rgb: &[(f64, String)], depth: &[(f64, String)], tol: f64) -> Vec<(usize, usize)> {
    let mut used = vec![false; depth.len()];
    let mut pairs = Vec::new();
    for (i, (t, _)) in rgb.iter().enumerate() {
        let best = depth
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, (td, _))| (j, (td - t).abs()))
            .filter(|(_, d)| *d <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, _)) = best {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

impl Dataset {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let root = dir.as_ref().to_path_buf();
        if !root.is_dir() {
            return Err(DatasetError::MissingAssociation(format!("{} is not a directory", root.display())));
        }
        let assoc = root.join("associations.txt");
        let frames = if assoc.is_file() {
            Self::read_associations(&root, &assoc)?
        } else {
            let (rgb_txt, depth_txt) = (root.join("rgb.txt"), root.join("depth.txt"));
            if !rgb_txt.is_file() || !depth_txt.is_file() {
                return Err(DatasetError::MissingAssociation(format!(
                    "{} has neither associations.txt nor rgb.txt and depth.txt",
                    root.display()
                )));
            }
            let rgb = parse_list(&rgb_txt)?;
            let depth = parse_list(&depth_txt)?;
            associate(&rgb, &depth, ASSOCIATION_TOLERANCE)
                .into_iter()
                .map(|(i, j)| FrameEntry {
                    timestamp: rgb[i].0,
                    rgb: root.join(&rgb[i].1),
                    depth: root.join(&depth[j].1),
                })
                .collect()
        };
        if frames.is_empty() {
            return Err(DatasetError::MissingAssociation(format!("no rgb/depth pairs in {}", root.display())));
        }
        let gt = root.join("groundtruth.txt");
        let ground_truth = if gt.is_file() { Some(Trajectory::load(&gt)?) } else { None };
        Ok(Self { root, frames, ground_truth })
    }

    fn read_associations(root: &Path, path: &Path) -> Result<Vec<FrameEntry>, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut frames = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let timestamp = f.first().and_then(|t| t.parse::<f64>().ok());
            match (timestamp, f.len()) {
                (Some(timestamp), 4) => frames.push(FrameEntry {
                    timestamp,
                    rgb: root.join(f[1]),
                    depth: root.join(f[3]),
                }),
                _ => {
                    return Err(DatasetError::Parse {
                        path: path.to_path_buf(),
                        line: n + 1,
                        msg: format!("expected 't_rgb rgb t_depth depth', found '{line}'"),
                    })
                }
            }
        }
        Ok(frames)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }

    pub fn load_gray(&self, k: usize) -> Result<GrayImage, DatasetError> {
        Ok(GrayImage::load(&self.frames[k].rgb)?)
    }

    pub fn load_depth(&self, k: usize) -> Result<DepthImage, DatasetError> {
        Ok(DepthImage::load(&self.frames[k].depth)?)
    }

    pub fn flow_path(&self, k: usize) -> PathBuf {
        self.root.join("flow").join(format!("{k:06}.gridflow"))
    }

    /// Precomputed flow of pair `k - 1 -> k`.
    pub fn load_flow(&self, k: usize) -> Result<GridFlowField, DatasetError> {
        let path = self.flow_path(k);
        if !path.is_file() {
            return Err(DatasetError::MissingAssociation(format!("no flow file {} for frame {k}", path.display())));
        }
        load_flow(&path).map_err(|source| DatasetError::Flow { path, source })
    }
}

/// Writes a rendered sequence as a dataset directory, with ground truth,
/// noisy and exact flow, per-cell labels, the scene and a matching config.
pub fn write_sequence(seq: &Sequence, spec: &SceneSpec, dir: impl AsRef<Path>) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    for sub in ["rgb", "depth", "flow", "flow_gt", "labels"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    let write = |name: &str, text: String| -> Result<(), DatasetError> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(io_err(&p))
    };

    let (mut rgb_txt, mut depth_txt, mut assoc) = (
        String::from("# timestamp filename\n"),
        String::from("# timestamp filename\n"),
        String::new(),
    );
    for (k, t) in seq.timestamps.iter().enumerate() {
        let name = format!("{k:06}.png");
        seq.gray[k].save(dir.join("rgb").join(&name))?;
        seq.depth[k].save(dir.join("depth").join(&name))?;
        writeln!(rgb_txt, "{t:.6} rgb/{name}").unwrap();
        writeln!(depth_txt, "{t:.6} depth/{name}").unwrap();
        writeln!(assoc, "{t:.6} rgb/{name} {t:.6} depth/{name}").unwrap();

        let mut labels = String::new();
        for (i, l) in seq.labels[k].iter().enumerate() {
            writeln!(labels, "{i} {l}").unwrap();
        }
        write(&format!("labels/{k:06}.txt"), labels)?;
    }
    write("rgb.txt", rgb_txt)?;
    write("depth.txt", depth_txt)?;
    write("associations.txt", assoc)?;
    write("groundtruth.txt", seq.camera_trajectory().to_tum_string())?;

    for (i, (f, g)) in seq.flows.iter().zip(&seq.flows_gt).enumerate() {
        let name = format!("{:06}.gridflow", i + 1);
        for (sub, field) in [("flow", f), ("flow_gt", g)] {
            let p = dir.join(sub).join(&name);
            save_flow(field, &p).map_err(|source| DatasetError::Flow { path: p.clone(), source })?;
        }
    }

    write("scene.json", spec.to_json())?;
    let mut cfg = RunConfig::default();
    cfg.set_intrinsics(&spec.intrinsics);
    cfg.w_grid = spec.cell_size;
    cfg.seed = spec.seed;
    write("config.txt", cfg.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(ts: &[f64], dir: &str) -> Vec<(f64, String)> {
        ts.iter().enumerate().map(|(i, t)| (*t, format!("{dir}/{i}.png"))).collect()
    }

    #[test]
    fn association_takes_nearest_within_tolerance() {
        let rgb = rows(&[0.0, 0.033, 0.066, 0.2], "rgb");
        let depth = rows(&[0.005, 0.030, 0.045, 0.07], "depth");
        // 0.2 has no depth within 20 ms
        assert_eq!(associate(&rgb, &depth, 0.02), vec![(0, 0), (1, 1), (2, 3)]);
    }

    #[test]
    fn depth_rows_are_not_reused() {
        let rgb = rows(&[0.0, 0.01], "rgb");
        let depth = rows(&[0.005], "depth");
        assert_eq!(associate(&rgb, &depth, 0.02), vec![(0, 0)]);
    }

    #[test]
    fn missing_lists_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Dataset::open(dir.path()), Err(DatasetError::MissingAssociation(_))));
    }

    #[test]
    fn unreadable_image_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("associations.txt"), "1.0 rgb/a.png 1.0 depth/a.png\n").unwrap();
        let ds = Dataset::open(dir.path()).unwrap();
        let err = ds.load_gray(0).unwrap_err();
        assert!(matches!(&err, DatasetError::UnreadableImage { path, .. } if path.ends_with("rgb/a.png")));
        assert!(err.to_string().contains("a.png"));
    }

    #[test]
    fn rgb_and_depth_lists_are_paired() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("rgb.txt"), "# rgb\n1.000 rgb/1.png\n1.033 rgb/2.png\n").unwrap();
        std::fs::write(dir.path().join("depth.txt"), "# depth\n1.004 depth/1.png\n1.040 depth/2.png\n").unwrap();
        let ds = Dataset::open(dir.path()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.frames[1].depth, dir.path().join("depth/2.png"));
        assert!(ds.ground_truth.is_none());
    }
}
