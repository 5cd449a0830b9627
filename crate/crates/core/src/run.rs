//! Running the pipeline over a dataset and writing reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, FlowSource, RunConfig};
use crate::dataset::{Dataset, DatasetError};
use crate::geometry::{relative_pose_error, GeometryError, RpeSummary, Trajectory, TrajectoryError};
use crate::image::{GrayImage, ImageIoError};
use crate::odometry::{FrameResult, Pipeline, StageTimes};
use crate::plot;
use crate::sceneflow::GridFlowField;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("dataset has no ground truth")]
    NoGroundTruth,
    #[error("frame {frame}: image is {found:?}, configuration expects {expected:?}")]
    ImageSize {
        frame: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Image(#[from] ImageIoError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit status: 1 for bad invocation or parameters, 2 for data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::UnknownParameter(_) => 1,
            _ => 2,
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Per-stage timing over all processed frame pairs (ms).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimingSummary {
    pub frames: usize,
    pub median: StageTimes,
    pub mean: StageTimes,
    /// Everything after flow.
    pub median_pipeline: f64,
    pub median_total: f64,
    pub mean_total: f64,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

impl TimingSummary {
    /// `stages` per frame pair; `pipeline` is the post-flow runtime.
    pub fn from_frames(stages: &[StageTimes], pipeline: &[f64]) -> Self {
        let col = |f: fn(&StageTimes) -> f64| stages.iter().map(f).collect::<Vec<_>>();
        let cols = [col(|s| s.flow), col(|s| s.segmentation), col(|s| s.tracking), col(|s| s.ego_motion)];
        let pick = |agg: fn(&[f64]) -> f64| StageTimes {
            flow: agg(&cols[0]),
            segmentation: agg(&cols[1]),
            tracking: agg(&cols[2]),
            ego_motion: agg(&cols[3]),
        };
        let totals: Vec<f64> = stages.iter().zip(pipeline).map(|(s, p)| s.flow + p).collect();
        Self {
            frames: stages.len(),
            median: pick(median),
            mean: pick(mean),
            median_pipeline: median(pipeline),
            median_total: median(&totals),
            mean_total: mean(&totals),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("frame pairs: {}\n{:<14} {:>10} {:>10}\n", self.frames, "stage", "median_ms", "mean_ms");
        for (name, m, a) in [
            ("flow", self.median.flow, self.mean.flow),
            ("segmentation", self.median.segmentation, self.mean.segmentation),
            ("tracking", self.median.tracking, self.mean.tracking),
            ("ego_motion", self.median.ego_motion, self.mean.ego_motion),
        ] {
            writeln!(out, "{name:<14} {m:>10.3} {a:>10.3}").unwrap();
        }
        writeln!(out, "{:<14} {:>10.3}", "pipeline", self.median_pipeline).unwrap();
        writeln!(out, "{:<14} {:>10.3} {:>10.3}", "total", self.median_total, self.mean_total).unwrap();
        out
    }
}

/// Outcome of one pass over a dataset.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub trajectory: Trajectory,
    pub timing: TimingSummary,
    /// Frame pairs where the ego-motion was held.
    pub held: usize,
}

/// Runs the pipeline over every frame, handing each result and the grid
/// cell size it was computed on to `on_frame`.
pub fn execute(
    dataset: &Dataset,
    config: &RunConfig,
    mut on_frame: impl FnMut(&FrameResult, usize) -> Result<(), RunError>,
) -> Result<RunSummary, RunError> {
    config.validate()?;
    let mut pipeline = Pipeline::new(config.pipeline_params());
    let expected = (config.width, config.height);
    let mut samples = Vec::with_capacity(dataset.len());
    let (mut stages, mut post_flow) = (Vec::new(), Vec::new());
    let mut held = 0;
    let mut cell_size = config.w_grid;
    for k in 0..dataset.len() {
        let result = match config.flow_source {
            FlowSource::Computed => {
                let gray = dataset.load_gray(k)?;
                let depth = dataset.load_depth(k)?;
                for found in [(gray.width, gray.height), (depth.width, depth.height)] {
                    if found != expected {
                        return Err(RunError::ImageSize { frame: k, expected, found });
                    }
                }
                pipeline.process_frame(gray, depth)
            }
            FlowSource::File if k == 0 => pipeline.initial_result(),
            FlowSource::File => {
                let flow = dataset.load_flow(k)?;
                cell_size = flow.cell_size;
                pipeline.process_flow(flow)
            }
        };
        if k > 0 {
            stages.push(result.diagnostics.stages);
            post_flow.push(result.diagnostics.runtime_ms);
            held += result.diagnostics.hold as usize;
        }
        samples.push((dataset.frames[k].timestamp, result.pose_world));
        on_frame(&result, cell_size)?;
    }
    Ok(RunSummary {
        trajectory: Trajectory::new(samples)?,
        timing: TimingSummary::from_frames(&stages, &post_flow),
        held,
    })
}

/// Per-cell dump: `cell segment label static`.
pub fn format_frame_dump(result: &FrameResult) -> String {
    let mut out = format!(
        "# frame {} g {} static_label {} hold {}\n# cell segment label static\n",
        result.index, result.diagnostics.g, result.diagnostics.static_label, result.diagnostics.hold as u8
    );
    for (i, s) in result.segments.iter().enumerate() {
        let l = result.labels.labels.get(i).copied().unwrap_or(0);
        let m = result.static_mask.get(i).copied().unwrap_or(false);
        writeln!(out, "{i} {s} {l} {}", m as u8).unwrap();
    }
    out
}

pub fn format_rpe(rpe: &RpeSummary) -> String {
    format!(
        "delta_s {}\nintervals {}\nrmse_m_per_s {:.9}\nmean_m_per_s {:.9}\nmedian_m_per_s {:.9}\nmax_m_per_s {:.9}\n",
        rpe.delta,
        rpe.intervals.len(),
        rpe.rmse,
        rpe.mean,
        rpe.median,
        rpe.max
    )
}

pub fn format_rpe_csv(rpe: &RpeSummary) -> String {
    let mut out = String::from("t_start,t_end,error_m_per_s\n");
    for i in &rpe.intervals {
        writeln!(out, "{:.6},{:.6},{:.9}", i.t_start, i.t_end, i.error).unwrap();
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: RunSummary,
    pub rpe: Option<RpeSummary>,
}

/// Full run: trajectory, per-frame dumps, RPE, timing and plots under `out`.
pub fn run(dataset: &Dataset, config: &RunConfig, out: &Path) -> Result<RunReport, RunError> {
    let seg_dir = out.join("segmentation");
    let mosaic_dir = out.join("plots").join("labels");
    create_dir(&seg_dir)?;
    create_dir(&mosaic_dir)?;

    let summary = execute(dataset, config, |r, cell_size| {
        if r.index == 0 {
            return Ok(());
        }
        write_file(&seg_dir.join(format!("{:06}.txt", r.index)), &format_frame_dump(r))?;
        let gray = dataset
            .load_gray(r.index)
            .unwrap_or_else(|_| GrayImage::from_fn(config.width, config.height, |_, _| 128));
        let grid = GridFlowField::for_image(config.width, config.height, cell_size);
        let mosaic = plot::label_mosaic(&gray, &grid, &r.segments, &r.labels.labels, &r.static_mask);
        plot::save_mosaic(&mosaic, &mosaic_dir.join(format!("{:06}.png", r.index)))?;
        Ok(())
    })?;

    summary.trajectory.save(out.join("trajectory.txt"))?;
    write_file(&out.join("timing.txt"), &summary.timing.to_text())?;

    let rpe = match &dataset.ground_truth {
        None => {
            write_file(&out.join("rpe.txt"), "no ground truth\n")?;
            None
        }
        Some(gt) => match relative_pose_error(&summary.trajectory, gt, config.rpe_delta) {
            Ok(r) => {
                write_file(&out.join("rpe.txt"), &format_rpe(&r))?;
                write_file(&out.join("rpe.csv"), &format_rpe_csv(&r))?;
                Some(r)
            }
            Err(e) => {
                write_file(&out.join("rpe.txt"), &format!("rpe unavailable: {e}\n"))?;
                None
            }
        },
    };
    plot::write_trajectory_plots(&summary.trajectory, dataset.ground_truth.as_ref(), &out.join("plots"))?;
    Ok(RunReport { summary, rpe })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub rpe_rmse: f64,
    pub median_ms: f64,
    pub mean_ms: f64,
}

/// Runs once per value of `param` and reports RPE RMSE and runtime. The
/// runtime is the median total per-frame time including flow.
pub fn sweep(dataset: &Dataset, base: &RunConfig, param: &str, values: &[String]) -> Result<Vec<SweepRow>, RunError> {
    if !RunConfig::KEYS.contains(&param) {
        return Err(RunError::UnknownParameter(param.to_string()));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let gt = dataset.ground_truth.as_ref().ok_or(RunError::NoGroundTruth)?;
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let mut cfg = base.clone();
        cfg.set(param, v)?;
        cfg.validate()?;
        let s = execute(dataset, &cfg, |_, _| Ok(()))?;
        let rpe = relative_pose_error(&s.trajectory, gt, cfg.rpe_delta)?;
        rows.push(SweepRow {
            value: v.clone(),
            rpe_rmse: rpe.rmse,
            median_ms: s.timing.median_total,
            mean_ms: s.timing.mean_total,
        });
    }
    Ok(rows)
}

pub fn format_sweep(param: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("{param},rpe_rmse_m_per_s,median_ms,mean_ms\n");
    for r in rows {
        writeln!(out, "{},{:.9},{:.3},{:.3}", r.value, r.rpe_rmse, r.median_ms, r.mean_ms).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }

    #[test]
    fn timing_summary_columns() {
        let s = |f| StageTimes {
            flow: f,
            segmentation: 1.0,
            tracking: 2.0,
            ego_motion: 3.0,
        };
        let t = TimingSummary::from_frames(&[s(10.0), s(20.0), s(60.0)], &[6.0, 6.0, 9.0]);
        assert_eq!(t.median.flow, 20.0);
        assert_eq!(t.mean.flow, 30.0);
        assert_eq!(t.median_pipeline, 6.0);
        assert_eq!(t.median_total, 26.0);
        assert!(t.to_text().contains("ego_motion"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::UnknownParameter("x".into()).exit_code(), 1);
        assert_eq!(RunError::NoGroundTruth.exit_code(), 2);
    }
}
