use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::Pose;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("timestamps not strictly increasing at sample {index}")]
    NonIncreasing { index: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Timestamped poses, strictly increasing in time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    samples: Vec<(f64, Pose)>,
}

impl Trajectory {
    pub fn new(samples: Vec<(f64, Pose)>) -> Result<Self, TrajectoryError> {
        if let Some(index) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(TrajectoryError::NonIncreasing { index: index + 1 });
        }
        Ok(Self { samples })
    }

    /// Appends a sample; the timestamp must be later than the last one.
    pub fn push(&mut self, timestamp: f64, pose: Pose) -> Result<(), TrajectoryError> {
        if let Some((last, _)) = self.samples.last() {
            if timestamp <= *last {
                return Err(TrajectoryError::NonIncreasing {
                    index: self.samples.len(),
                });
            }
        }
        self.samples.push((timestamp, pose));
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, Pose)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    /// Index of the sample closest in time to `t`.
    pub fn nearest_index(&self, t: f64) -> Option<usize> {
        if self.samples.is_empty() {
            return None;
        }
        let upper = self.samples.partition_point(|s| s.0 < t);
        let candidates = [upper.checked_sub(1), (upper < self.samples.len()).then_some(upper)];
        candidates
            .into_iter()
            .flatten()
            .min_by(|&a, &b| (self.samples[a].0 - t).abs().total_cmp(&(self.samples[b].0 - t).abs()))
    }

    /// Nearest sample within `tolerance` seconds.
    pub fn lookup(&self, t: f64, tolerance: f64) -> Option<(usize, &Pose)> {
        let i = self.nearest_index(t)?;
        let (ts, pose) = &self.samples[i];
        ((ts - t).abs() <= tolerance).then_some((i, pose))
    }

    /// Applies `offset * pose` to every sample.
    pub fn left_multiplied(&self, offset: &Pose) -> Trajectory {
        Trajectory {
            samples: self.samples.iter().map(|(t, p)| (*t, offset * p)).collect(),
        }
    }

    /// Parses the TUM text layout: `timestamp tx ty tz qx qy qz qw`.
    pub fn parse_tum(text: &str) -> Result<Self, TrajectoryError> {
        let mut samples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| TrajectoryError::Parse {
                    line: lineno + 1,
                    msg: format!("{e}"),
                })?;
            if fields.len() != 8 {
                return Err(TrajectoryError::Parse {
                    line: lineno + 1,
                    msg: format!("expected 8 fields, found {}", fields.len()),
                });
            }
            let pose = Pose::from_tum(
                [fields[1], fields[2], fields[3]],
                [fields[4], fields[5], fields[6], fields[7]],
            );
            samples.push((fields[0], pose));
        }
        Self::new(samples)
    }

    pub fn to_tum_string(&self) -> String {
        let mut out = String::new();
        for (t, p) in &self.samples {
            let q = p.quaternion();
            let tr = p.translation;
            writeln!(
                out,
                "{:.6} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}",
                t, tr.x, tr.y, tr.z, q[0], q[1], q[2], q[3]
            )
            .unwrap();
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrajectoryError> {
        Self::parse_tum(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TrajectoryError> {
        std::fs::write(path, self.to_tum_string())?;
        Ok(())
    }
}
