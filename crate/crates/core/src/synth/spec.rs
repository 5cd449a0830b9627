use std::path::Path;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::SceneError;
use crate::geometry::Pose;
use crate::sceneflow::CameraIntrinsics;

/// Pose as translation plus axis-angle rotation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseSpec {
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rotation: [f64; 3],
}

impl PoseSpec {
    pub fn pose(&self) -> Pose {
        Pose::from_axis_angle(Vector3::from(self.rotation), Vector3::from(self.translation))
    }

    pub fn from_pose(p: &Pose) -> Self {
        Self {
            translation: p.translation.into(),
            rotation: p.rotation_log().into(),
        }
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            translation: [x, y, z],
            rotation: [0.0; 3],
        }
    }
}

/// Per-frame poses, either listed or generated by a constant step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrajectorySpec {
    Poses(Vec<PoseSpec>),
    /// Starts at `start`; between frames `from` and `until` each frame adds
    /// `step.translation` in world coordinates and rotates by
    /// `step.rotation` about the body origin.
    Motion {
        start: PoseSpec,
        #[serde(default)]
        step: PoseSpec,
        #[serde(default)]
        from: usize,
        #[serde(default)]
        until: Option<usize>,
    },
}

impl TrajectorySpec {
    pub fn fixed(pose: PoseSpec) -> Self {
        Self::Motion {
            start: pose,
            step: PoseSpec::default(),
            from: 0,
            until: None,
        }
    }

    pub fn constant(start: PoseSpec, step: PoseSpec) -> Self {
        Self::Motion {
            start,
            step,
            from: 0,
            until: None,
        }
    }

    pub fn pose(&self, frame: usize) -> Pose {
        match self {
            Self::Poses(p) => p[frame.min(p.len().saturating_sub(1))].pose(),
            Self::Motion { start, step, from, until } => {
                let k = frame.clamp(*from, until.unwrap_or(usize::MAX).max(*from));
                let n = (k - from) as f64;
                let s = start.pose();
                let r = Rotation3::new(Vector3::from(step.rotation) * n) * s.rotation;
                Pose::new(r, s.translation + Vector3::from(step.translation) * n)
            }
        }
    }

    fn check_len(&self, what: &str, frames: usize) -> Result<(), SceneError> {
        match self {
            Self::Poses(p) if p.len() != frames => Err(SceneError::TrajectoryLength {
                what: what.to_string(),
                expected: frames,
                found: p.len(),
            }),
            _ => Ok(()),
        }
    }
}

/// Geometry in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    /// Centered box with full side lengths `size` (m).
    Box { size: [f64; 3] },
    /// The body `z = 0` plane; a centered `size[0] x size[1]` rectangle, or
    /// unbounded when `size` is absent.
    Plane {
        #[serde(default)]
        size: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub shape: Shape,
    pub trajectory: TrajectorySpec,
    /// Checker square side (m).
    #[serde(default = "default_texture")]
    pub texture: f64,
}

fn default_texture() -> f64 {
    0.03
}

impl BodySpec {
    pub fn new(shape: Shape, trajectory: TrajectorySpec) -> Self {
        Self {
            shape,
            trajectory,
            texture: default_texture(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Per-axis Gaussian noise on the current flow endpoint (m).
    #[serde(default)]
    pub flow_sigma: f64,
    /// Fraction of depth pixels dropped to 0.
    #[serde(default)]
    pub depth_dropout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub intrinsics: CameraIntrinsics,
    pub frames: usize,
    #[serde(default = "default_rate")]
    pub frame_rate: f64,
    #[serde(default = "default_cell")]
    pub cell_size: usize,
    /// Camera-to-world poses.
    pub camera: TrajectorySpec,
    /// Body-to-world poses per body.
    pub bodies: Vec<BodySpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_rate() -> f64 {
    30.0
}

fn default_cell() -> usize {
    16
}

impl SceneSpec {
    pub fn new(intrinsics: CameraIntrinsics, frames: usize, camera: TrajectorySpec, bodies: Vec<BodySpec>) -> Self {
        Self {
            intrinsics,
            frames,
            frame_rate: default_rate(),
            cell_size: default_cell(),
            camera,
            bodies,
            noise: NoiseSpec::default(),
            seed: 0,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SceneError> {
        let spec: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn timestamp(&self, frame: usize) -> f64 {
        frame as f64 / self.frame_rate
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.bodies.is_empty() || self.frames == 0 {
            return Err(SceneError::EmptyScene);
        }
        self.intrinsics.validate().map_err(|e| SceneError::Invalid(e.to_string()))?;
        if !(self.frame_rate > 0.0) {
            return Err(SceneError::Invalid("frame_rate must be positive".into()));
        }
        if self.cell_size == 0 || self.cell_size > self.intrinsics.width.min(self.intrinsics.height) {
            return Err(SceneError::Invalid("cell_size must be positive and fit the image".into()));
        }
        let n = &self.noise;
        if !(n.flow_sigma >= 0.0) || !(0.0..=1.0).contains(&n.depth_dropout) {
            return Err(SceneError::Invalid("noise levels out of range".into()));
        }
        self.camera.check_len("camera", self.frames)?;
        for (i, b) in self.bodies.iter().enumerate() {
            b.trajectory.check_len(&format!("body {i}"), self.frames)?;
            if !(b.texture > 0.0) {
                return Err(SceneError::Invalid(format!("body {i}: texture must be positive")));
            }
            if let Shape::Box { size } = b.shape {
                if size.iter().any(|s| !(*s > 0.0)) {
                    return Err(SceneError::Invalid(format!("body {i}: box sides must be positive")));
                }
            }
        }
        for a in 0..self.bodies.len() {
            for b in a + 1..self.bodies.len() {
                if let (Shape::Box { size: sa }, Shape::Box { size: sb }) = (self.bodies[a].shape, self.bodies[b].shape) {
                    let pa = self.bodies[a].trajectory.pose(0);
                    let pb = self.bodies[b].trajectory.pose(0);
                    if boxes_overlap(&pa, sa, &pb, sb) {
                        return Err(SceneError::BodiesIntersect(a, b));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Separating axis test for two oriented boxes.
fn boxes_overlap(pa: &Pose, sa: [f64; 3], pb: &Pose, sb: [f64; 3]) -> bool {
    let ha = Vector3::from(sa) / 2.0;
    let hb = Vector3::from(sb) / 2.0;
    let ra = pa.rotation.matrix();
    let rb = pb.rotation.matrix();
    let d = pb.translation - pa.translation;
    let mut axes: Vec<Vector3<f64>> = Vec::with_capacity(15);
    for i in 0..3 {
        axes.push(ra.column(i).into());
        axes.push(rb.column(i).into());
    }
    for i in 0..3 {
        for j in 0..3 {
            let c = ra.column(i).cross(&rb.column(j));
            if c.norm() > 1e-9 {
                axes.push(c.normalize());
            }
        }
    }
    axes.iter().all(|ax| {
        let ea: f64 = (0..3).map(|i| ha[i] * ra.column(i).dot(ax).abs()).sum();
        let eb: f64 = (0..3).map(|i| hb[i] * rb.column(i).dot(ax).abs()).sum();
        d.dot(ax).abs() < ea + eb
    })
}
