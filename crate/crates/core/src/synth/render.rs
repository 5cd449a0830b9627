use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{SceneError, SceneSpec, Shape};
use crate::geometry::{Pose, Trajectory};
use crate::image::{DepthImage, GrayImage};
use crate::sceneflow::{CameraIntrinsics, GridFlowField};

/// Nearest surface along a pixel ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub body: usize,
    /// Z coordinate in the camera frame (m).
    pub depth: f64,
    /// Distance from the camera center (m).
    pub range: f64,
    /// Hit point in camera coordinates.
    pub point: Vector3<f64>,
    /// Hit point in body coordinates.
    pub body_point: Vector3<f64>,
}

/// Bodies of one frame expressed in camera coordinates.
#[derive(Debug, Clone)]
pub struct FrameScene {
    intrinsics: CameraIntrinsics,
    /// `(shape, texture, camera -> body)` per body.
    bodies: Vec<(Shape, f64, Pose)>,
}

impl FrameScene {
    pub fn new(spec: &SceneSpec, frame: usize) -> Self {
        let camera = spec.camera.pose(frame);
        let bodies = spec
            .bodies
            .iter()
            .map(|b| (b.shape, b.texture, b.trajectory.pose(frame).inverse() * camera))
            .collect();
        Self {
            intrinsics: spec.intrinsics.clone(),
            bodies,
        }
    }

    /// Casts the ray through pixel `(u, v)`.
    pub fn cast(&self, u: f64, v: f64) -> Option<RayHit> {
        let k = &self.intrinsics;
        let d = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        let mut best: Option<(usize, f64)> = None;
        for (i, (shape, _, to_body)) in self.bodies.iter().enumerate() {
            let o = to_body.translation;
            let db = to_body.rotation * d;
            if let Some(t) = intersect(shape, &o, &db) {
                if best.is_none_or(|(_, bt)| t < bt) {
                    best = Some((i, t));
                }
            }
        }
        best.map(|(body, t)| {
            let to_body = &self.bodies[body].2;
            RayHit {
                body,
                depth: t,
                range: t * d.norm(),
                point: d * t,
                body_point: to_body.translation + to_body.rotation * d * t,
            }
        })
    }

    fn shade(&self, hit: &RayHit) -> f64 {
        let (shape, texture, _) = &self.bodies[hit.body];
        let q = hit.body_point;
        let (face, a, b) = match shape {
            Shape::Plane { .. } => (0u64, q.x, q.y),
            Shape::Box { size } => {
                let axis = (0..3)
                    .max_by(|&i, &j| (q[i].abs() / size[i]).total_cmp(&(q[j].abs() / size[j])))
                    .unwrap();
                let face = 2 * axis as u64 + (q[axis] > 0.0) as u64;
                (face, q[(axis + 1) % 3], q[(axis + 2) % 3])
            }
        };
        let i = (a / texture).floor() as i64;
        let j = (b / texture).floor() as i64;
        let h = mix(mix(mix(hit.body as u64 ^ (face << 32)) ^ i as u64) ^ j as u64);
        40.0 + (h % 176) as f64
    }
}

fn mix(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^ (x >> 33)
}

/// Ray parameter of the first hit along `o + t d`, `t > 0`.
fn intersect(shape: &Shape, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
    const EPS: f64 = 1e-9;
    match shape {
        Shape::Plane { size } => {
            if d.z.abs() < 1e-15 {
                return None;
            }
            let t = -o.z / d.z;
            if t <= EPS {
                return None;
            }
            if let Some([w, h]) = size {
                let p = o + d * t;
                if p.x.abs() > w / 2.0 || p.y.abs() > h / 2.0 {
                    return None;
                }
            }
            Some(t)
        }
        Shape::Box { size } => {
            let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
            for a in 0..3 {
                let h = size[a] / 2.0;
                if d[a].abs() < 1e-15 {
                    if o[a].abs() > h {
                        return None;
                    }
                    continue;
                }
                let (mut n, mut f) = ((-h - o[a]) / d[a], (h - o[a]) / d[a]);
                if n > f {
                    std::mem::swap(&mut n, &mut f);
                }
                t0 = t0.max(n);
                t1 = t1.min(f);
            }
            if t0 > t1 {
                return None;
            }
            if t0 > EPS {
                Some(t0)
            } else if t1 > EPS {
                Some(t1)
            } else {
                None
            }
        }
    }
}

/// Casts the ray through pixel `(u, v)` of frame `frame`.
pub fn cast_ray(spec: &SceneSpec, frame: usize, u: f64, v: f64) -> Option<RayHit> {
    FrameScene::new(spec, frame).cast(u, v)
}

/// Rendered sequence with ground truth.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub timestamps: Vec<f64>,
    pub gray: Vec<GrayImage>,
    /// Z-depth, scaled by the intrinsics' depth scale; 0 = no reading.
    pub depth: Vec<DepthImage>,
    /// Flow of pair `k - 1 -> k` at index `k - 1`, with noise.
    pub flows: Vec<GridFlowField>,
    /// Same without noise.
    pub flows_gt: Vec<GridFlowField>,
    /// Owning body plus one at each cell center per frame, 0 for none.
    pub labels: Vec<Vec<u32>>,
    /// Camera-to-world pose per frame.
    pub camera: Vec<Pose>,
    /// Body-to-world pose per body and frame.
    pub bodies: Vec<Vec<Pose>>,
}

impl Sequence {
    pub fn camera_trajectory(&self) -> Trajectory {
        Trajectory::new(self.timestamps.iter().copied().zip(self.camera.iter().copied()).collect()).expect("increasing timestamps")
    }

    /// True camera motion from frame `k - 1` to `k`.
    pub fn camera_delta(&self, k: usize) -> Pose {
        self.camera[k - 1].inverse() * self.camera[k]
    }

    /// True motion of body `b`'s points from frame `k - 1` to `k`, in
    /// camera coordinates (`x_k = H x_{k-1}`).
    pub fn body_motion_in_camera(&self, b: usize, k: usize) -> Pose {
        self.camera[k].inverse() * self.bodies[b][k] * self.bodies[b][k - 1].inverse() * self.camera[k - 1]
    }
}

/// Renders every frame of `spec`.
pub fn render_sequence(spec: &SceneSpec) -> Result<Sequence, SceneError> {
    spec.validate()?;
    let k = &spec.intrinsics;
    let scenes: Vec<FrameScene> = (0..spec.frames).map(|f| FrameScene::new(spec, f)).collect();
    let (gray, mut depth): (Vec<GrayImage>, Vec<DepthImage>) = scenes.par_iter().map(|s| render_frame(s, k)).unzip();

    let grid = GridFlowField::for_image(k.width, k.height, spec.cell_size);
    let labels: Vec<Vec<u32>> = scenes
        .iter()
        .map(|s| {
            (0..grid.len())
                .map(|i| {
                    let c = grid.pixels_prev[i];
                    s.cast(c.x, c.y).map_or(0, |h| h.body as u32 + 1)
                })
                .collect()
        })
        .collect();
    let flows_gt: Vec<GridFlowField> = (1..spec.frames)
        .into_par_iter()
        .map(|f| ground_truth_flow(&scenes[f - 1], &scenes[f], spec.cell_size))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut flows = flows_gt.clone();
    if spec.noise.flow_sigma > 0.0 {
        let n = Normal::new(0.0, spec.noise.flow_sigma).map_err(|e| SceneError::Invalid(e.to_string()))?;
        for f in flows.iter_mut() {
            for i in 0..f.len() {
                if f.valid[i] {
                    f.points_curr[i] += Vector3::new(n.sample(&mut rng), n.sample(&mut rng), n.sample(&mut rng));
                }
            }
        }
    }
    if spec.noise.depth_dropout > 0.0 {
        for d in depth.iter_mut() {
            for v in d.data.iter_mut() {
                if rng.random::<f64>() < spec.noise.depth_dropout {
                    *v = 0;
                }
            }
        }
    }

    Ok(Sequence {
        timestamps: (0..spec.frames).map(|f| spec.timestamp(f)).collect(),
        gray,
        depth,
        flows,
        flows_gt,
        labels,
        camera: (0..spec.frames).map(|f| spec.camera.pose(f)).collect(),
        bodies: spec.bodies.iter().map(|b| (0..spec.frames).map(|f| b.trajectory.pose(f)).collect()).collect(),
    })
}

fn render_frame(scene: &FrameScene, k: &CameraIntrinsics) -> (GrayImage, DepthImage) {
    const SUB: [(f64, f64); 4] = [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)];
    let (w, h) = (k.width, k.height);
    let rows: Vec<(Vec<u8>, Vec<u16>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut g = Vec::with_capacity(w);
            let mut d = Vec::with_capacity(w);
            for x in 0..w {
                let (u, v) = (x as f64, y as f64);
                let shade: f64 = SUB
                    .iter()
                    .map(|(dx, dy)| scene.cast(u + dx, v + dy).map_or(128.0, |hit| scene.shade(&hit)))
                    .sum::<f64>()
                    / 4.0;
                g.push(shade.round() as u8);
                let raw = scene.cast(u, v).map_or(0.0, |hit| (hit.depth * k.depth_scale).round());
                d.push(if raw > u16::MAX as f64 { 0 } else { raw as u16 });
            }
            (g, d)
        })
        .collect();
    let mut gray = GrayImage::new(w, h);
    let mut depth = DepthImage::new(w, h);
    for (y, (g, d)) in rows.into_iter().enumerate() {
        gray.data[y * w..(y + 1) * w].copy_from_slice(&g);
        depth.data[y * w..(y + 1) * w].copy_from_slice(&d);
    }
    (gray, depth)
}

/// Analytic flow at the cell centers of `prev`. Cells are invalid when the
/// center ray misses, the point leaves the image, or it is occluded in
/// `curr`.
fn ground_truth_flow(prev: &FrameScene, curr: &FrameScene, cell_size: usize) -> GridFlowField {
    let k = &prev.intrinsics;
    let mut f = GridFlowField::for_image(k.width, k.height, cell_size);
    for i in 0..f.len() {
        let c = f.pixels_prev[i];
        let Some(hit) = prev.cast(c.x, c.y) else { continue };
        let q = curr.bodies[hit.body].2.inverse().transform_point(&hit.body_point);
        let Some(uv) = k.project(&q) else { continue };
        if !(0.0..=(k.width - 1) as f64).contains(&uv.x) || !(0.0..=(k.height - 1) as f64).contains(&uv.y) {
            continue;
        }
        let visible = curr
            .cast(uv.x, uv.y)
            .is_some_and(|h| h.body == hit.body && (h.depth - q.z).abs() <= 1e-6 * q.z.max(1.0));
        if !visible {
            continue;
        }
        f.points_prev[i] = hit.point;
        f.points_curr[i] = q;
        f.pixels_curr[i] = Vector2::new(uv.x, uv.y);
        f.valid[i] = true;
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fit_correspondences;
    use crate::synth::{BodySpec, NoiseSpec, PoseSpec, TrajectorySpec};

    fn small_k() -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 120.0,
            fy: 120.0,
            cx: 79.5,
            cy: 59.5,
            depth_scale: 5000.0,
            width: 160,
            height: 120,
        }
    }

    fn wall(z: f64) -> BodySpec {
        BodySpec::new(Shape::Plane { size: None }, TrajectorySpec::fixed(PoseSpec::translation(0.0, 0.0, z)))
    }

    #[test]
    fn static_plane_depth_and_range() {
        let spec = SceneSpec::new(small_k(), 2, TrajectorySpec::fixed(PoseSpec::default()), vec![wall(2.0)]);
        let seq = render_sequence(&spec).unwrap();
        assert!(seq.depth[0].data.iter().all(|&d| d == 10000));
        let k = small_k();
        for (u, v) in [(0.0, 0.0), (79.5, 59.5), (150.0, 10.0)] {
            let hit = cast_ray(&spec, 0, u, v).unwrap();
            let ray = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
            let cos = 1.0 / ray.norm();
            assert!((hit.range - 2.0 / cos).abs() < 1e-12);
            assert!((hit.depth - 2.0).abs() < 1e-12);
        }
        let f = &seq.flows_gt[0];
        assert_eq!(f.n_valid(), f.len());
        for i in 0..f.len() {
            assert!(f.displacement(i).norm() < 1e-9);
            assert!((f.points_curr[i] - f.points_prev[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn translating_camera_matches_projection() {
        let k = small_k();
        let step = Vector3::new(0.02, -0.01, 0.03);
        let cam = TrajectorySpec::constant(PoseSpec::default(), PoseSpec::translation(step.x, step.y, step.z));
        let spec = SceneSpec::new(k.clone(), 3, cam, vec![wall(2.5)]);
        let seq = render_sequence(&spec).unwrap();
        let f = &seq.flows_gt[1];
        assert!(f.n_valid() > f.len() / 2);
        for i in (0..f.len()).filter(|&i| f.valid[i]) {
            let c = f.pixels_prev[i];
            // independent projection: point on z = 2.5 seen from camera at (step * 1)
            let world = Vector3::new(step.x + (c.x - k.cx) / k.fx * (2.5 - step.z), step.y + (c.y - k.cy) / k.fy * (2.5 - step.z), 2.5);
            let rel = world - step * 2.0;
            let u = k.fx * rel.x / rel.z + k.cx;
            let v = k.fy * rel.y / rel.z + k.cy;
            assert!((f.pixels_curr[i] - Vector2::new(u, v)).norm() < 1e-9);
        }
    }

    #[test]
    fn box_silhouette_owns_labels() {
        let k = small_k();
        let boxb = BodySpec::new(
            Shape::Box { size: [1.6, 1.0, 0.2] },
            TrajectorySpec::constant(PoseSpec::translation(0.0, 0.0, 1.5), PoseSpec::translation(0.02, 0.0, 0.0)),
        );
        let spec = SceneSpec::new(k.clone(), 3, TrajectorySpec::fixed(PoseSpec::default()), vec![wall(3.0), boxb]);
        let seq = render_sequence(&spec).unwrap();
        let grid = GridFlowField::for_image(k.width, k.height, spec.cell_size);
        for f in 0..3 {
            let x0 = 0.02 * f as f64;
            for i in 0..grid.len() {
                let c = grid.pixels_prev[i];
                // front face at z = 1.4
                let x = (c.x - k.cx) / k.fx * 1.4;
                let y = (c.y - k.cy) / k.fy * 1.4;
                let inside = (x - x0).abs() < 0.8 && y.abs() < 0.5;
                assert_eq!(seq.labels[f][i], if inside { 2 } else { 1 });
            }
        }
        let cover = seq.labels[0].iter().filter(|&&l| l == 2).count() as f64 / grid.len() as f64;
        assert!(cover > 0.55, "{cover}");
    }

    #[test]
    fn ground_truth_flow_is_self_consistent() {
        let k = small_k();
        let cam = TrajectorySpec::constant(
            PoseSpec::default(),
            PoseSpec {
                translation: [0.01, 0.0, 0.02],
                rotation: [0.0, 0.01, 0.005],
            },
        );
        let boxb = BodySpec::new(
            Shape::Box { size: [0.5, 0.5, 0.5] },
            TrajectorySpec::constant(
                PoseSpec::translation(-0.3, 0.0, 2.0),
                PoseSpec {
                    translation: [0.03, 0.0, 0.0],
                    rotation: [0.0, 0.0, 0.02],
                },
            ),
        );
        let spec = SceneSpec::new(k, 4, cam, vec![wall(4.0), boxb]);
        let seq = render_sequence(&spec).unwrap();
        for kf in 1..4 {
            let f = &seq.flows_gt[kf - 1];
            let lab = &seq.labels[kf - 1];
            let bg = fit_correspondences(&f.points_prev, &f.points_curr, |i| (f.valid[i] && lab[i] == 1) as u8 as f64).unwrap();
            let (dr, dt) = bg.inverse().distance(&seq.camera_delta(kf));
            assert!(dr < 1e-9 && dt < 1e-9);
            let ob = fit_correspondences(&f.points_prev, &f.points_curr, |i| (f.valid[i] && lab[i] == 2) as u8 as f64).unwrap();
            let (dr, dt) = ob.distance(&seq.body_motion_in_camera(1, kf));
            assert!(dr < 1e-9 && dt < 1e-9);
        }
    }

    #[test]
    fn flow_noise_has_requested_sigma() {
        let mut spec = SceneSpec::new(small_k(), 21, TrajectorySpec::fixed(PoseSpec::default()), vec![wall(2.0)]);
        spec.cell_size = 8;
        spec.noise = NoiseSpec {
            flow_sigma: 0.005,
            depth_dropout: 0.0,
        };
        let seq = render_sequence(&spec).unwrap();
        let mut sq = 0.0;
        let mut n = 0usize;
        for (f, g) in seq.flows.iter().zip(&seq.flows_gt) {
            for i in 0..f.len() {
                let e = f.points_curr[i] - g.points_curr[i];
                sq += e.norm_squared();
                n += 3;
            }
            assert_eq!(f.points_prev, g.points_prev);
        }
        assert!(n >= 10_000);
        let sigma = (sq / n as f64).sqrt();
        assert!((sigma / 0.005 - 1.0).abs() < 0.05, "{sigma}");
    }

    #[test]
    fn dropout_and_determinism() {
        let mut spec = SceneSpec::new(small_k(), 2, TrajectorySpec::fixed(PoseSpec::default()), vec![wall(2.0)]);
        spec.noise.depth_dropout = 0.1;
        spec.seed = 7;
        let a = render_sequence(&spec).unwrap();
        let b = render_sequence(&spec).unwrap();
        assert_eq!(a.depth, b.depth);
        let zeros = a.depth[0].data.iter().filter(|&&d| d == 0).count() as f64 / a.depth[0].data.len() as f64;
        assert!((zeros - 0.1).abs() < 0.02);
    }
}
