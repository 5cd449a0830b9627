//! Ready-made scenes.

use std::f64::consts::PI;

use super::{BodySpec, PoseSpec, SceneSpec, Shape, TrajectorySpec};
use crate::sceneflow::CameraIntrinsics;

/// Camera sliding right while slowly turning.
fn drifting_camera() -> TrajectorySpec {
    TrajectorySpec::constant(
        PoseSpec::default(),
        PoseSpec {
            translation: [0.005, 0.0, 0.002],
            rotation: [0.0, 0.001, 0.0],
        },
    )
}

/// Back wall and floor.
fn room() -> Vec<BodySpec> {
    let mut wall = BodySpec::new(Shape::Plane { size: None }, TrajectorySpec::fixed(PoseSpec::translation(0.0, 0.0, 6.0)));
    wall.texture = 0.08;
    let mut floor = BodySpec::new(
        Shape::Plane { size: None },
        TrajectorySpec::fixed(PoseSpec {
            translation: [0.0, 1.2, 0.0],
            rotation: [PI / 2.0, 0.0, 0.0],
        }),
    );
    floor.texture = 0.06;
    vec![wall, floor]
}

/// Static room, moving camera.
pub fn static_room(frames: usize) -> SceneSpec {
    SceneSpec::new(CameraIntrinsics::tum_default(), frames, drifting_camera(), room())
}

/// A box approaches the moving camera for ten frames, growing to about 60%
/// of the image, then keeps swaying in front of it.
pub fn dominant_object(frames: usize) -> SceneSpec {
    let poses = (0..frames)
        .map(|k| {
            let k = k as f64;
            if k <= 10.0 {
                PoseSpec::translation(-0.3 + 0.03 * k, -0.1, 4.6 - 0.1 * k)
            } else {
                let phase = 2.0 * PI * (k - 10.0) / 20.0;
                PoseSpec {
                    translation: [0.008 * (k - 10.0) + 0.2 * phase.sin(), -0.1 + 0.08 * (1.0 - phase.cos()), 3.6],
                    rotation: [0.0, 0.03 * phase.sin(), 0.0],
                }
            }
        })
        .collect();
    let mut bodies = room();
    bodies.push(BodySpec::new(Shape::Box { size: [3.0, 2.4, 0.6] }, TrajectorySpec::Poses(poses)));
    SceneSpec::new(CameraIntrinsics::tum_default(), frames, drifting_camera(), bodies)
}

/// A box slides sideways until frame `stop`, then rests.
pub fn stop_and_go(frames: usize, stop: usize) -> SceneSpec {
    let mut bodies = room();
    bodies.push(BodySpec::new(
        Shape::Box { size: [1.4, 1.0, 0.5] },
        TrajectorySpec::Motion {
            start: PoseSpec::translation(-0.6, 0.0, 2.8),
            step: PoseSpec::translation(0.04, 0.0, 0.0),
            from: 0,
            until: Some(stop),
        },
    ));
    SceneSpec::new(CameraIntrinsics::tum_default(), frames, drifting_camera(), bodies)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        static_room(5).validate().unwrap();
        dominant_object(50).validate().unwrap();
        stop_and_go(30, 20).validate().unwrap();
    }
}
