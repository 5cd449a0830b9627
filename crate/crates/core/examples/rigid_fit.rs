//! Recover a rigid motion from noisy point correspondences.

use dynvo::geometry::{fit_rigid, PointSet3};
use dynvo::Pose;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = Pose::from_axis_angle(Vector3::new(0.1, -0.3, 0.05), Vector3::new(0.4, 0.0, -0.2));
    let src: Vec<Vector3<f64>> = (0..200).map(|_| Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0))).collect();
    let noise = Normal::new(0.0, 0.01).unwrap();
    let dst: Vec<Vector3<f64>> = src
        .iter()
        .map(|p| truth.transform_point(p) + Vector3::from_fn(|_, _| noise.sample(&mut rng)))
        .collect();

    let est = fit_rigid(&PointSet3::from_points(src), &PointSet3::from_points(dst), None).expect("well-conditioned points");
    let (dr, dt) = est.distance(&truth);
    println!("true rotation   {:?}", truth.rotation_log().as_slice());
    println!("fitted rotation {:?}", est.rotation_log().as_slice());
    println!("rotation error (Frobenius) {dr:.2e}, translation error {dt:.2e} m");
}
