//! Relative pose error of a TUM trajectory file against ground truth.
//!
//! `cargo run --example evaluate_rpe -- EST GT [DELTA]`; without arguments a
//! drifting copy of a circle is scored.

use dynvo::geometry::relative_pose_error;
use dynvo::{Pose, Trajectory};
use nalgebra::Vector3;

fn circle(drift: f64) -> Trajectory {
    Trajectory::new(
        (0..100)
            .map(|k| {
                let t = k as f64 * 0.05;
                let p = Vector3::new(t.cos(), 0.0, t.sin()) + Vector3::new(drift * t, 0.0, 0.0);
                (t, Pose::from_axis_angle(Vector3::new(0.0, -t, 0.0), p))
            })
            .collect(),
    )
    .unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (est, gt, delta) = match args.as_slice() {
        [e, g, rest @ ..] => (
            Trajectory::load(e).expect("estimate"),
            Trajectory::load(g).expect("ground truth"),
            rest.first().map_or(1.0, |d| d.parse().expect("delta")),
        ),
        _ => (circle(0.02), circle(0.0), 1.0),
    };
    let r = relative_pose_error(&est, &gt, delta).expect("overlapping trajectories");
    println!("{} intervals of {delta} s", r.intervals.len());
    println!("rmse {:.4} m/s, mean {:.4}, median {:.4}, max {:.4}", r.rmse, r.mean, r.median, r.max);
}
