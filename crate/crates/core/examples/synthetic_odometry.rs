//! Camera trajectory in a scene dominated by a moving box, from tracked flow.

use dynvo::geometry::relative_pose_error;
use dynvo::odometry::PipelineParams;
use dynvo::synth::{presets, render_sequence};
use dynvo::{Pipeline, Trajectory};

fn main() {
    let seq = render_sequence(&presets::dominant_object(40)).expect("preset renders");
    let mut pipeline = Pipeline::new(PipelineParams::default());
    let mut samples = Vec::new();
    for (k, (gray, depth)) in seq.gray.iter().zip(&seq.depth).enumerate() {
        let r = pipeline.process_frame(gray.clone(), depth.clone());
        let d = &r.diagnostics;
        if k > 0 {
            println!(
                "frame {k:>2}: {} segments, static label {}, {} objects, {:.1} ms",
                d.g,
                d.static_label,
                r.object_motions.len(),
                d.runtime_ms + d.stages.flow
            );
        }
        samples.push((seq.timestamps[k], r.pose_world));
    }
    let est = Trajectory::new(samples).unwrap();
    let rpe = relative_pose_error(&est, &seq.camera_trajectory(), 1.0).unwrap();
    println!("RPE over 1 s: {:.2} mm/s", rpe.rmse * 1e3);
}
