//! Grid scene flow from two rendered RGB-D frames, compared with the
//! analytic flow of the renderer.

use dynvo::sceneflow::{compute_scene_flow, DepthFilter, LkParams};
use dynvo::synth::{presets, render_sequence};

fn main() {
    let spec = presets::stop_and_go(2, 1);
    let seq = render_sequence(&spec).expect("preset renders");
    let flow = compute_scene_flow(
        &seq.gray[0],
        &seq.gray[1],
        &seq.depth[0],
        &seq.depth[1],
        &spec.intrinsics,
        &DepthFilter::default(),
        spec.cell_size,
        &LkParams::default(),
    );
    let truth = &seq.flows_gt[0];
    let mut errors: Vec<f64> = (0..flow.len())
        .filter(|&i| flow.valid[i] && truth.valid[i])
        .map(|i| (flow.points_curr[i] - truth.points_curr[i]).norm())
        .collect();
    errors.sort_by(f64::total_cmp);
    println!("{} x {} cells, {} valid", flow.cols, flow.rows, flow.n_valid());
    println!(
        "3D endpoint error vs analytic flow: median {:.1} mm, 90th percentile {:.1} mm",
        errors[errors.len() / 2] * 1e3,
        errors[errors.len() * 9 / 10] * 1e3
    );
}
