//! Split a flow field with two rigid motions into segments.

use dynvo::segmentation::{format_segmentation, segment, SegmentationParams};
use dynvo::synth::{presets, render_sequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let seq = render_sequence(&presets::stop_and_go(2, 1)).expect("preset renders");
    let flow = &seq.flows_gt[0];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let seg = segment(flow, &SegmentationParams::default(), &mut rng).expect("valid flow");
    println!("{} motions, support {:?}", seg.g(), seg.support);
    for (id, m) in seg.motions.iter().enumerate() {
        println!("motion {}: t = {:?}", id + 1, m.translation.as_slice());
    }
    // one character per cell: '.' unassigned, digits for segments
    for r in 0..flow.rows {
        let line: String = (0..flow.cols)
            .map(|c| match seg.assignment[flow.index(r, c)] {
                0 => '.',
                g => char::from_digit(g % 10, 10).unwrap(),
            })
            .collect();
        println!("{line}");
    }
    let dump = format_segmentation(&seg.assignment);
    println!("dump has {} lines", dump.lines().count());
}
