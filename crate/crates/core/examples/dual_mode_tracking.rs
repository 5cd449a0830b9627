//! One cell's label models as an object passes, stops and is absorbed back
//! into the background.

use dynvo::tracking::{update_models, DualModeCell};

fn main() {
    let alpha_max = 5.0;
    let mut cell = vec![DualModeCell::default()];
    // background for 3 frames, a moving object for 8, then the object stops
    // and segmentation reports background again
    let measurements = [1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 1, 1, 1, 1, 1, 1, 1];
    for (k, &m) in measurements.iter().enumerate() {
        update_models(&mut cell, &[m], 15, alpha_max);
        let show = |x: &Option<dynvo::tracking::LabelModel>| match x {
            Some(m) => format!("label {} p {:.2} age {:.0}", m.modal_label(), m.p[m.modal_label() as usize - 1], m.age),
            None => "-".to_string(),
        };
        println!("frame {:>2} measured {m}: apparent [{}] candidate [{}]", k + 1, show(&cell[0].apparent), show(&cell[0].candidate));
    }
}
