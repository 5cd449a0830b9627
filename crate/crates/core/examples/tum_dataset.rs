//! Run the full pipeline over a TUM RGB-D directory and write reports.
//!
//! `cargo run --release --example tum_dataset -- DATASET_DIR OUT_DIR [CONFIG]`.
//! Without arguments a short synthetic sequence is written in TUM layout
//! and used instead.

use std::path::PathBuf;

use dynvo::config::RunConfig;
use dynvo::dataset::{write_sequence, Dataset};
use dynvo::run::run;
use dynvo::synth::{presets, render_sequence};

fn main() {
    let args: Vec<PathBuf> = std::env::args_os().skip(1).map(PathBuf::from).collect();
    let tmp = tempfile::tempdir().expect("temp dir");
    let (data, out, config) = match args.as_slice() {
        [d, o, rest @ ..] => (d.clone(), o.clone(), rest.first().cloned()),
        _ => {
            let spec = presets::stop_and_go(40, 20);
            let data = tmp.path().join("data");
            write_sequence(&render_sequence(&spec).unwrap(), &spec, &data).unwrap();
            (data.clone(), tmp.path().join("out"), Some(data.join("config.txt")))
        }
    };
    let cfg = config.map_or_else(RunConfig::default, |c| RunConfig::load(c).expect("config"));
    let ds = Dataset::open(&data).expect("dataset");
    println!("{} frames, ground truth: {}", ds.len(), ds.ground_truth.is_some());
    let report = run(&ds, &cfg, &out).expect("run");
    print!("{}", report.summary.timing.to_text());
    match report.rpe {
        Some(r) => println!("RPE {:.4} m/s over {} intervals", r.rmse, r.intervals.len()),
        None => println!("no RPE"),
    }
    println!("outputs in {}", out.display());
}
