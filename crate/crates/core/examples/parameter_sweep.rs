//! Runtime and accuracy against grid cell size on a rendered sequence.

use dynvo::config::RunConfig;
use dynvo::dataset::{write_sequence, Dataset};
use dynvo::run::{format_sweep, sweep};
use dynvo::synth::{presets, render_sequence};

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = presets::static_room(12);
    write_sequence(&render_sequence(&spec).unwrap(), &spec, dir.path()).unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    let cfg = RunConfig {
        rpe_delta: 0.2,
        ..RunConfig::load(dir.path().join("config.txt")).unwrap()
    };
    let values: Vec<String> = ["8", "16", "32"].iter().map(|s| s.to_string()).collect();
    let rows = sweep(&ds, &cfg, "w_grid", &values).unwrap();
    print!("{}", format_sweep("w_grid", &rows));
}
