//! Acceptance criteria, one pass/fail line each.
//!
//! Runs with a custom harness so the summary is always printed:
//! `cargo test --test acceptance`. Criterion 10 needs the TUM fr1/xyz
//! sequence; point `TUM_FR1_XYZ` at its directory to enable it.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

use dynvo::config::{FlowSource, RunConfig};
use dynvo::dataset::{write_sequence, Dataset};
use dynvo::geometry::{fit_rigid, relative_pose_error, PointSet3};
use dynvo::odometry::PipelineParams;
use dynvo::run::{execute, median, run};
use dynvo::segmentation::{segment, update_entropy, MotionHypothesis, SegmentationParams};
use dynvo::synth::{presets, render_sequence, Sequence};
use dynvo::tracking::{compensate_models, update_models, DualModeCell, LabelModel};
use dynvo::{CameraIntrinsics, GridFlowField, Pipeline, Pose, Trajectory};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_pose(rng: &mut ChaCha8Rng, max_angle: f64, max_t: f64) -> Pose {
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let angle = rng.random_range(0.0..max_angle);
    let t = Vector3::from_fn(|_, _| rng.random_range(-max_t..max_t));
    Pose::from_axis_angle(Vector3::from(axis) * angle, t)
}

fn ac1_rigid_fit() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sigma = 0.01;
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut worst_exact = 0.0f64;
    let mut normalized_sq = 0.0;
    let mut within = 0;
    let trials = 1000;
    for _ in 0..trials {
        let n = rng.random_range(10..=100);
        let truth = random_pose(&mut rng, std::f64::consts::PI, 2.0);
        let src: Vec<Vector3<f64>> = (0..n).map(|_| Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0))).collect();
        let dst: Vec<Vector3<f64>> = src.iter().map(|p| truth.rotation * p + truth.translation).collect();
        let est = fit_rigid(&PointSet3::from_points(src.clone()), &PointSet3::from_points(dst.clone()), None).map_err(|e| e.to_string())?;
        let dr = (est.rotation.matrix() - truth.rotation.matrix()).amax();
        let dt = (est.translation - truth.translation).amax();
        worst_exact = worst_exact.max(dr).max(dt);

        let noisy: Vec<Vector3<f64>> = dst.iter().map(|p| p + Vector3::from_fn(|_, _| noise.sample(&mut rng))).collect();
        let est = fit_rigid(&PointSet3::from_points(src), &PointSet3::from_points(noisy), None).map_err(|e| e.to_string())?;
        let e = (est.translation - truth.translation).norm() * (n as f64).sqrt() / sigma;
        normalized_sq += e * e;
        within += (e < 3.0) as usize;
    }
    let rms = (normalized_sq / trials as f64).sqrt();
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst_exact < 1e-7 && rms < 3.0 && secs < 5.0,
        format!(
            "exact max error {worst_exact:.2e}; noisy RMS |dt| sqrt(n)/sigma = {rms:.3} (< 3), {within}/{trials} instances individually below 3 sigma/sqrt(n); {secs:.2} s"
        ),
    )
}

fn ac2_entropy_unit() -> Check {
    let mut f = GridFlowField::empty(4, 3, 16);
    for i in 0..f.len() {
        f.points_prev[i] = Vector3::new(i as f64 * 0.1, 0.2, 2.0);
        f.points_curr[i] = f.points_prev[i];
        f.valid[i] = true;
    }
    let h = MotionHypothesis::evaluate(Pose::identity(), &f, 3e-5);
    let s = update_entropy(&[h], &f.valid, 1e3, 1e-2);
    let expected = 1.0 - (-0.01f64).exp();
    let worst = s.s.iter().map(|v| (v - expected).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-12, format!("S = {:.15}, expected {expected:.15}, max deviation {worst:.1e}", s.s[0]))
}

/// 40 x 30 cells; cells in rows 6..24, cols 10..30 (30%) belong to an object.
fn two_body_field(sigma: f64, seed: u64) -> (GridFlowField, Vec<bool>, [Pose; 2]) {
    let k = CameraIntrinsics::tum_default();
    let background = Pose::from_axis_angle(Vector3::new(0.01, -0.02, 0.005), Vector3::new(0.02, -0.01, 0.03));
    let object = Pose::from_axis_angle(Vector3::new(0.0, 0.06, 0.01), Vector3::new(-0.08, 0.03, -0.02));
    let mut f = GridFlowField::for_image(640, 480, 16);
    let mut truth = vec![false; f.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..f.len() {
        let (r, c) = f.row_col(i);
        let on_object = (6..24).contains(&r) && (10..30).contains(&c);
        let z = if on_object {
            1.6 + 0.05 * (c as f64 * 0.7).sin()
        } else {
            3.0 + 0.4 * (c as f64 * 0.2).sin() + 0.3 * (r as f64 * 0.25).cos()
        };
        let px = f.pixels_prev[i];
        let p = k.back_project(px.x, px.y, z);
        let mut q = if on_object { object } else { background }.transform_point(&p);
        if sigma > 0.0 {
            let n = Normal::new(0.0, sigma).unwrap();
            q += Vector3::new(n.sample(&mut rng), n.sample(&mut rng), n.sample(&mut rng));
        }
        f.points_prev[i] = p;
        f.points_curr[i] = q;
        f.pixels_curr[i] = k.project(&q).unwrap_or(Vector2::new(-1.0, -1.0));
        f.valid[i] = true;
        truth[i] = on_object;
    }
    (f, truth, [background, object])
}

fn iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    inter as f64 / union.max(1) as f64
}

/// IoU of the segment that best overlaps the true object mask.
fn object_iou(assignment: &[u32], truth: &[bool]) -> (u32, f64) {
    let ids: std::collections::BTreeSet<u32> = assignment.iter().copied().filter(|&a| a > 0).collect();
    ids.into_iter()
        .map(|id| {
            let mask: Vec<bool> = assignment.iter().map(|&a| a == id).collect();
            (id, iou(&mask, truth))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0))
}

fn ac3_two_body() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (flow, truth, motions) = two_body_field(0.0, 0);
    let t = Instant::now();
    let seg = segment(&flow, &SegmentationParams::default(), &mut rng).map_err(|e| e.to_string())?;
    let clean_secs = t.elapsed().as_secs_f64();
    let (obj, clean_iou) = object_iou(&seg.assignment, &truth);
    let bg_mask: Vec<bool> = truth.iter().map(|t| !t).collect();
    let (bg, bg_iou) = object_iou(&seg.assignment, &bg_mask);
    let err = |id: u32, truth: &Pose| {
        seg.motion(id).map_or(f64::INFINITY, |m| {
            let (dr, dt) = m.distance(truth);
            dr.max(dt)
        })
    };
    let pose_err = err(bg, &motions[0]).max(err(obj, &motions[1]));

    // 5 mm flow noise; inlier threshold raised to match (3e-5 m^2 sits
    // below the expected squared residual of 7.5e-5 m^2)
    let (noisy, truth_n, _) = two_body_field(0.005, 9);
    let params = SegmentationParams {
        th_inlier: 2e-4,
        ..SegmentationParams::default()
    };
    let t = Instant::now();
    let seg_n = segment(&noisy, &params, &mut rng).map_err(|e| e.to_string())?;
    let noisy_secs = t.elapsed().as_secs_f64();
    let (_, noisy_iou) = object_iou(&seg_n.assignment, &truth_n);

    ensure(
        seg.g() == 2 && pose_err < 1e-6 && clean_iou.min(bg_iou) >= 0.99 && noisy_iou >= 0.85 && clean_secs.max(noisy_secs) < 1.0,
        format!(
            "g = {}, pose error {pose_err:.1e}, IoU object {clean_iou:.4} background {bg_iou:.4}; noisy IoU {noisy_iou:.4} (g = {}); {:.1} / {:.1} ms",
            seg.g(),
            seg_n.g(),
            clean_secs * 1e3,
            noisy_secs * 1e3
        ),
    )
}

fn dominant_sequence() -> &'static Sequence {
    static SEQ: OnceLock<Sequence> = OnceLock::new();
    SEQ.get_or_init(|| render_sequence(&presets::dominant_object(50)).expect("preset renders"))
}

fn rpe_of(seq: &Sequence, poses: &[Pose]) -> Result<f64, String> {
    let est = Trajectory::new(seq.timestamps.iter().copied().zip(poses.iter().copied()).collect()).map_err(|e| e.to_string())?;
    relative_pose_error(&est, &seq.camera_trajectory(), 1.0).map(|r| r.rmse).map_err(|e| e.to_string())
}

fn ac4_dominance() -> Check {
    let seq = dominant_sequence();
    let coverage: Vec<f64> = seq.labels.iter().map(|l| l.iter().filter(|&&b| b == 3).count() as f64 / l.len() as f64).collect();

    let mut p = Pipeline::new(PipelineParams::default());
    let mut poses = vec![Pose::identity()];
    for f in &seq.flows_gt {
        poses.push(p.process_flow(f.clone()).pose_world);
    }
    let gt_rpe = rpe_of(seq, &poses)?;

    let mut p = Pipeline::new(PipelineParams::default());
    let poses: Vec<Pose> = seq.gray.iter().zip(&seq.depth).map(|(g, d)| p.process_frame(g.clone(), d.clone()).pose_world).collect();
    let tracked_rpe = rpe_of(seq, &poses)?;

    let after: f64 = coverage[11..].iter().copied().fold(f64::INFINITY, f64::min);
    ensure(
        after >= 0.55 && gt_rpe < 5e-3 && tracked_rpe < 2e-2,
        format!(
            "object coverage {:.0}% at frame 0, >= {:.0}% after frame 10; RPE {gt_rpe:.2e} m/s with ground-truth flow (< 5e-3), {tracked_rpe:.2e} m/s with tracked flow (< 2e-2)",
            coverage[0] * 100.0,
            after * 100.0
        ),
    )
}

/// Frame at which a cell that saw `object` for `moving` frames and then
/// `background` swaps its modal label back, by the update rule written out
/// with two labels: `p <- (a p + [l == x]) / (a + 1)`, `a <- min(a + 1, alpha)`.
fn hand_trace(moving: usize, alpha: f64) -> usize {
    // (p_object, age) for apparent and candidate
    let mut apparent = (1.0, 1.0);
    let mut candidate: Option<(f64, f64)> = None;
    let absorb = |m: (f64, f64), object: bool| {
        let (p, a) = m;
        ((a * p + if object { 1.0 } else { 0.0 }) / (a + 1.0), (a + 1.0).min(alpha))
    };
    for _ in 2..=moving {
        apparent = absorb(apparent, true);
    }
    let mut k = moving;
    loop {
        k += 1;
        // measurement: background, apparent mode: object
        let c = match candidate {
            None => (0.0, 1.0),
            Some(c) => absorb(c, false),
        };
        if c.1 >= alpha || c.1 > apparent.1 {
            return k;
        }
        candidate = Some(c);
    }
}

fn ac5_stop_and_go() -> Check {
    let stop = 20;
    let alpha = 5.0;
    let expected = hand_trace(stop, alpha);

    // the library's update rule on one cell
    let mut cell = vec![DualModeCell::default()];
    let mut lib_swap = None;
    for k in 1..=stop + 10 {
        let m = if k <= stop { 2 } else { 1 };
        update_models(&mut cell, &[m], 15, alpha);
        if k > stop && lib_swap.is_none() && cell[0].apparent.as_ref().map(LabelModel::modal_label) == Some(1) {
            lib_swap = Some(k);
        }
    }

    // the full pipeline on a rendered scene
    let seq = render_sequence(&presets::stop_and_go(stop + 12, stop)).map_err(|e| e.to_string())?;
    let box_label = 3;
    let mut p = Pipeline::new(PipelineParams::default());
    let mut settled: Option<usize> = None;
    for (i, f) in seq.flows_gt.iter().enumerate() {
        let k = i + 1;
        let r = p.process_flow(f.clone());
        let s = r.diagnostics.static_label;
        // labels after pair k live on frame k - 1's grid
        let box_cells: Vec<usize> = (0..f.len()).filter(|&c| seq.labels[k - 1][c] == box_label && f.valid[c]).collect();
        let all_static = !box_cells.is_empty() && box_cells.iter().all(|&c| r.labels.labels[c] == s);
        match (all_static, settled) {
            (true, None) if k > stop => settled = Some(k),
            (false, Some(_)) => settled = None,
            _ => {}
        }
    }
    let delay = settled.map(|k| k - stop);
    ensure(
        lib_swap == Some(expected) && delay.is_some_and(|d| d as f64 <= alpha + 1.0),
        format!(
            "hand trace swaps at frame {expected}, update rule at {lib_swap:?}; pipeline returns all box cells to the static label {delay:?} frames after the stop (<= 6)"
        ),
    )
}

fn ac6_conservation() -> Check {
    let (cols, rows, w) = (40, 30, 16);
    let n_obj = 15;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let random_model = |rng: &mut ChaCha8Rng| {
        let raw: Vec<f64> = (0..n_obj).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = raw.iter().sum();
        LabelModel {
            p: raw.iter().map(|v| v / s).collect(),
            age: rng.random_range(0.5..3.0),
        }
    };
    let mut cells: Vec<DualModeCell> = (0..cols * rows)
        .map(|_| DualModeCell {
            apparent: Some(random_model(&mut rng)),
            candidate: rng.random_bool(0.3).then(|| random_model(&mut rng)),
        })
        .collect();
    let total_age = |cells: &[DualModeCell]| -> f64 {
        cells.iter().flat_map(|c| [&c.apparent, &c.candidate]).flatten().map(|m| m.age).sum()
    };
    let initial = total_age(&cells);
    let (mut worst_drift, mut worst_sum) = (0.0f64, 0.0f64);
    let span = |x: f64, n: usize| (x - w as f64 / 2.0) / ((n - 1) * w) as f64;
    for _ in 0..100 {
        // smooth field vanishing on the border cells, so footprints stay in the grid
        let (ax, ay) = (rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let (kx, ky) = (rng.random_range(1..=2) as f64, rng.random_range(1..=2) as f64);
        let mut flow = GridFlowField::empty(cols, rows, w);
        for i in 0..flow.len() {
            let c = flow.pixels_prev[i];
            let (u, v) = (span(c.x, cols), span(c.y, rows));
            let bump = (kx * std::f64::consts::PI * u).sin() * (ky * std::f64::consts::PI * v).sin();
            flow.pixels_curr[i] = c + Vector2::new(ax * bump, ay * bump.abs());
            flow.valid[i] = true;
        }
        // age clamping disabled: conservation is a property of the transport
        cells = compensate_models(&cells, &flow, f64::INFINITY);
        worst_drift = worst_drift.max((total_age(&cells) - initial).abs());
        for m in cells.iter().flat_map(|c| [&c.apparent, &c.candidate]).flatten() {
            worst_sum = worst_sum.max((m.p.iter().sum::<f64>() - 1.0).abs());
        }
    }
    ensure(
        worst_drift <= 1e-6 && worst_sum <= 1e-9,
        format!("total age {initial:.6}, max drift {worst_drift:.1e} over 100 frames; max |sum P - 1| = {worst_sum:.1e}"),
    )
}

fn ac7_rpe_oracle() -> Check {
    let n = 40;
    let dt = 0.1;
    let line = |v: f64, wz: f64| {
        Trajectory::new(
            (0..n)
                .map(|k| {
                    let t = k as f64 * dt;
                    (t, Pose::from_axis_angle(Vector3::new(0.0, 0.0, wz * t), Vector3::new(v * t, 0.3 * t, 1.0)))
                })
                .collect(),
        )
        .unwrap()
    };
    let gt = line(0.5, 0.2);
    // identical: 0; rigid world offset: 0; world-frame drift of d m/s:
    // the interval error is gt_j^-1 T(d dt) gt_j, a translation of norm d dt
    let offset = Pose::from_axis_angle(Vector3::new(0.3, -0.2, 0.1), Vector3::new(1.0, 2.0, -0.5));
    let drift = 0.05;
    let drifting = Trajectory::new(
        gt.samples()
            .iter()
            .map(|(t, p)| (*t, Pose::from_translation(Vector3::new(0.6, -0.8, 0.0) * (drift * t)) * *p))
            .collect(),
    )
    .unwrap();
    let cases = [
        ("identical", gt.clone(), 0.0),
        ("offset", gt.left_multiplied(&offset), 0.0),
        ("drift", drifting, drift),
    ];
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (name, est, analytic) in cases {
        let r = relative_pose_error(&est, &gt, 1.0).map_err(|e| e.to_string())?;
        let dev = r.intervals.iter().map(|i| (i.error - analytic).abs()).fold((r.rmse - analytic).abs(), f64::max);
        worst = worst.max(dev);
        details.push(format!("{name} {:.3e} ({} intervals)", r.rmse, r.intervals.len()));
    }
    ensure(worst <= 1e-9, format!("{}; max deviation {worst:.1e}", details.join(", ")))
}

fn write_dataset(spec: &dynvo::synth::SceneSpec, dir: &std::path::Path) -> Result<(), String> {
    let seq = render_sequence(spec).map_err(|e| e.to_string())?;
    write_sequence(&seq, spec, dir).map_err(|e| e.to_string())
}

fn ac8_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    write_dataset(&presets::stop_and_go(10, 6), &data)?;
    let ds = Dataset::open(&data).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::load(data.join("config.txt")).map_err(|e| e.to_string())?;
    cfg.seed = 42;
    let mut outputs: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
    for i in 0..3 {
        let out = tmp.path().join(format!("out{i}"));
        run(&ds, &cfg, &out).map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        files.insert("trajectory.txt".to_string(), std::fs::read(out.join("trajectory.txt")).map_err(|e| e.to_string())?);
        for e in std::fs::read_dir(out.join("segmentation")).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            files.insert(p.file_name().unwrap().to_string_lossy().into(), std::fs::read(&p).map_err(|e| e.to_string())?);
        }
        outputs.push(files);
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    ensure(same && outputs[0].len() == 10, format!("{} files compared across 3 runs, identical: {same}", outputs[0].len()))
}

fn ac9_throughput() -> Check {
    let seq = dominant_sequence();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.002).unwrap();
    let mut p = Pipeline::new(PipelineParams::default());
    let mut times = Vec::new();
    for f in &seq.flows_gt {
        let mut f = f.clone();
        for i in 0..f.len() {
            if f.valid[i] {
                f.points_curr[i] += Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
            }
        }
        let t = Instant::now();
        p.process_flow(f);
        times.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let m = median(&times);
    let cells = seq.flows_gt[0].len();
    ensure(m <= 50.0, format!("{cells} cells, median {m:.2} ms per frame over {} frames (<= 50)", times.len()))
}

fn ac10_tum() -> Option<Check> {
    let dir = std::env::var_os("TUM_FR1_XYZ")?;
    Some((|| {
        let ds = Dataset::open(&dir).map_err(|e| e.to_string())?;
        if ds.ground_truth.is_none() {
            return Err("groundtruth.txt missing".into());
        }
        // fr1 calibration
        let mut cfg = RunConfig::default();
        (cfg.fx, cfg.fy, cfg.cx, cfg.cy) = (517.3, 516.5, 318.6, 255.3);
        cfg.flow_source = FlowSource::Computed;
        let s = execute(&ds, &cfg, |_, _| Ok(())).map_err(|e| e.to_string())?;
        let r = relative_pose_error(&s.trajectory, ds.ground_truth.as_ref().unwrap(), 1.0).map_err(|e| e.to_string())?;
        ensure(
            r.rmse <= 0.06,
            format!("{} frames, RPE {:.4} m/s (<= 0.06), median {:.1} ms/frame", ds.len(), r.rmse, s.timing.median_total),
        )
    })())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("rigid fit oracle", ac1_rigid_fit),
        ("entropy unit check", ac2_entropy_unit),
        ("two-body segmentation", ac3_two_body),
        ("dominance robustness", ac4_dominance),
        ("stop-and-go swap", ac5_stop_and_go),
        ("compensation conservation", ac6_conservation),
        ("RPE metric cross-check", ac7_rpe_oracle),
        ("determinism", ac8_determinism),
        ("throughput", ac9_throughput),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("AC{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|x| id.eq_ignore_ascii_case(x)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("{id} PASS {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("{id} FAIL {name}: {d} [{secs:.1} s]");
            }
        }
    }
    if filter.is_empty() || filter.iter().any(|x| x.eq_ignore_ascii_case("AC10")) {
        match ac10_tum() {
            None => println!("AC10 SKIP TUM fr1/xyz: set TUM_FR1_XYZ to the dataset directory (optional, not gating)"),
            Some(Ok(d)) => println!("AC10 PASS TUM fr1/xyz: {d}"),
            Some(Err(d)) => println!("AC10 FAIL TUM fr1/xyz (not gating): {d}"),
        }
    }
    if failed > 0 {
        println!("{failed} gating criteria failed");
        std::process::exit(1);
    }
}
