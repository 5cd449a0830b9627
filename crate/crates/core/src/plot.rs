//! Static PNG plots: trajectories and per-frame label mosaics.

use std::path::Path;

use image::{Rgb, RgbImage};
use nalgebra::Vector3;

use crate::geometry::Trajectory;
use crate::image::{GrayImage, ImageIoError};
use crate::sceneflow::GridFlowField;

pub const ESTIMATE_COLOR: [u8; 3] = [214, 39, 40];
pub const GROUND_TRUTH_COLOR: [u8; 3] = [31, 119, 180];

const PALETTE: [[u8; 3]; 12] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [188, 189, 34],
    [23, 190, 207],
    [255, 187, 120],
    [152, 223, 138],
    [197, 176, 213],
];

/// Display color of a label; `None` for 0 (unknown).
pub fn label_color(label: u32) -> Option<[u8; 3]> {
    (label > 0).then(|| PALETTE[(label as usize - 1) % PALETTE.len()])
}

fn save(img: &RgbImage, path: &Path) -> Result<(), ImageIoError> {
    img.save(path).map_err(|source| ImageIoError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, Rgb(c));
    }
}

fn line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: [u8; 3], thick: bool) {
    let n = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for s in 0..=n {
        let t = s as f64 / n as f64;
        let x = (a.0 + t * (b.0 - a.0)).round() as i64;
        let y = (a.1 + t * (b.1 - a.1)).round() as i64;
        put(img, x, y, c);
        if thick {
            put(img, x + 1, y, c);
            put(img, x, y + 1, c);
            put(img, x + 1, y + 1, c);
        }
    }
}

/// Maps 2D data coordinates to pixels with equal scale on both axes.
struct Frame2 {
    min: (f64, f64),
    scale: f64,
    offset: (f64, f64),
    height: f64,
}

impl Frame2 {
    fn fit(points: &[(f64, f64)], width: u32, height: u32, margin: f64) -> Self {
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = (lo.0.min(p.0), lo.1.min(p.1));
            hi = (hi.0.max(p.0), hi.1.max(p.1));
        }
        if points.is_empty() {
            lo = (-1.0, -1.0);
            hi = (1.0, 1.0);
        }
        let span = ((hi.0 - lo.0).max(hi.1 - lo.1)).max(1e-3);
        let usable = (width.min(height) as f64) * (1.0 - 2.0 * margin);
        let scale = usable / span;
        let offset = (
            (width as f64 - (hi.0 - lo.0) * scale) / 2.0,
            (height as f64 - (hi.1 - lo.1) * scale) / 2.0,
        );
        Self {
            min: lo,
            scale,
            offset,
            height: height as f64,
        }
    }

    /// Pixel of a data point; data y grows upwards.
    fn px(&self, p: (f64, f64)) -> (f64, f64) {
        (
            self.offset.0 + (p.0 - self.min.0) * self.scale,
            self.height - (self.offset.1 + (p.1 - self.min.1) * self.scale),
        )
    }

    /// Light grid at a round spacing.
    fn grid(&self, img: &mut RgbImage) {
        let span = img.width().max(img.height()) as f64 / self.scale;
        let raw = span / 8.0;
        let step = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * step).find(|s| *s >= raw).unwrap_or(step * 10.0);
        let (w, h) = (img.width() as f64, img.height() as f64);
        let x0 = self.min.0 - self.offset.0 / self.scale;
        let y0 = self.min.1 - self.offset.1 / self.scale;
        let mut gx = (x0 / step).floor() * step;
        while gx <= x0 + w / self.scale {
            let x = self.px((gx, 0.0)).0;
            line(img, (x, 0.0), (x, h - 1.0), [225; 3], false);
            gx += step;
        }
        let mut gy = (y0 / step).floor() * step;
        while gy <= y0 + h / self.scale {
            let y = self.px((0.0, gy)).1;
            line(img, (0.0, y), (w - 1.0, y), [225; 3], false);
            gy += step;
        }
    }
}

fn canvas(width: u32, height: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, Rgb([255; 3]));
    let (w, h) = (width as f64 - 1.0, height as f64 - 1.0);
    for (a, b) in [((0.0, 0.0), (w, 0.0)), ((w, 0.0), (w, h)), ((w, h), (0.0, h)), ((0.0, h), (0.0, 0.0))] {
        line(&mut img, a, b, [0; 3], false);
    }
    img
}

fn draw_series(img: &mut RgbImage, frame: &Frame2, series: &[Vec<(f64, f64)>], colors: &[[u8; 3]]) {
    for (pts, c) in series.iter().zip(colors) {
        for w in pts.windows(2) {
            line(img, frame.px(w[0]), frame.px(w[1]), *c, true);
        }
        if let Some(p) = pts.first() {
            let (x, y) = frame.px(*p);
            for d in -3..=3 {
                put(img, x as i64 + d, y as i64, [0; 3]);
                put(img, x as i64, y as i64 + d, [0; 3]);
            }
        }
    }
}

fn positions(t: &Trajectory) -> Vec<Vector3<f64>> {
    t.samples().iter().map(|(_, p)| p.translation).collect()
}

/// Top-down view: x to the right, z (forward) upwards.
pub fn trajectory_top_down(series: &[(&Trajectory, [u8; 3])], width: u32, height: u32) -> RgbImage {
    let pts: Vec<Vec<(f64, f64)>> = series.iter().map(|(t, _)| positions(t).iter().map(|p| (p.x, p.z)).collect()).collect();
    plot_2d(&pts, &series.iter().map(|s| s.1).collect::<Vec<_>>(), width, height)
}

/// Oblique orthographic view from above and to the side. The camera frame
/// has y pointing down, so "up" is -y.
pub fn trajectory_oblique(series: &[(&Trajectory, [u8; 3])], width: u32, height: u32) -> RgbImage {
    let (az, el) = (35f64.to_radians(), 25f64.to_radians());
    let project = |p: &Vector3<f64>| {
        let sx = az.cos() * p.x - az.sin() * p.z;
        let depth = az.sin() * p.x + az.cos() * p.z;
        (sx, el.cos() * -p.y + el.sin() * depth)
    };
    let pts: Vec<Vec<(f64, f64)>> = series.iter().map(|(t, _)| positions(t).iter().map(project).collect()).collect();
    let mut img = plot_2d(&pts, &series.iter().map(|s| s.1).collect::<Vec<_>>(), width, height);
    // axis tripod in the corner: x red, y (up) green, z blue
    let o = Vector3::zeros();
    let origin = (40.0, height as f64 - 40.0);
    for (axis, c) in [
        (Vector3::x(), [200, 0, 0]),
        (-Vector3::y(), [0, 160, 0]),
        (Vector3::z(), [0, 0, 200]),
    ] {
        let a = project(&o);
        let b = project(&axis);
        line(&mut img, origin, (origin.0 + 25.0 * (b.0 - a.0), origin.1 - 25.0 * (b.1 - a.1)), c, true);
    }
    img
}

fn plot_2d(series: &[Vec<(f64, f64)>], colors: &[[u8; 3]], width: u32, height: u32) -> RgbImage {
    let all: Vec<(f64, f64)> = series.iter().flatten().copied().collect();
    let frame = Frame2::fit(&all, width, height, 0.08);
    let mut img = canvas(width, height);
    frame.grid(&mut img);
    draw_series(&mut img, &frame, series, colors);
    img
}

/// Writes `trajectory_top.png` and `trajectory_3d.png`. Ground truth, when
/// given, is aligned to the estimate's first pose.
pub fn write_trajectory_plots(estimate: &Trajectory, ground_truth: Option<&Trajectory>, dir: &Path) -> Result<(), ImageIoError> {
    let aligned = ground_truth.and_then(|gt| {
        let (t0, e0) = estimate.samples().first()?;
        let (_, g0) = gt.lookup(*t0, f64::INFINITY)?;
        Some(gt.left_multiplied(&(*e0 * g0.inverse())))
    });
    let mut series = vec![(estimate, ESTIMATE_COLOR)];
    if let Some(g) = &aligned {
        series.insert(0, (g, GROUND_TRUTH_COLOR));
    }
    save(&trajectory_top_down(&series, 800, 800), &dir.join("trajectory_top.png"))?;
    save(&trajectory_oblique(&series, 800, 800), &dir.join("trajectory_3d.png"))
}

fn tint(gray: &GrayImage, grid: &GridFlowField, color: impl Fn(usize) -> Option<[u8; 3]>) -> RgbImage {
    let mut img = RgbImage::from_fn(gray.width as u32, gray.height as u32, |x, y| Rgb([gray.get(x as usize, y as usize); 3]));
    let half = grid.cell_size as f64 / 2.0;
    for i in 0..grid.len() {
        let Some(c) = color(i) else { continue };
        let center = grid.cell_center(i);
        let x0 = (center.x - half + 0.5).max(0.0) as u32;
        let y0 = (center.y - half + 0.5).max(0.0) as u32;
        for y in y0..(y0 + grid.cell_size as u32).min(img.height()) {
            for x in x0..(x0 + grid.cell_size as u32).min(img.width()) {
                let p = img.get_pixel_mut(x, y);
                for ch in 0..3 {
                    p.0[ch] = ((p.0[ch] as u16 * 2 + c[ch] as u16 * 3) / 5) as u8;
                }
            }
        }
    }
    img
}

/// 2x2 mosaic: intensity, spatial segments, tracked labels, static cells.
pub fn label_mosaic(gray: &GrayImage, grid: &GridFlowField, segments: &[u32], labels: &[u32], static_mask: &[bool]) -> RgbImage {
    let (w, h) = (gray.width as u32, gray.height as u32);
    let tiles = [
        tint(gray, grid, |_| None),
        tint(gray, grid, |i| segments.get(i).and_then(|&s| label_color(s))),
        tint(gray, grid, |i| labels.get(i).and_then(|&l| label_color(l))),
        tint(gray, grid, |i| static_mask.get(i).and_then(|&s| s.then_some([44, 160, 44]))),
    ];
    let mut out = RgbImage::new(2 * w, 2 * h);
    for (t, tile) in tiles.iter().enumerate() {
        let (ox, oy) = ((t as u32 % 2) * w, (t as u32 / 2) * h);
        for (x, y, p) in tile.enumerate_pixels() {
            out.put_pixel(ox + x, oy + y, *p);
        }
    }
    out
}

pub fn save_mosaic(img: &RgbImage, path: &Path) -> Result<(), ImageIoError> {
    save(img, path)
}
