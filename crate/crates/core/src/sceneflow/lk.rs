use nalgebra::Vector2;
use rayon::prelude::*;

use crate::image::GrayImage;

/// Pyramidal Lucas-Kanade settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkParams {
    /// Total pyramid levels, including full resolution.
    pub levels: usize,
    /// Odd window side in pixels.
    pub window: usize,
    pub max_iterations: usize,
    /// Update norm (pixels) below which an iteration has converged.
    pub epsilon: f64,
    /// Minimum eigenvalue of the per-pixel averaged structure tensor.
    pub min_eigenvalue: f64,
}

impl Default for LkParams {
    fn default() -> Self {
        Self {
            levels: 3,
            window: 21,
            max_iterations: 30,
            epsilon: 0.01,
            min_eigenvalue: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track {
    pub pixel: Vector2<f64>,
    pub converged: bool,
}

struct Level {
    width: usize,
    height: usize,
    img: Vec<f32>,
    gx: Vec<f32>,
    gy: Vec<f32>,
}

impl Level {
    fn new(width: usize, height: usize, img: Vec<f32>, with_gradients: bool) -> Self {
        let (gx, gy) = if with_gradients {
            scharr(&img, width, height)
        } else {
            (Vec::new(), Vec::new())
        };
        Self {
            width,
            height,
            img,
            gx,
            gy,
        }
    }

    #[inline]
    fn sample(buf: &[f32], width: usize, height: usize, x: f64, y: f64) -> f64 {
        let xc = x.clamp(0.0, (width - 1) as f64);
        let yc = y.clamp(0.0, (height - 1) as f64);
        let x0 = xc.floor() as usize;
        let y0 = yc.floor() as usize;
        let x1 = (x0 + 1).min(width - 1);
        let y1 = (y0 + 1).min(height - 1);
        let ax = xc - x0 as f64;
        let ay = yc - y0 as f64;
        let p00 = buf[y0 * width + x0] as f64;
        let p10 = buf[y0 * width + x1] as f64;
        let p01 = buf[y1 * width + x0] as f64;
        let p11 = buf[y1 * width + x1] as f64;
        (1.0 - ay) * ((1.0 - ax) * p00 + ax * p10) + ay * ((1.0 - ax) * p01 + ax * p11)
    }

    /// Bilinear samples of the `(2 half + 1)^2` window around `c`, row-major.
    /// Every sample shares the same interpolation weights, so windows that
    /// lie inside the image are read without clamping.
    fn window(buf: &[f32], width: usize, height: usize, c: Vector2<f64>, half: isize, out: &mut Vec<f64>) {
        out.clear();
        let fx = c.x.floor();
        let fy = c.y.floor();
        let inside = fx - half as f64 >= 0.0
            && fy - half as f64 >= 0.0
            && fx + (half + 1) as f64 <= (width - 1) as f64
            && fy + (half + 1) as f64 <= (height - 1) as f64;
        if !inside {
            for dy in -half..=half {
                for dx in -half..=half {
                    out.push(Self::sample(buf, width, height, c.x + dx as f64, c.y + dy as f64));
                }
            }
            return;
        }
        let (ax, ay) = (c.x - fx, c.y - fy);
        let (w00, w10, w01, w11) = ((1.0 - ax) * (1.0 - ay), ax * (1.0 - ay), (1.0 - ax) * ay, ax * ay);
        let x0 = (fx as isize - half) as usize;
        let side = (2 * half + 1) as usize;
        for r in 0..side {
            let y = (fy as isize - half) as usize + r;
            let top = &buf[y * width + x0..y * width + x0 + side + 1];
            let bot = &buf[(y + 1) * width + x0..(y + 1) * width + x0 + side + 1];
            for k in 0..side {
                out.push(w00 * top[k] as f64 + w10 * top[k + 1] as f64 + w01 * bot[k] as f64 + w11 * bot[k + 1] as f64);
            }
        }
    }
}

fn scharr(img: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>) {
    let mut gx = vec![0f32; w * h];
    let mut gy = vec![0f32; w * h];
    let at = |x: isize, y: isize| -> f32 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        img[yc * w + xc]
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            let dx = 3.0 * (at(x + 1, y - 1) - at(x - 1, y - 1))
                + 10.0 * (at(x + 1, y) - at(x - 1, y))
                + 3.0 * (at(x + 1, y + 1) - at(x - 1, y + 1));
            let dy = 3.0 * (at(x - 1, y + 1) - at(x - 1, y - 1))
                + 10.0 * (at(x, y + 1) - at(x, y - 1))
                + 3.0 * (at(x + 1, y + 1) - at(x + 1, y - 1));
            gx[(y as usize) * w + x as usize] = dx / 32.0;
            gy[(y as usize) * w + x as usize] = dy / 32.0;
        }
    }
    (gx, gy)
}

/// 5-tap binomial blur followed by 2x decimation.
fn pyr_down(img: &[f32], w: usize, h: usize) -> (Vec<f32>, usize, usize) {
    const K: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let mut tmp = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wk) in K.iter().enumerate() {
                let xx = (x as isize + k as isize - 2).clamp(0, w as isize - 1) as usize;
                acc += wk * img[y * w + xx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    let mut out = vec![0f32; nw * nh];
    for y in 0..nh {
        for x in 0..nw {
            let mut acc = 0.0;
            for (k, wk) in K.iter().enumerate() {
                let yy = (2 * y as isize + k as isize - 2).clamp(0, h as isize - 1) as usize;
                acc += wk * tmp[yy * w + 2 * x];
            }
            out[y * nw + x] = acc;
        }
    }
    (out, nw, nh)
}

fn pyramid(img: &GrayImage, levels: usize, with_gradients: bool) -> Vec<Level> {
    let mut out = Vec::with_capacity(levels);
    let mut cur: Vec<f32> = img.data.iter().map(|&v| v as f32).collect();
    let (mut w, mut h) = (img.width, img.height);
    for l in 0..levels {
        if l > 0 {
            let (next, nw, nh) = pyr_down(&cur, w, h);
            cur = next;
            w = nw;
            h = nh;
        }
        out.push(Level::new(w, h, cur.clone(), with_gradients));
    }
    out
}

/// Tracks each point from `prev` into `curr` with coarse-to-fine iterative
/// Lucas-Kanade. Failed tracks (flat texture, leaving the image, no
/// convergence at full resolution) come back with `converged = false`.
pub fn track_grid(prev: &GrayImage, curr: &GrayImage, points: &[Vector2<f64>], params: &LkParams) -> Vec<Track> {
    assert_eq!((prev.width, prev.height), (curr.width, curr.height), "image sizes differ");
    let levels = params.levels.max(1);
    let prev_pyr = pyramid(prev, levels, true);
    let curr_pyr = pyramid(curr, levels, false);
    points
        .par_iter()
        .map(|p| track_point(&prev_pyr, &curr_pyr, *p, params))
        .collect()
}

fn track_point(prev: &[Level], curr: &[Level], point: Vector2<f64>, params: &LkParams) -> Track {
    let half = (params.window / 2) as isize;
    let n = ((2 * half + 1) * (2 * half + 1)) as usize;
    let mut guess = Vector2::zeros();
    let mut converged = false;
    let mut patch = Vec::with_capacity(n);
    let mut grad_x = Vec::with_capacity(n);
    let mut grad_y = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);

    for level in (0..prev.len()).rev() {
        let lp = &prev[level];
        let lc = &curr[level];
        let scale = (1u32 << level) as f64;
        let p = point / scale;

        Level::window(&lp.img, lp.width, lp.height, p, half, &mut patch);
        Level::window(&lp.gx, lp.width, lp.height, p, half, &mut grad_x);
        Level::window(&lp.gy, lp.width, lp.height, p, half, &mut grad_y);
        let (mut gxx, mut gxy, mut gyy) = (0.0, 0.0, 0.0);
        for (ix, iy) in grad_x.iter().zip(&grad_y) {
            gxx += ix * ix;
            gxy += ix * iy;
            gyy += iy * iy;
        }
        let det = gxx * gyy - gxy * gxy;
        let tr = gxx + gyy;
        let min_eig = 0.5 * (tr - ((gxx - gyy).powi(2) + 4.0 * gxy * gxy).sqrt()) / n as f64;
        let level_ok = min_eig >= params.min_eigenvalue && det > f64::EPSILON;

        let mut nu = Vector2::zeros();
        let mut level_converged = false;
        if level_ok {
            for _ in 0..params.max_iterations {
                let q = p + guess + nu;
                if q.x < -1.0 || q.y < -1.0 || q.x > lc.width as f64 || q.y > lc.height as f64 {
                    break;
                }
                Level::window(&lc.img, lc.width, lc.height, q, half, &mut target);
                let (mut bx, mut by) = (0.0, 0.0);
                for k in 0..n {
                    let diff = patch[k] - target[k];
                    bx += diff * grad_x[k];
                    by += diff * grad_y[k];
                }
                let eta = Vector2::new(gyy * bx - gxy * by, gxx * by - gxy * bx) / det;
                nu += eta;
                if eta.norm() < params.epsilon {
                    level_converged = true;
                    break;
                }
            }
        }
        if level == 0 {
            converged = level_ok && level_converged;
            guess += nu;
        } else {
            guess = 2.0 * (guess + nu);
        }
    }

    let pixel = point + guess;
    let (w, h) = (prev[0].width as f64, prev[0].height as f64);
    let inside = pixel.x >= 0.0 && pixel.y >= 0.0 && pixel.x <= w - 1.0 && pixel.y <= h - 1.0;
    Track {
        pixel,
        converged: converged && inside && pixel.iter().all(|v| v.is_finite()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Smooth random texture: a sum of random sinusoids, sampled continuously
    /// so shifted copies are exact.
    fn texture(seed: u64) -> impl Fn(f64, f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves: Vec<(f64, f64, f64, f64)> = (0..12)
            .map(|_| {
                let f = rng.random_range(0.05..0.35);
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                (f * a.cos(), f * a.sin(), rng.random_range(0.0..6.28), rng.random_range(5.0..15.0))
            })
            .collect();
        move |x, y| 128.0 + waves.iter().map(|(kx, ky, ph, amp)| amp * (kx * x + ky * y + ph).sin()).sum::<f64>()
    }

    fn grid(w: usize, h: usize, step: usize) -> Vec<Vector2<f64>> {
        let mut pts = Vec::new();
        for y in (step / 2..h).step_by(step) {
            for x in (step / 2..w).step_by(step) {
                pts.push(Vector2::new(x as f64, y as f64));
            }
        }
        pts
    }

    #[test]
    fn identical_frames_track_in_place() {
        let tex = texture(1);
        let img = GrayImage::from_fn(160, 120, |x, y| tex(x as f64, y as f64).round() as u8);
        let pts = grid(160, 120, 16);
        let tracks = track_grid(&img, &img, &pts, &LkParams::default());
        for (t, p) in tracks.iter().zip(&pts) {
            assert!(t.converged);
            assert!((t.pixel - p).norm() < 1e-6);
        }
    }

    #[test]
    fn integer_shift_is_recovered() {
        let tex = texture(7);
        let prev = GrayImage::from_fn(200, 160, |x, y| tex(x as f64, y as f64).round() as u8);
        let curr = GrayImage::from_fn(200, 160, |x, y| tex(x as f64 - 5.0, y as f64 - 3.0).round() as u8);
        let pts = grid(200, 160, 16);
        let tracks = track_grid(&prev, &curr, &pts, &LkParams::default());
        let mut interior = 0;
        for (t, p) in tracks.iter().zip(&pts) {
            let is_interior = p.x > 20.0 && p.y > 20.0 && p.x < 180.0 && p.y < 140.0;
            if is_interior {
                interior += 1;
                assert!(t.converged, "track at {p:?} did not converge");
            }
            if t.converged && is_interior {
                let d = t.pixel - p;
                assert!((d - Vector2::new(5.0, 3.0)).norm() < 0.2, "{p:?} -> {d:?}");
            }
        }
        assert!(interior > 50);
    }

    #[test]
    fn flat_image_never_converges() {
        let img = GrayImage::from_fn(64, 64, |_, _| 90);
        let tracks = track_grid(&img, &img, &grid(64, 64, 16), &LkParams::default());
        assert!(tracks.iter().all(|t| !t.converged));
    }
}
