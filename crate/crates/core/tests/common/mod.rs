//! Shared test helpers: an independent brute-force descriptor oracle and
//! synthetic scene generators.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use lssbg::imaging::{pad_replicate, to_grayscale, BinaryMask, Frame};
use lssbg::lss::LssParams;

/// Direct nested-loop implementation of the descriptor pipeline, written
/// from the defining formulas and independent of the production path.
/// Returns one descriptor per pixel, row-major.
pub fn oracle_descriptor_grid(frame: &Frame, params: &LssParams<f64>) -> Vec<Vec<f64>> {
    let p = params.patch_size as i64;
    let r = params.region_radius as i64;
    let h = (p - 1) / 2;
    let b = (r + p) as usize;
    let pad = b - b % 3;

    let gray = to_grayscale(frame).unwrap();
    let g = pad_replicate(&gray, pad);
    let gw = g.width as i64;
    let at = |x: i64, y: i64| -> f64 { g.pixels[(y * gw + x) as usize] as f64 };

    let ssd = |cx: i64, cy: i64, dx: i64, dy: i64| -> f64 {
        let mut acc = 0.0;
        for v in -h..=h {
            for u in -h..=h {
                let d = at(cx + u, cy + v) - at(cx + dx + u, cy + dy + v);
                acc += d * d;
            }
        }
        acc
    };

    let len = params.angle_bins * params.radial_bins;
    let ln = ((r + 1) as f64).ln();
    let edge = |k: usize| (k as f64 * ln / params.radial_bins as f64).exp() - 1.0;
    let angle_width = 2.0 * PI / params.angle_bins as f64;

    let mut out = Vec::with_capacity(frame.width * frame.height);
    for oy in 0..frame.height {
        for ox in 0..frame.width {
            let cx = (ox + pad) as i64;
            let cy = (oy + pad) as i64;

            let mut auto: f64 = 0.0;
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if (dx, dy) != (0, 0) {
                        auto = auto.max(ssd(cx, cy, dx, dy));
                    }
                }
            }
            let var = params.noise_variance.max(auto);

            let mut bins = vec![f64::NEG_INFINITY; len];
            for dy in -r..=r {
                for dx in -r..=r {
                    if (dx, dy) == (0, 0) || dx * dx + dy * dy > r * r {
                        continue;
                    }
                    let value = (-ssd(cx, cy, dx, dy) / var).exp();
                    let rho = ((dx * dx + dy * dy) as f64).sqrt();
                    let mut radial = params.radial_bins - 1;
                    for k in 0..params.radial_bins {
                        if rho > edge(k) && rho <= edge(k + 1) {
                            radial = k;
                            break;
                        }
                    }
                    let mut theta = (dy as f64).atan2(dx as f64);
                    if theta < 0.0 {
                        theta += 2.0 * PI;
                    }
                    let angle =
                        ((theta / angle_width).floor() as usize).min(params.angle_bins - 1);
                    let bin = angle * params.radial_bins + radial;
                    bins[bin] = bins[bin].max(value);
                }
            }

            let filled: Vec<f64> = bins.iter().copied().filter(|v| v.is_finite()).collect();
            let min = filled.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = filled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let desc: Vec<f64> = bins
                .iter()
                .map(|v| {
                    if !v.is_finite() || max <= min {
                        0.0
                    } else {
                        (v - min) / (max - min) * params.component_scale
                    }
                })
                .collect();
            out.push(desc);
        }
    }
    out
}

pub fn random_gray_frame(rng: &mut StdRng, w: usize, h: usize) -> Frame {
    Frame::new(w, h, 1, (0..w * h).map(|_| rng.gen()).collect())
}

pub fn random_color_frame(rng: &mut StdRng, w: usize, h: usize) -> Frame {
    Frame::new(w, h, 3, (0..w * h * 3).map(|_| rng.gen()).collect())
}

pub fn random_mask(rng: &mut StdRng, w: usize, h: usize) -> BinaryMask {
    BinaryMask { width: w, height: h, bits: (0..w * h).map(|_| rng.gen()).collect() }
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Smooth random texture: a coarse random lattice bilinearly upsampled,
/// which gives the spatial correlation of natural images instead of
/// per-pixel white noise.
pub fn value_noise_texture(
    rng: &mut StdRng,
    w: usize,
    h: usize,
    cell: usize,
    lo: u8,
    hi: u8,
) -> Frame {
    let gw = w / cell + 2;
    let gh = h / cell + 2;
    let lattice: Vec<f64> = (0..gw * gh)
        .map(|_| rng.gen_range(lo as f64..hi as f64))
        .collect();
    let mut pixels = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let fx = x as f64 / cell as f64;
            let fy = y as f64 / cell as f64;
            let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
            let (tx, ty) = (fx.fract(), fy.fract());
            let v00 = lattice[y0 * gw + x0];
            let v10 = lattice[y0 * gw + x0 + 1];
            let v01 = lattice[(y0 + 1) * gw + x0];
            let v11 = lattice[(y0 + 1) * gw + x0 + 1];
            let v = v00 * (1.0 - tx) * (1.0 - ty)
                + v10 * tx * (1.0 - ty)
                + v01 * (1.0 - tx) * ty
                + v11 * tx * ty;
            let g = v.round() as i64;
            // Mildly decorrelated channels around the same luminance.
            pixels.push((g - 6).clamp(0, 255) as u8);
            pixels.push(g.clamp(0, 255) as u8);
            pixels.push((g + 6).clamp(0, 255) as u8);
        }
    }
    Frame::new(w, h, 3, pixels)
}

/// A textured color background plus a differently textured square object,
/// with per-frame uniform pixel noise. The synthetic scene used by the
/// detection and post-processing experiments.
pub struct SquareScene {
    pub background: Frame,
    pub object: Frame,
    pub object_size: usize,
}

impl SquareScene {
    pub fn new(rng: &mut StdRng, size: usize, object_size: usize) -> Self {
        // Values kept away from 0/255 so additive noise never clamps.
        let background = value_noise_texture(rng, size, size, 6, 50, 206);
        // Finer texture at a different scale so the object's local shape
        // differs from whatever background it covers.
        let object = value_noise_texture(rng, object_size, object_size, 2, 50, 206);
        SquareScene { background, object, object_size }
    }

    /// Background with +-`noise` uniform per-channel noise.
    pub fn background_frame(&self, rng: &mut StdRng, noise: i16) -> Frame {
        let pixels = self
            .background
            .pixels
            .iter()
            .map(|v| (*v as i16 + rng.gen_range(-noise..=noise)) as u8)
            .collect();
        Frame::new(self.background.width, self.background.height, 3, pixels)
    }

    /// Background (noisy) with the object pasted at (ox, oy), plus the
    /// ground-truth mask of the object.
    pub fn frame_with_object(
        &self,
        rng: &mut StdRng,
        noise: i16,
        ox: usize,
        oy: usize,
    ) -> (Frame, BinaryMask) {
        let mut frame = self.background_frame(rng, noise);
        let w = frame.width;
        let mut truth = BinaryMask::new_filled(w, frame.height, false);
        for y in 0..self.object_size {
            for x in 0..self.object_size {
                let src = (y * self.object_size + x) * 3;
                let dst = ((oy + y) * w + ox + x) * 3;
                frame.pixels[dst..dst + 3].copy_from_slice(&self.object.pixels[src..src + 3]);
                truth.set(ox + x, oy + y, true);
            }
        }
        (frame, truth)
    }
}

/// F-measure of a mask against a ground-truth mask (both plain booleans).
pub fn mask_fmeasure(mask: &BinaryMask, truth: &BinaryMask) -> f64 {
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fne = 0u64;
    for (m, t) in mask.bits.iter().zip(&truth.bits) {
        match (m, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fne) as f64;
    2.0 * precision * recall / (precision + recall)
}
