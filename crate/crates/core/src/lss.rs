//! The Local Self-Similarity descriptor.
//!
//! For every pixel, a small patch is correlated (by SSD) against every
//! offset of a larger surrounding region. The resulting correlation surface
//! `exp(-SSD / max(noise_var, auto_var))` is binned into a log-polar grid
//! (angle × radial intervals, aggregated by max) and linearly stretched to
//! `[0, component_scale]`.
//!
//! [`compute_descriptor_grid`] is the production path: per displacement it
//! builds a summed-area table of squared pixel differences, so the patch
//! SSD for every center is a single box query. [`similarity_surface`] is
//! the plain nested-loop formulation and serves as the reference for it.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{pad_replicate, to_grayscale, Frame};
use crate::real::Real;

/// Parameters of the descriptor. Defaults follow the usual dense-LSS
/// configuration: 5×5 patch inside a 41×41 region, 20 angles × 4 radial
/// intervals, components on a 0–255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LssParams<R> {
    /// Patch side `p`, odd and ≥ 3.
    pub patch_size: usize,
    /// Region radius `r`; the correlation surface has side `2r+1`.
    pub region_radius: usize,
    pub angle_bins: usize,
    pub radial_bins: usize,
    /// Lower bound on the normalization variance. Default `25·p²`,
    /// i.e. ~5 gray levels of photometric noise per patch pixel.
    pub noise_variance: R,
    /// Upper end of the stretched component range.
    pub component_scale: R,
}

impl<R: Real> Default for LssParams<R> {
    fn default() -> Self {
        LssParams {
            patch_size: 5,
            region_radius: 20,
            angle_bins: 20,
            radial_bins: 4,
            noise_variance: R::from_f64_lossy(25.0 * 25.0),
            component_scale: R::from_f64_lossy(255.0),
        }
    }
}

impl<R: Real> LssParams<R> {
    pub fn descriptor_len(&self) -> usize {
        self.angle_bins * self.radial_bins
    }

    pub fn surface_side(&self) -> usize {
        2 * self.region_radius + 1
    }

    /// Half patch side, `(p-1)/2`.
    pub fn patch_half(&self) -> usize {
        (self.patch_size - 1) / 2
    }

    pub fn padding(&self) -> usize {
        padding_size(self.region_radius, self.patch_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_size < 3 || self.patch_size % 2 == 0 {
            return Err(Error::argument(format!(
                "patch_size must be odd and >= 3, got {}",
                self.patch_size
            )));
        }
        if self.region_radius < self.patch_half() + 1 {
            return Err(Error::argument(format!(
                "region_radius {} too small for patch_size {}",
                self.region_radius, self.patch_size
            )));
        }
        if self.angle_bins == 0 || self.radial_bins == 0 {
            return Err(Error::argument("angle_bins and radial_bins must be >= 1"));
        }
        if self.noise_variance < R::zero() {
            return Err(Error::argument("noise_variance must be >= 0"));
        }
        if self.component_scale <= R::zero() {
            return Err(Error::argument("component_scale must be > 0"));
        }
        Ok(())
    }
}

/// Padding border width: `b - b % 3` with `b = r + p`.
pub fn padding_size(region_radius: usize, patch_size: usize) -> usize {
    let b = region_radius + patch_size;
    b - b % 3
}

/// One descriptor, owned. Grids store components flat; this type is used
/// where a descriptor stands alone (cluster representatives).
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarityDescriptor<R> {
    pub components: Vec<R>,
}

impl<R> std::ops::Deref for SelfSimilarityDescriptor<R> {
    type Target = [R];
    fn deref(&self) -> &[R] {
        &self.components
    }
}

/// Dense per-pixel descriptors of a frame, dimensions of the unpadded frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorGrid<R> {
    pub width: usize,
    pub height: usize,
    pub descriptor_len: usize,
    data: Vec<R>,
}

impl<R: Real> DescriptorGrid<R> {
    #[inline]
    pub fn descriptor(&self, x: usize, y: usize) -> &[R] {
        let i = (y * self.width + x) * self.descriptor_len;
        &self.data[i..i + self.descriptor_len]
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &[R]> {
        self.data.chunks_exact(self.descriptor_len)
    }
}

/// Euclidean distance between two descriptors.
pub fn descriptor_distance<R: Real>(a: &[R], b: &[R]) -> Result<R> {
    if a.len() != b.len() {
        return Err(Error::argument(format!(
            "descriptor length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let sum: R = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = *x - *y;
            d * d
        })
        .sum();
    Ok(sum.sqrt())
}

/// Precomputed cell → log-polar bin mapping. Pure geometry: identical for
/// all pixels and all images under fixed parameters.
#[derive(Debug, Clone)]
pub struct LogPolarBinning {
    side: usize,
    descriptor_len: usize,
    /// Bin of each surface cell in row-major (dy, dx) order; `None` for the
    /// center cell and cells beyond the region radius.
    cell_bin: Vec<Option<usize>>,
    /// Bins that receive at least one cell. The rest are structurally empty
    /// and stay exactly 0 in every descriptor.
    occupied: Vec<bool>,
}

impl LogPolarBinning {
    pub fn new<R: Real>(params: &LssParams<R>) -> Self {
        let r = params.region_radius as i64;
        let side = params.surface_side();
        let descriptor_len = params.descriptor_len();
        let edges = radial_edges(params.region_radius, params.radial_bins);
        let angle_width = 2.0 * PI / params.angle_bins as f64;

        let mut cell_bin = Vec::with_capacity(side * side);
        let mut occupied = vec![false; descriptor_len];
        for dy in -r..=r {
            for dx in -r..=r {
                let bin = if (dx, dy) == (0, 0) || dx * dx + dy * dy > r * r {
                    None
                } else {
                    let rho = ((dx * dx + dy * dy) as f64).sqrt();
                    let mut radial = params.radial_bins - 1;
                    for k in 0..params.radial_bins {
                        if rho <= edges[k + 1] {
                            radial = k;
                            break;
                        }
                    }
                    let mut theta = (dy as f64).atan2(dx as f64);
                    if theta < 0.0 {
                        theta += 2.0 * PI;
                    }
                    let angle = ((theta / angle_width).floor() as usize).min(params.angle_bins - 1);
                    Some(angle * params.radial_bins + radial)
                };
                if let Some(b) = bin {
                    occupied[b] = true;
                }
                cell_bin.push(bin);
            }
        }
        LogPolarBinning { side, descriptor_len, cell_bin, occupied }
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }

    /// Binned cells as (dx, dy, bin) triples.
    pub fn cells(&self) -> Vec<(i64, i64, usize)> {
        let r = (self.side as i64 - 1) / 2;
        let mut out = Vec::new();
        for (i, bin) in self.cell_bin.iter().enumerate() {
            if let Some(b) = bin {
                let dy = (i / self.side) as i64 - r;
                let dx = (i % self.side) as i64 - r;
                out.push((dx, dy, *b));
            }
        }
        out
    }

    /// Max-aggregates a correlation surface into the log-polar bins.
    pub fn bin<R: Real>(&self, surface: &[R]) -> Result<Vec<R>> {
        if surface.len() != self.side * self.side {
            return Err(Error::argument(format!(
                "surface length {} does not match side {}",
                surface.len(),
                self.side
            )));
        }
        let mut bins = vec![R::zero(); self.descriptor_len];
        for (value, bin) in surface.iter().zip(&self.cell_bin) {
            if let Some(b) = bin {
                if *value > bins[*b] {
                    bins[*b] = *value;
                }
            }
        }
        Ok(bins)
    }

    /// Linearly maps `[min, max]` over the occupied bins onto
    /// `[0, scale]`; degenerate range maps to all zeros. Structurally
    /// empty bins stay 0.
    pub fn stretch<R: Real>(&self, pre: &[R], scale: R) -> Vec<R> {
        let mut min = R::infinity();
        let mut max = R::neg_infinity();
        for (v, occ) in pre.iter().zip(&self.occupied) {
            if *occ {
                min = min.min(*v);
                max = max.max(*v);
            }
        }
        let range = max - min;
        pre.iter()
            .zip(&self.occupied)
            .map(|(v, occ)| {
                if *occ && range > R::zero() {
                    (*v - min) / range * scale
                } else {
                    R::zero()
                }
            })
            .collect()
    }
}

/// Radial bin edges `R_k = (r+1)^(k/radial_bins) - 1` for `k = 0..=radial_bins`.
pub fn radial_edges(region_radius: usize, radial_bins: usize) -> Vec<f64> {
    let ln = ((region_radius + 1) as f64).ln();
    (0..=radial_bins)
        .map(|k| (k as f64 * ln / radial_bins as f64).exp() - 1.0)
        .collect()
}

/// Correlation surface around a center pixel of a padded grayscale frame,
/// row-major over offsets `(dx, dy)` with `|dx|, |dy| ≤ r`.
///
/// This is the defining nested-loop formulation; the grid computation must
/// agree with it.
pub fn similarity_surface<R: Real>(
    g: &Frame,
    cx: usize,
    cy: usize,
    params: &LssParams<R>,
) -> Result<Vec<R>> {
    params.validate()?;
    if g.channels != 1 {
        return Err(Error::argument("similarity_surface requires a grayscale frame"));
    }
    let r = params.region_radius as i64;
    let h = params.patch_half() as i64;
    let (cx, cy) = (cx as i64, cy as i64);
    let reach = r + h;
    if cx < reach
        || cy < reach
        || cx + reach >= g.width as i64
        || cy + reach >= g.height as i64
    {
        return Err(Error::argument(format!(
            "neighborhood of ({cx},{cy}) exceeds the {}x{} frame; pad first",
            g.width, g.height
        )));
    }

    let ssd = |dx: i64, dy: i64| -> u64 {
        let mut acc = 0u64;
        for v in -h..=h {
            for u in -h..=h {
                let a = g.gray((cx + u) as usize, (cy + v) as usize) as i64;
                let b = g.gray((cx + dx + u) as usize, (cy + dy + v) as usize) as i64;
                acc += ((a - b) * (a - b)) as u64;
            }
        }
        acc
    };

    // Auto variance: the sharpest local SSD among the immediate neighbors.
    let mut auto = 0u64;
    for dy in -1..=1i64 {
        for dx in -1..=1i64 {
            if (dx, dy) != (0, 0) {
                auto = auto.max(ssd(dx, dy));
            }
        }
    }
    let var = params.noise_variance.max(R::from_u64_lossy(auto));

    let mut surface = Vec::with_capacity((2 * r as usize + 1).pow(2));
    for dy in -r..=r {
        for dx in -r..=r {
            let s = R::from_u64_lossy(ssd(dx, dy));
            surface.push((-s / var).exp());
        }
    }
    Ok(surface)
}

/// Log-polar binning of one correlation surface (pre-stretch descriptor).
pub fn bin_log_polar<R: Real>(surface: &[R], params: &LssParams<R>) -> Result<Vec<R>> {
    LogPolarBinning::new(params).bin(surface)
}

/// Stretches a pre-stretch descriptor to `[0, component_scale]`.
pub fn stretch<R: Real>(pre: &[R], params: &LssParams<R>) -> Vec<R> {
    LogPolarBinning::new(params).stretch(pre, params.component_scale)
}

/// Summed-area table of squared differences between a grayscale image and
/// itself shifted by (dx, dy); out-of-bounds partners contribute 0, which
/// valid patch queries never touch.
fn fill_diff_sat(g: &Frame, dx: i64, dy: i64, sat: &mut [u64]) {
    let (w, h) = (g.width, g.height);
    let stride = w + 1;
    debug_assert_eq!(sat.len(), stride * (h + 1));
    for v in sat[..stride].iter_mut() {
        *v = 0;
    }
    for y in 0..h {
        let row = (y + 1) * stride;
        sat[row] = 0;
        let sy = y as i64 + dy;
        for x in 0..w {
            let sx = x as i64 + dx;
            let d = if sx >= 0 && sx < w as i64 && sy >= 0 && sy < h as i64 {
                let a = g.gray(x, y) as i64;
                let b = g.gray(sx as usize, sy as usize) as i64;
                ((a - b) * (a - b)) as u64
            } else {
                0
            };
            sat[row + x + 1] = d + sat[row + x] + sat[row - stride + x + 1] - sat[row - stride + x];
        }
    }
}

#[inline]
fn sat_box(sat: &[u64], stride: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
    sat[(y1 + 1) * stride + x1 + 1] + sat[y0 * stride + x0]
        - sat[y0 * stride + x1 + 1]
        - sat[(y1 + 1) * stride + x0]
}

// Below this pixel count the rayon fan-out costs more than it saves.
const PARALLEL_MIN_PIXELS: usize = 1 << 14;

/// Computes the descriptor of every pixel of a frame.
///
/// Converts to grayscale, pads by [`padding_size`] with edge replication,
/// and evaluates surface → log-polar binning → stretch per pixel. The SSDs
/// are exact integer sums, so the result matches the nested-loop reference
/// to floating-point roundoff.
pub fn compute_descriptor_grid<R: Real>(f: &Frame, params: &LssParams<R>) -> Result<DescriptorGrid<R>> {
    params.validate()?;
    let gray = to_grayscale(f)?;
    let pad = params.padding();
    let padded = pad_replicate(&gray, pad);

    let (w, h) = (f.width, f.height);
    let half = params.patch_half();
    let len = params.descriptor_len();
    let binning = LogPolarBinning::new(params);
    let cells = binning.cells();

    let stride = padded.width + 1;
    let mut sat = vec![0u64; stride * (padded.height + 1)];

    // Patch box of the center at original coords (ox, oy).
    let box_at = |sat: &[u64], ox: usize, oy: usize| -> u64 {
        let cx = ox + pad;
        let cy = oy + pad;
        sat_box(sat, stride, cx - half, cy - half, cx + half, cy + half)
    };

    // Pass 1: per-pixel normalization variance from the 8 unit offsets.
    let mut auto = vec![0u64; w * h];
    for dy in -1..=1i64 {
        for dx in -1..=1i64 {
            if (dx, dy) == (0, 0) {
                continue;
            }
            fill_diff_sat(&padded, dx, dy, &mut sat);
            for oy in 0..h {
                for ox in 0..w {
                    let s = box_at(&sat, ox, oy);
                    let m = &mut auto[oy * w + ox];
                    *m = (*m).max(s);
                }
            }
        }
    }
    let vars: Vec<R> = auto
        .iter()
        .map(|a| params.noise_variance.max(R::from_u64_lossy(*a)))
        .collect();

    // Pass 2: accumulate the per-bin max of exp(-SSD/var), one binned
    // displacement at a time.
    let mut bins = vec![R::zero(); w * h * len];
    let parallel = w * h >= PARALLEL_MIN_PIXELS;
    for (dx, dy, bin) in cells {
        fill_diff_sat(&padded, dx, dy, &mut sat);
        let update_row = |(oy, row): (usize, &mut [R])| {
            for ox in 0..w {
                let s = R::from_u64_lossy(box_at(&sat, ox, oy));
                let value = (-s / vars[oy * w + ox]).exp();
                let slot = &mut row[ox * len + bin];
                if value > *slot {
                    *slot = value;
                }
            }
        };
        if parallel {
            bins.par_chunks_mut(w * len).enumerate().for_each(update_row);
        } else {
            bins.chunks_mut(w * len).enumerate().for_each(update_row);
        }
    }

    // Pass 3: stretch each descriptor in place.
    let stretch_row = |row: &mut [R]| {
        for d in row.chunks_mut(len) {
            let stretched = binning.stretch(d, params.component_scale);
            d.copy_from_slice(&stretched);
        }
    };
    if parallel {
        bins.par_chunks_mut(w * len).for_each(stretch_row);
    } else {
        bins.chunks_mut(w * len).for_each(stretch_row);
    }

    Ok(DescriptorGrid { width: w, height: h, descriptor_len: len, data: bins })
}
