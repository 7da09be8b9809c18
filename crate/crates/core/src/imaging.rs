//! Frame I/O, grayscale conversion, replicate padding and binary morphology.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader};

use crate::error::{Error, Result};

/// 8-bit raster, 1 (grayscale) or 3 (RGB) channels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1);
        assert!(channels == 1 || channels == 3);
        assert_eq!(pixels.len(), width * height * channels);
        Frame { width, height, channels, pixels }
    }

    /// Channel values at (x, y); slice of length `channels`.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.pixels[i..i + self.channels]
    }

    /// Grayscale value at (x, y); only valid for single-channel frames.
    #[inline]
    pub fn gray(&self, x: usize, y: usize) -> u8 {
        debug_assert_eq!(self.channels, 1);
        self.pixels[y * self.width + x]
    }
}

/// Row-major boolean raster, `true` = foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new_filled(width: usize, height: usize, value: bool) -> Self {
        BinaryMask { width, height, bits: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Pixel-wise OR; panics on dimension mismatch.
    pub fn or(&self, other: &BinaryMask) -> BinaryMask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        BinaryMask { width: self.width, height: self.height, bits }
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !*b).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeShape {
    Disk,
    Square,
}

/// Flat structuring element: a disk or square of offsets around the origin.
#[derive(Debug, Clone)]
pub struct StructuringElement {
    pub shape: SeShape,
    pub radius: i64,
    offsets: Vec<(i64, i64)>,
}

impl StructuringElement {
    pub fn disk(radius: i64) -> Self {
        assert!(radius >= 0);
        let mut offsets = Vec::new();
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                if dx * dx + dy * dy <= radius * radius {
                    offsets.push((dx, dy));
                }
            }
        }
        StructuringElement { shape: SeShape::Disk, radius, offsets }
    }

    pub fn square(radius: i64) -> Self {
        assert!(radius >= 0);
        let mut offsets = Vec::new();
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                offsets.push((dx, dy));
            }
        }
        StructuringElement { shape: SeShape::Square, radius, offsets }
    }

    pub fn offsets(&self) -> &[(i64, i64)] {
        &self.offsets
    }
}

/// Decodes a PNG or JPEG file. Grayscale content yields a 1-channel frame,
/// anything with color 3 channels.
pub fn load_frame(path: &Path) -> Result<Frame> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let img = reader
        .decode()
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    Ok(match img {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            Frame::new(w as usize, h as usize, 1, g.into_raw())
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = rgb.dimensions();
            Frame::new(w as usize, h as usize, 3, rgb.into_raw())
        }
    })
}

/// Writes a mask as an 8-bit grayscale PNG, foreground = 255.
pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let data: Vec<u8> = mask.bits.iter().map(|b| if *b { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(mask.width as u32, mask.height as u32, data)
        .expect("mask buffer size");
    img.save(path)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

/// Reads a mask from an 8-bit grayscale PNG; any nonzero pixel is foreground.
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let frame = load_frame(path)?;
    let gray = to_grayscale(&frame)?;
    Ok(BinaryMask {
        width: gray.width,
        height: gray.height,
        bits: gray.pixels.iter().map(|p| *p != 0).collect(),
    })
}

/// ITU-R BT.601 luma conversion; 1-channel input passes through unchanged.
pub fn to_grayscale(f: &Frame) -> Result<Frame> {
    match f.channels {
        1 => Ok(f.clone()),
        3 => {
            let pixels = f
                .pixels
                .chunks_exact(3)
                .map(|p| {
                    let luma =
                        0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
                    luma.round() as u8
                })
                .collect();
            Ok(Frame::new(f.width, f.height, 1, pixels))
        }
        n => Err(Error::argument(format!("unsupported channel count {n}"))),
    }
}

/// Pads the frame on every side by `pad` pixels, replicating edge pixels.
pub fn pad_replicate(f: &Frame, pad: usize) -> Frame {
    if pad == 0 {
        return f.clone();
    }
    let (w, h, c) = (f.width, f.height, f.channels);
    let (nw, nh) = (w + 2 * pad, h + 2 * pad);
    let mut pixels = vec![0u8; nw * nh * c];
    for y in 0..nh {
        let sy = y.saturating_sub(pad).min(h - 1);
        for x in 0..nw {
            let sx = x.saturating_sub(pad).min(w - 1);
            let src = f.pixel(sx, sy);
            let dst = (y * nw + x) * c;
            pixels[dst..dst + c].copy_from_slice(src);
        }
    }
    Frame::new(nw, nh, c, pixels)
}

/// Crops the central `width`×`height` region; inverse of [`pad_replicate`].
pub fn center_crop(f: &Frame, width: usize, height: usize) -> Frame {
    assert!(width <= f.width && height <= f.height);
    let (ox, oy) = ((f.width - width) / 2, (f.height - height) / 2);
    let c = f.channels;
    let mut pixels = Vec::with_capacity(width * height * c);
    for y in 0..height {
        let src = ((y + oy) * f.width + ox) * c;
        pixels.extend_from_slice(&f.pixels[src..src + width * c]);
    }
    Frame::new(width, height, c, pixels)
}

/// out(p) is true iff every SE offset lands on a true pixel; out-of-bounds
/// neighbors count as false.
pub fn erode(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = (m.width as i64, m.height as i64);
    let mut out = BinaryMask::new_filled(m.width, m.height, false);
    for y in 0..h {
        for x in 0..w {
            let all = se.offsets().iter().all(|&(dx, dy)| {
                let (nx, ny) = (x + dx, y + dy);
                nx >= 0 && nx < w && ny >= 0 && ny < h && m.get(nx as usize, ny as usize)
            });
            out.set(x as usize, y as usize, all);
        }
    }
    out
}

/// out(p) is true iff some SE offset reaches a true pixel.
pub fn dilate(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (w, h) = (m.width as i64, m.height as i64);
    let mut out = BinaryMask::new_filled(m.width, m.height, false);
    for y in 0..h {
        for x in 0..w {
            let any = se.offsets().iter().any(|&(dx, dy)| {
                let (nx, ny) = (x - dx, y - dy);
                nx >= 0 && nx < w && ny >= 0 && ny < h && m.get(nx as usize, ny as usize)
            });
            out.set(x as usize, y as usize, any);
        }
    }
    out
}

/// Dilation followed by erosion.
pub fn close(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode(&dilate(m, se), se)
}
