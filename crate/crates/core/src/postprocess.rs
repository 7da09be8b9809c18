//! Mask refinement: hole closing, core/border split, color test of the
//! border against the background model, and final cleanup.

use crate::error::{Error, Result};
use crate::imaging::{close, dilate, erode, BinaryMask, Frame, StructuringElement};
use crate::model::BackgroundModel;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct PostprocessConfig {
    /// Square SE radius of the hole-filling closing.
    pub close_radius: i64,
    /// Disk SE radius of the core erosion, sized against the ~r-pixel
    /// detection overestimate.
    pub erode_radius: i64,
    /// Disk SE radius of the border band, a size similar to the region
    /// radius of the descriptor.
    pub border_dilate_radius: i64,
    /// Color distance above which a border pixel stays foreground.
    pub color_threshold: f64,
    /// Square SE radius of the final erosion.
    pub final_erode_radius: i64,
    /// Square SE radius of the final closing.
    pub final_close_radius: i64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        PostprocessConfig {
            close_radius: 5,
            erode_radius: 10,
            border_dilate_radius: 20,
            color_threshold: 30.0,
            final_erode_radius: 1,
            final_close_radius: 2,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.close_radius < 0
            || self.erode_radius < 0
            || self.border_dilate_radius < 0
            || self.final_erode_radius < 0
            || self.final_close_radius < 0
        {
            return Err(Error::argument("postprocess radii must be >= 0"));
        }
        if self.color_threshold < 0.0 {
            return Err(Error::argument("color_threshold must be >= 0"));
        }
        Ok(())
    }
}

/// Eroded object interiors and the band around them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreBorder {
    pub core: BinaryMask,
    pub border: BinaryMask,
}

/// Closes the raw mask, erodes it into the core, and takes the band
/// between the dilated and the eroded objects as the border.
pub fn split_core_border(raw: &BinaryMask, cfg: &PostprocessConfig) -> Result<CoreBorder> {
    cfg.validate()?;
    let closed = close(raw, &StructuringElement::square(cfg.close_radius));
    let core = erode(&closed, &StructuringElement::disk(cfg.erode_radius));
    let dilated = dilate(&core, &StructuringElement::disk(cfg.border_dilate_radius));
    let border_bits = dilated
        .bits
        .iter()
        .zip(&core.bits)
        .map(|(d, c)| *d && !*c)
        .collect();
    let border = BinaryMask { width: raw.width, height: raw.height, bits: border_bits };
    Ok(CoreBorder { core, border })
}

/// Keeps only the border pixels whose color is far from the model's stored
/// background color. Grayscale frames compare on the single channel.
pub fn refine_border<R: Real>(
    border: &BinaryMask,
    frame: &Frame,
    model: &BackgroundModel<R>,
    cfg: &PostprocessConfig,
) -> Result<BinaryMask> {
    cfg.validate()?;
    if border.width != frame.width
        || border.height != frame.height
        || frame.width != model.width
        || frame.height != model.height
    {
        return Err(Error::argument("border, frame and model dimensions must agree"));
    }
    let mut out = BinaryMask::new_filled(border.width, border.height, false);
    for y in 0..border.height {
        for x in 0..border.width {
            if !border.get(x, y) {
                continue;
            }
            let bg = model.color(x, y);
            let d = match frame.channels {
                1 => (f64::from(frame.gray(x, y)) - f64::from(bg[0])).abs(),
                _ => {
                    let p = frame.pixel(x, y);
                    (0..3)
                        .map(|c| {
                            let d = f64::from(p[c]) - f64::from(bg[c]);
                            d * d
                        })
                        .sum::<f64>()
                        .sqrt()
                }
            };
            out.set(x, y, d > cfg.color_threshold);
        }
    }
    Ok(out)
}

/// Full refinement: core plus color-accepted border, then a final erosion
/// and closing over the combined mask.
pub fn postprocess<R: Real>(
    raw: &BinaryMask,
    frame: &Frame,
    model: &BackgroundModel<R>,
    cfg: &PostprocessConfig,
) -> Result<BinaryMask> {
    let CoreBorder { core, border } = split_core_border(raw, cfg)?;
    let refined = refine_border(&border, frame, model, cfg)?;
    let combined = core.or(&refined);
    let eroded = erode(&combined, &StructuringElement::square(cfg.final_erode_radius));
    Ok(close(&eroded, &StructuringElement::square(cfg.final_close_radius)))
}
