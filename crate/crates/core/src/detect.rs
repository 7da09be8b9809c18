//! Raw foreground detection: descriptor distance against the background
//! model, thresholded globally.

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, Frame};
use crate::lss::{compute_descriptor_grid, descriptor_distance, DescriptorGrid};
use crate::model::BackgroundModel;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig<R> {
    /// A pixel is foreground when its descriptor distance to the model is
    /// strictly above this.
    pub detect_threshold: R,
}

impl<R: Real> Default for DetectorConfig<R> {
    fn default() -> Self {
        DetectorConfig { detect_threshold: R::from_f64_lossy(30.0) }
    }
}

/// Thresholds the per-pixel descriptor distance between `frame` and the
/// model into a raw foreground mask.
pub fn detect_raw<R: Real>(
    frame: &Frame,
    model: &BackgroundModel<R>,
    cfg: &DetectorConfig<R>,
) -> Result<BinaryMask> {
    if cfg.detect_threshold <= R::zero() {
        return Err(Error::argument("detect_threshold must be > 0"));
    }
    let grid = compute_descriptor_grid(frame, &model.params)?;
    detect_raw_from_grid(&grid, model, cfg)
}

/// Same as [`detect_raw`] for an already-computed descriptor grid.
pub fn detect_raw_from_grid<R: Real>(
    grid: &DescriptorGrid<R>,
    model: &BackgroundModel<R>,
    cfg: &DetectorConfig<R>,
) -> Result<BinaryMask> {
    if grid.width != model.width || grid.height != model.height {
        return Err(Error::argument(format!(
            "frame {}x{} does not match model {}x{}",
            grid.width, grid.height, model.width, model.height
        )));
    }
    let mut mask = BinaryMask::new_filled(model.width, model.height, false);
    for y in 0..model.height {
        for x in 0..model.width {
            let d = descriptor_distance(grid.descriptor(x, y), model.descriptor(x, y))?;
            mask.set(x, y, d > cfg.detect_threshold);
        }
    }
    Ok(mask)
}
