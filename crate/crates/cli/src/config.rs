//! Run configuration: plain `key = value` file plus command-line
//! overrides; flags win over file values.

use std::fs;
use std::path::Path;

use clap::Args;
use lssbg::detect::DetectorConfig;
use lssbg::postprocess::PostprocessConfig;
use lssbg::{Error, LssParams32, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub patch_size: usize,
    pub region_radius: usize,
    pub angle_bins: usize,
    pub radial_bins: usize,
    pub noise_variance: f32,
    pub component_scale: f32,
    pub train_threshold: f32,
    pub detect_threshold: f32,
    pub close_radius: i64,
    pub erode_radius: i64,
    pub border_dilate_radius: i64,
    pub color_threshold: f64,
    pub final_erode_radius: i64,
    pub final_close_radius: i64,
    pub emit_raw_masks: bool,
    pub method: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let lss = LssParams32::default();
        let pp = PostprocessConfig::default();
        let det = DetectorConfig::<f32>::default();
        RunConfig {
            patch_size: lss.patch_size,
            region_radius: lss.region_radius,
            angle_bins: lss.angle_bins,
            radial_bins: lss.radial_bins,
            noise_variance: lss.noise_variance,
            component_scale: lss.component_scale,
            train_threshold: 1.0,
            detect_threshold: det.detect_threshold,
            close_radius: pp.close_radius,
            erode_radius: pp.erode_radius,
            border_dilate_radius: pp.border_dilate_radius,
            color_threshold: pp.color_threshold,
            final_erode_radius: pp.final_erode_radius,
            final_close_radius: pp.final_close_radius,
            emit_raw_masks: false,
            method: "lss".to_string(),
        }
    }
}

impl RunConfig {
    pub fn lss_params(&self) -> LssParams32 {
        LssParams32 {
            patch_size: self.patch_size,
            region_radius: self.region_radius,
            angle_bins: self.angle_bins,
            radial_bins: self.radial_bins,
            noise_variance: self.noise_variance,
            component_scale: self.component_scale,
        }
    }

    pub fn detector_config(&self) -> DetectorConfig<f32> {
        DetectorConfig { detect_threshold: self.detect_threshold }
    }

    pub fn postprocess_config(&self) -> PostprocessConfig {
        PostprocessConfig {
            close_radius: self.close_radius,
            erode_radius: self.erode_radius,
            border_dilate_radius: self.border_dilate_radius,
            color_threshold: self.color_threshold,
            final_erode_radius: self.final_erode_radius,
            final_close_radius: self.final_close_radius,
        }
    }

    /// Parses a `key = value` config file. `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(format!("{}:{}: expected key = value", path.display(), lineno + 1))
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| {
                Error::format(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::format(format!("invalid value {value:?} for {key}")))
        }
        match key {
            "patch_size" => self.patch_size = parse(key, value)?,
            "region_radius" => self.region_radius = parse(key, value)?,
            "angle_bins" => self.angle_bins = parse(key, value)?,
            "radial_bins" => self.radial_bins = parse(key, value)?,
            "noise_variance" => self.noise_variance = parse(key, value)?,
            "component_scale" => self.component_scale = parse(key, value)?,
            "train_threshold" => self.train_threshold = parse(key, value)?,
            "detect_threshold" => self.detect_threshold = parse(key, value)?,
            "close_radius" => self.close_radius = parse(key, value)?,
            "erode_radius" => self.erode_radius = parse(key, value)?,
            "border_dilate_radius" => self.border_dilate_radius = parse(key, value)?,
            "color_threshold" => self.color_threshold = parse(key, value)?,
            "final_erode_radius" => self.final_erode_radius = parse(key, value)?,
            "final_close_radius" => self.final_close_radius = parse(key, value)?,
            "emit_raw_masks" => self.emit_raw_masks = parse(key, value)?,
            "method" => self.method = value.to_string(),
            other => return Err(Error::format(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &ParamOverrides) {
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = &o.$field {
                    self.$field = v.clone();
                })*
            };
        }
        apply!(
            patch_size,
            region_radius,
            angle_bins,
            radial_bins,
            noise_variance,
            component_scale,
            train_threshold,
            detect_threshold,
            close_radius,
            erode_radius,
            border_dilate_radius,
            color_threshold,
            final_erode_radius,
            final_close_radius,
            method
        );
        if o.emit_raw_masks {
            self.emit_raw_masks = true;
        }
    }
}

/// Per-parameter command-line overrides; unset flags keep the config-file
/// (or default) value.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamOverrides {
    #[arg(long)]
    pub patch_size: Option<usize>,
    #[arg(long)]
    pub region_radius: Option<usize>,
    #[arg(long)]
    pub angle_bins: Option<usize>,
    #[arg(long)]
    pub radial_bins: Option<usize>,
    #[arg(long)]
    pub noise_variance: Option<f32>,
    #[arg(long)]
    pub component_scale: Option<f32>,
    #[arg(long)]
    pub train_threshold: Option<f32>,
    #[arg(long)]
    pub detect_threshold: Option<f32>,
    #[arg(long)]
    pub close_radius: Option<i64>,
    #[arg(long)]
    pub erode_radius: Option<i64>,
    #[arg(long)]
    pub border_dilate_radius: Option<i64>,
    #[arg(long)]
    pub color_threshold: Option<f64>,
    #[arg(long)]
    pub final_erode_radius: Option<i64>,
    #[arg(long)]
    pub final_close_radius: Option<i64>,
    #[arg(long)]
    pub emit_raw_masks: bool,
    #[arg(long)]
    pub method: Option<String>,
}

/// Config file (when given), then flag overrides on top of the defaults.
pub fn resolve(config: Option<&Path>, overrides: &ParamOverrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = config {
        cfg.apply_file(path)?;
    }
    cfg.apply_overrides(overrides);
    cfg.lss_params().validate()?;
    cfg.postprocess_config().validate()?;
    if cfg.train_threshold <= 0.0 {
        return Err(Error::argument("train_threshold must be > 0"));
    }
    if cfg.detect_threshold <= 0.0 {
        return Err(Error::argument("detect_threshold must be > 0"));
    }
    Ok(cfg)
}
