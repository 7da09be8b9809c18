use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use lssbg::detect::detect_raw_from_grid;
use lssbg::eval::{
    aggregate_category, evaluate_masks, load_dataset, rank_methods, read_report_json,
    write_ranking_csv, write_report_json, write_videos_csv, MethodReport,
};
use lssbg::imaging::{load_frame, save_mask};
use lssbg::lss::compute_descriptor_grid;
use lssbg::model::{BackgroundModel, TrainingState};
use lssbg::postprocess::postprocess;
use lssbg::BackgroundModel32;

use crate::config::{resolve, ParamOverrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(lssbg::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<lssbg::Error> for CliError {
    fn from(e: lssbg::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Background subtraction based on the Local Self-Similarity descriptor.
#[derive(Debug, Parser)]
#[command(name = "lssbg", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a background model from training frames.
    Train(TrainArgs),
    /// Produce foreground masks for a frame sequence.
    Detect(DetectArgs),
    /// Score emitted masks against dataset ground truth.
    Evaluate(EvaluateArgs),
    /// Rank method reports by average metric rank.
    Rank(RankArgs),
    /// Train, detect and evaluate a whole dataset sequence.
    Run(RunArgs),
}

#[derive(Debug, Parser)]
pub struct TrainArgs {
    /// Directory with in%06d.jpg/png frames.
    #[arg(long)]
    pub input: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// First frame index to train on (inclusive).
    #[arg(long)]
    pub first: Option<u32>,
    /// Last frame index to train on (inclusive).
    #[arg(long)]
    pub last: Option<u32>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ParamOverrides,
}

#[derive(Debug, Parser)]
pub struct DetectArgs {
    /// Background model file from `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Directory with in%06d.jpg/png frames.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for bin%06d.png masks.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub first: Option<u32>,
    #[arg(long)]
    pub last: Option<u32>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ParamOverrides,
}

#[derive(Debug, Parser)]
pub struct EvaluateArgs {
    /// Dataset sequence root (input/, groundtruth/, temporalROI.txt).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory with bin%06d.png masks.
    #[arg(long)]
    pub masks: PathBuf,
    /// JSON report output path.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Per-video CSV report output path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ParamOverrides,
}

#[derive(Debug, Parser)]
pub struct RankArgs {
    /// JSON method reports produced by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Ranking table CSV output path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Parser)]
pub struct RunArgs {
    /// Dataset sequence root; pre-ROI frames train, ROI frames are scored.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Working directory for the model, masks and reports.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ParamOverrides,
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Train(args) => {
            let cfg = resolve(args.config.as_deref(), &args.overrides)?;
            let frames = frames_in_range(&args.input, args.first, args.last)?;
            cmd_train(&cfg, &frames, &args.model)
        }
        Command::Detect(args) => {
            let cfg = resolve(args.config.as_deref(), &args.overrides)?;
            let frames = frames_in_range(&args.input, args.first, args.last)?;
            let model = BackgroundModel32::load(&args.model)?;
            cmd_detect(&cfg, &model, &frames, &args.out)
        }
        Command::Evaluate(args) => {
            let cfg = resolve(args.config.as_deref(), &args.overrides)?;
            cmd_evaluate(
                &cfg,
                &args.dataset,
                &args.masks,
                args.json.as_deref(),
                args.csv.as_deref(),
            )
            .map(|_| ())
        }
        Command::Rank(args) => cmd_rank(&args.reports, &args.out),
        Command::Run(args) => {
            let cfg = resolve(args.config.as_deref(), &args.overrides)?;
            cmd_run(&cfg, &args.dataset, &args.out)
        }
    }
}

/// Frames named in%06d.jpg or in%06d.png under `dir`, sorted by index and
/// filtered to the inclusive range.
fn frames_in_range(
    dir: &Path,
    first: Option<u32>,
    last: Option<u32>,
) -> CliResult<Vec<(u32, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| lssbg::Error::io(dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| lssbg::Error::io(dir, e))?;
        let path = entry.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name
            .strip_suffix(".jpg")
            .or_else(|| name.strip_suffix(".png"))
            .and_then(|s| s.strip_prefix("in"))
        else {
            continue;
        };
        let Ok(index) = stem.parse::<u32>() else { continue };
        if first.is_some_and(|f| index < f) || last.is_some_and(|l| index > l) {
            continue;
        }
        frames.push((index, path));
    }
    frames.sort();
    if frames.is_empty() {
        return Err(CliError::Usage(format!(
            "no input frames selected in {}",
            dir.display()
        )));
    }
    Ok(frames)
}

fn cmd_train(cfg: &RunConfig, frames: &[(u32, PathBuf)], model_path: &Path) -> CliResult {
    let first = load_frame(&frames[0].1)?;
    let mut state = TrainingState::new(
        first.width,
        first.height,
        cfg.lss_params(),
        cfg.train_threshold,
    );
    state.update(&first)?;
    for (_, path) in &frames[1..] {
        let frame = load_frame(path)?;
        state.update(&frame)?;
    }
    let model = state.finalize()?;
    if let Some(parent) = model_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| lssbg::Error::io(parent, e))?;
        }
    }
    model.save(model_path)?;
    println!(
        "trained on {} frames, average clusters per pixel: {:.3}",
        state.frames_seen,
        state.average_cluster_count()
    );
    Ok(())
}

fn cmd_detect(
    cfg: &RunConfig,
    model: &BackgroundModel<f32>,
    frames: &[(u32, PathBuf)],
    out_dir: &Path,
) -> CliResult {
    fs::create_dir_all(out_dir).map_err(|e| lssbg::Error::io(out_dir, e))?;
    let detector = cfg.detector_config();
    let pp = cfg.postprocess_config();
    for (index, path) in frames {
        let frame = load_frame(path)?;
        let grid = compute_descriptor_grid(&frame, &model.params)?;
        let raw = detect_raw_from_grid(&grid, model, &detector)?;
        let final_mask = postprocess(&raw, &frame, model, &pp)?;
        write_mask_atomic(&final_mask, out_dir, &format!("bin{index:06}.png"))?;
        if cfg.emit_raw_masks {
            write_mask_atomic(&raw, out_dir, &format!("raw{index:06}.png"))?;
        }
    }
    println!("wrote {} masks to {}", frames.len(), out_dir.display());
    Ok(())
}

// Masks must appear complete or not at all; write then rename.
fn write_mask_atomic(
    mask: &lssbg::imaging::BinaryMask,
    dir: &Path,
    name: &str,
) -> CliResult {
    let tmp = dir.join(format!(".tmp-{name}"));
    save_mask(mask, &tmp)?;
    let dst = dir.join(name);
    fs::rename(&tmp, &dst).map_err(|e| lssbg::Error::io(&dst, e))?;
    Ok(())
}

fn cmd_evaluate(
    cfg: &RunConfig,
    dataset_root: &Path,
    masks_dir: &Path,
    json: Option<&Path>,
    csv: Option<&Path>,
) -> CliResult<MethodReport> {
    let dataset = load_dataset(dataset_root)?;
    let video_name = dataset_root
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("video")
        .to_string();
    let video = evaluate_masks(&dataset, masks_dir, &video_name)?;
    let category = aggregate_category(std::slice::from_ref(&video))?;
    let report = MethodReport { method: cfg.method.clone(), videos: vec![video], category };
    if let Some(path) = json {
        write_report_json(&report, path)?;
    }
    if let Some(path) = csv {
        write_videos_csv(&report.videos, path)?;
    }
    println!(
        "{}: recall {:.4} precision {:.4} fmeasure {:.4} pbc {:.4}",
        report.method,
        report.category.recall,
        report.category.precision,
        report.category.fmeasure,
        report.category.pbc
    );
    Ok(report)
}

fn cmd_rank(reports: &[PathBuf], out: &Path) -> CliResult {
    let mut table = Vec::new();
    for path in reports {
        let report = read_report_json(path)?;
        table.push((report.method, report.category));
    }
    let ranking = rank_methods(&table)?;
    write_ranking_csv(&ranking, out)?;
    for e in &ranking.entries {
        println!("{:8.4}  {}", e.average_rank, e.name);
    }
    Ok(())
}

fn cmd_run(cfg: &RunConfig, dataset_root: &Path, out_dir: &Path) -> CliResult {
    let dataset = load_dataset(dataset_root)?;
    if dataset.training.is_empty() {
        return Err(CliError::Usage(
            "dataset has no frames before the temporal ROI to train on".into(),
        ));
    }
    fs::create_dir_all(out_dir).map_err(|e| lssbg::Error::io(out_dir, e))?;
    let model_path = out_dir.join("model.lssbgm");
    cmd_train(cfg, &dataset.training, &model_path)?;

    let model = BackgroundModel32::load(&model_path)?;
    let eval_frames: Vec<(u32, PathBuf)> = dataset
        .evaluation
        .iter()
        .map(|e| (e.index, e.input.clone()))
        .collect();
    let masks_dir = out_dir.join("masks");
    cmd_detect(cfg, &model, &eval_frames, &masks_dir)?;

    cmd_evaluate(
        cfg,
        dataset_root,
        &masks_dir,
        Some(&out_dir.join("report.json")),
        Some(&out_dir.join("report.csv")),
    )?;
    Ok(())
}
