//! Changedetection-style evaluation: dataset enumeration, confusion
//! counting against labeled ground truth, the seven derived metrics,
//! per-category averaging and average-rank method ordering.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{load_frame, to_grayscale, BinaryMask};

/// Per-pixel ground-truth label, decoded from the benchmark's 8-bit values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruthLabel {
    Static,
    HardShadow,
    OutsideRoi,
    Unknown,
    Motion,
}

impl GroundTruthLabel {
    pub fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            0 => GroundTruthLabel::Static,
            50 => GroundTruthLabel::HardShadow,
            85 => GroundTruthLabel::OutsideRoi,
            170 => GroundTruthLabel::Unknown,
            255 => GroundTruthLabel::Motion,
            other => return Err(Error::format(format!("invalid ground-truth label byte {other}"))),
        })
    }

    /// Scored as positive (foreground). Unknown/outside-ROI pixels are
    /// skipped entirely; hard shadows count as negatives, so detecting
    /// them costs false positives.
    pub fn is_positive(self) -> bool {
        matches!(self, GroundTruthLabel::Motion)
    }

    pub fn is_scored(self) -> bool {
        !matches!(self, GroundTruthLabel::OutsideRoi | GroundTruthLabel::Unknown)
    }
}

/// Decoded ground-truth raster.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<GroundTruthLabel>,
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    let frame = load_frame(path)?;
    let gray = to_grayscale(&frame)?;
    let labels = gray
        .pixels
        .iter()
        .map(|b| {
            GroundTruthLabel::from_byte(*b)
                .map_err(|e| Error::format(format!("{}: {e}", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruth { width: gray.width, height: gray.height, labels })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    #[serde(rename = "tp")]
    pub true_pos: u64,
    #[serde(rename = "fp")]
    pub false_pos: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
    #[serde(rename = "tn")]
    pub true_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.false_neg += other.false_neg;
        self.true_neg += other.true_neg;
    }
}

/// Tallies a mask against ground truth. An optional spatial ROI mask
/// excludes pixels (false = not scored) on top of the label rules.
pub fn confusion(
    mask: &BinaryMask,
    gt: &GroundTruth,
    roi: Option<&BinaryMask>,
) -> Result<ConfusionCounts> {
    if mask.width != gt.width || mask.height != gt.height {
        return Err(Error::argument(format!(
            "mask {}x{} does not match ground truth {}x{}",
            mask.width, mask.height, gt.width, gt.height
        )));
    }
    if let Some(r) = roi {
        if r.width != gt.width || r.height != gt.height {
            return Err(Error::argument("spatial ROI dimensions do not match ground truth"));
        }
    }
    let mut c = ConfusionCounts::default();
    for (i, label) in gt.labels.iter().enumerate() {
        if !label.is_scored() {
            continue;
        }
        if let Some(r) = roi {
            if !r.bits[i] {
                continue;
            }
        }
        match (mask.bits[i], label.is_positive()) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    Ok(c)
}

/// The seven benchmark metrics. All ratios use the 0/0 → 0 convention.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub recall: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub pbc: f64,
    pub precision: f64,
    pub fmeasure: f64,
}

pub const METRIC_NAMES: [&str; 7] =
    ["recall", "specificity", "fpr", "fnr", "pbc", "precision", "fmeasure"];

/// Whether a larger value is better, per metric, in [`METRIC_NAMES`] order.
pub const METRIC_HIGHER_BETTER: [bool; 7] = [true, true, false, false, false, true, true];

impl MetricSet {
    pub fn values(&self) -> [f64; 7] {
        [self.recall, self.specificity, self.fpr, self.fnr, self.pbc, self.precision, self.fmeasure]
    }

    pub fn from_values(v: [f64; 7]) -> Self {
        MetricSet {
            recall: v[0],
            specificity: v[1],
            fpr: v[2],
            fnr: v[3],
            pbc: v[4],
            precision: v[5],
            fmeasure: v[6],
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(c: &ConfusionCounts) -> MetricSet {
    let recall = ratio(c.true_pos, c.true_pos + c.false_neg);
    let precision = ratio(c.true_pos, c.true_pos + c.false_pos);
    let fmeasure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    MetricSet {
        recall,
        specificity: ratio(c.true_neg, c.true_neg + c.false_pos),
        fpr: ratio(c.false_pos, c.false_pos + c.true_neg),
        fnr: ratio(c.false_neg, c.true_pos + c.false_neg),
        pbc: 100.0 * ratio(c.false_neg + c.false_pos, c.total()),
        precision,
        fmeasure,
    }
}

/// Pooled counts and metrics of one benchmark video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoReport {
    pub name: String,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
}

impl VideoReport {
    pub fn new(name: impl Into<String>, counts: ConfusionCounts) -> Self {
        VideoReport { name: name.into(), metrics: metrics(&counts), counts }
    }
}

/// Per-metric arithmetic mean over the videos of a category.
pub fn aggregate_category(reports: &[VideoReport]) -> Result<MetricSet> {
    if reports.is_empty() {
        return Err(Error::argument("cannot aggregate an empty category"));
    }
    let mut sums = [0.0f64; 7];
    for r in reports {
        for (s, v) in sums.iter_mut().zip(r.metrics.values()) {
            *s += v;
        }
    }
    let n = reports.len() as f64;
    Ok(MetricSet::from_values(sums.map(|s| s / n)))
}

/// Method-level report emitted by the evaluate command and consumed by
/// the rank command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub videos: Vec<VideoReport>,
    pub category: MetricSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedMethod {
    pub name: String,
    /// Rank in each metric, [`METRIC_NAMES`] order; ties get the average
    /// of the tied positions.
    pub metric_ranks: [f64; 7],
    pub average_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRanking {
    /// Sorted by ascending average rank, ties broken by name.
    pub entries: Vec<RankedMethod>,
}

/// Ranks each method per metric (1 = best) and orders methods by the
/// average of their seven ranks.
pub fn rank_methods(table: &[(String, MetricSet)]) -> Result<MethodRanking> {
    if table.is_empty() {
        return Err(Error::argument("rank_methods needs at least one method"));
    }
    let n = table.len();
    let mut entries: Vec<RankedMethod> = table
        .iter()
        .map(|(name, _)| RankedMethod {
            name: name.clone(),
            metric_ranks: [0.0; 7],
            average_rank: 0.0,
        })
        .collect();

    for metric in 0..7 {
        let values: Vec<f64> = table.iter().map(|(_, m)| m.values()[metric]).collect();
        for v in &values {
            if !v.is_finite() {
                return Err(Error::argument(format!(
                    "non-finite value in metric {}",
                    METRIC_NAMES[metric]
                )));
            }
        }
        let better = |a: f64, b: f64| {
            if METRIC_HIGHER_BETTER[metric] {
                a > b
            } else {
                a < b
            }
        };
        for i in 0..n {
            let beaten_by = values.iter().filter(|v| better(**v, values[i])).count();
            let tied = values.iter().filter(|v| **v == values[i]).count();
            // Average of positions beaten_by+1 ..= beaten_by+tied.
            entries[i].metric_ranks[metric] = beaten_by as f64 + (tied as f64 + 1.0) / 2.0;
        }
    }
    for e in &mut entries {
        e.average_rank = e.metric_ranks.iter().sum::<f64>() / 7.0;
    }
    entries.sort_by(|a, b| {
        a.average_rank
            .partial_cmp(&b.average_rank)
            .unwrap()
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(MethodRanking { entries })
}

/// One frame/ground-truth pair of the evaluated range.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalEntry {
    pub index: u32,
    pub input: PathBuf,
    pub ground_truth: PathBuf,
}

/// Enumerated changedetection-style sequence: `input/in%06d.jpg`,
/// `groundtruth/gt%06d.png`, `temporalROI.txt` with the first and last
/// evaluated frame. Frames before the temporal ROI are training frames.
#[derive(Debug, Clone)]
pub struct DatasetSequence {
    pub root: PathBuf,
    pub roi_first: u32,
    pub roi_last: u32,
    pub training: Vec<(u32, PathBuf)>,
    pub evaluation: Vec<EvalEntry>,
    pub spatial_roi: Option<BinaryMask>,
}

fn input_frame_path(input_dir: &Path, index: u32) -> Result<PathBuf> {
    let jpg = input_dir.join(format!("in{index:06}.jpg"));
    if jpg.is_file() {
        return Ok(jpg);
    }
    let png = input_dir.join(format!("in{index:06}.png"));
    if png.is_file() {
        return Ok(png);
    }
    Err(Error::io(
        jpg,
        std::io::Error::new(std::io::ErrorKind::NotFound, "input frame not found"),
    ))
}

pub fn load_dataset(root: &Path) -> Result<DatasetSequence> {
    let input_dir = root.join("input");
    let gt_dir = root.join("groundtruth");
    for dir in [&input_dir, &gt_dir] {
        if !dir.is_dir() {
            return Err(Error::io(
                dir.clone(),
                std::io::Error::new(std::io::ErrorKind::NotFound, "missing dataset directory"),
            ));
        }
    }
    let roi_path = root.join("temporalROI.txt");
    let roi_text = fs::read_to_string(&roi_path).map_err(|e| Error::io(&roi_path, e))?;
    let mut parts = roi_text.split_whitespace();
    let parse = |s: Option<&str>| -> Result<u32> {
        s.ok_or_else(|| Error::format("temporalROI.txt must contain two integers"))?
            .parse()
            .map_err(|_| Error::format("temporalROI.txt must contain two integers"))
    };
    let roi_first = parse(parts.next())?;
    let roi_last = parse(parts.next())?;
    if roi_first == 0 || roi_last < roi_first {
        return Err(Error::format(format!(
            "invalid temporal ROI {roi_first}..{roi_last}"
        )));
    }

    let mut training = Vec::new();
    for i in 1..roi_first {
        training.push((i, input_frame_path(&input_dir, i)?));
    }
    let mut evaluation = Vec::new();
    for i in roi_first..=roi_last {
        let gt = gt_dir.join(format!("gt{i:06}.png"));
        if !gt.is_file() {
            return Err(Error::io(
                gt,
                std::io::Error::new(std::io::ErrorKind::NotFound, "ground truth frame not found"),
            ));
        }
        evaluation.push(EvalEntry { index: i, input: input_frame_path(&input_dir, i)?, ground_truth: gt });
    }

    let spatial_roi = {
        let p = root.join("ROI.png");
        if p.is_file() {
            Some(crate::imaging::load_mask(&p)?)
        } else {
            None
        }
    };
    Ok(DatasetSequence { root: root.to_path_buf(), roi_first, roi_last, training, evaluation, spatial_roi })
}

/// Scores a directory of `bin%06d.png` masks against a sequence's ground
/// truth, pooling counts over the evaluated range.
pub fn evaluate_masks(
    dataset: &DatasetSequence,
    masks_dir: &Path,
    video_name: &str,
) -> Result<VideoReport> {
    let mut counts = ConfusionCounts::default();
    for entry in &dataset.evaluation {
        let mask_path = masks_dir.join(format!("bin{:06}.png", entry.index));
        if !mask_path.is_file() {
            return Err(Error::format(format!(
                "missing mask file for frame {}: {}",
                entry.index,
                mask_path.display()
            )));
        }
        let mask = crate::imaging::load_mask(&mask_path)?;
        let gt = load_ground_truth(&entry.ground_truth)?;
        counts.add(&confusion(&mask, &gt, dataset.spatial_roi.as_ref())?);
    }
    Ok(VideoReport::new(video_name, counts))
}

pub fn write_report_json(report: &MethodReport, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::format(format!("serializing report: {e}")))?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_report_json(path: &Path) -> Result<MethodReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(format!("{}: {e}", path.display())))
}

/// One CSV row per video: name, raw counts, then the seven metrics.
pub fn write_videos_csv(videos: &[VideoReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(format!("{e}")))?;
    let mut header = vec!["video", "tp", "fp", "fn", "tn"];
    header.extend_from_slice(&METRIC_NAMES);
    w.write_record(&header).map_err(|e| Error::format(format!("{e}")))?;
    for v in videos {
        let mut row = vec![
            v.name.clone(),
            v.counts.true_pos.to_string(),
            v.counts.false_pos.to_string(),
            v.counts.false_neg.to_string(),
            v.counts.true_neg.to_string(),
        ];
        row.extend(v.metrics.values().iter().map(|m| format!("{m}")));
        w.write_record(&row).map_err(|e| Error::format(format!("{e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Ranking table CSV, best method first.
pub fn write_ranking_csv(ranking: &MethodRanking, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(format!("{e}")))?;
    let mut header = vec!["method".to_string(), "average_rank".to_string()];
    header.extend(METRIC_NAMES.iter().map(|n| format!("rank_{n}")));
    w.write_record(&header).map_err(|e| Error::format(format!("{e}")))?;
    for e in &ranking.entries {
        let mut row = vec![e.name.clone(), format!("{}", e.average_rank)];
        row.extend(e.metric_ranks.iter().map(|r| format!("{r}")));
        w.write_record(&row).map_err(|e| Error::format(format!("{e}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
