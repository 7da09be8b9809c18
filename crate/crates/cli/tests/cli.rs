//! End-to-end tests of the `lssbg` binary on a small synthetic
//! changedetection-style sequence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{GrayImage, RgbImage};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_lssbg");
const SIZE: u32 = 48;
const OBJ: u32 = 12;

fn lssbg(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn lssbg")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

struct Lcg(u64);

impl Lcg {
    fn next_u8(&mut self, lo: u8, hi: u8) -> u8 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        lo + ((self.0 >> 33) % (hi - lo) as u64) as u8
    }
}

/// Smooth texture from a coarse random lattice, bilinearly upsampled.
fn texture(seed: u64, size: u32, cell: u32) -> Vec<u8> {
    let mut rng = Lcg(seed);
    let grid = (size / cell + 2) as usize;
    let lattice: Vec<f64> = (0..grid * grid).map(|_| rng.next_u8(50, 206) as f64).collect();
    let mut out = Vec::with_capacity((size * size) as usize);
    for y in 0..size {
        for x in 0..size {
            let fx = x as f64 / cell as f64;
            let fy = y as f64 / cell as f64;
            let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
            let (tx, ty) = (fx.fract(), fy.fract());
            let v = lattice[y0 * grid + x0] * (1.0 - tx) * (1.0 - ty)
                + lattice[y0 * grid + x0 + 1] * tx * (1.0 - ty)
                + lattice[(y0 + 1) * grid + x0] * (1.0 - tx) * ty
                + lattice[(y0 + 1) * grid + x0 + 1] * tx * ty;
            out.push(v.round() as u8);
        }
    }
    out
}

fn gray_to_rgb(gray: &[u8], size: u32) -> RgbImage {
    RgbImage::from_fn(size, size, |x, y| {
        let g = gray[(y * size + x) as usize];
        image::Rgb([g.saturating_sub(6), g, g.saturating_add(6)])
    })
}

/// Object position in eval frame `index` (7..=16).
fn object_origin(index: u32) -> (u32, u32) {
    (6 + 2 * (index - 7), 18)
}

/// Writes a sequence: frames 1-6 are the identical background (training),
/// frames 7-16 add a 12x12 textured square moving 2 px/frame, with PNG
/// ground truth and `temporalROI.txt` marking 7-16 as evaluated.
fn write_fixture(root: &Path) {
    let input = root.join("input");
    let gt_dir = root.join("groundtruth");
    fs::create_dir_all(&input).unwrap();
    fs::create_dir_all(&gt_dir).unwrap();
    fs::write(root.join("temporalROI.txt"), "7 16\n").unwrap();

    let background = texture(11, SIZE, 6);
    let object = texture(22, OBJ, 2);
    for i in 1..=6u32 {
        gray_to_rgb(&background, SIZE)
            .save(input.join(format!("in{i:06}.jpg")))
            .unwrap();
    }
    for i in 7..=16u32 {
        let (ox, oy) = object_origin(i);
        let mut frame = background.clone();
        let mut gt = GrayImage::from_pixel(SIZE, SIZE, image::Luma([0]));
        for y in 0..OBJ {
            for x in 0..OBJ {
                frame[((oy + y) * SIZE + ox + x) as usize] = object[(y * OBJ + x) as usize];
                gt.put_pixel(ox + x, oy + y, image::Luma([255]));
            }
        }
        gray_to_rgb(&frame, SIZE)
            .save(input.join(format!("in{i:06}.jpg")))
            .unwrap();
        gt.save(gt_dir.join(format!("gt{i:06}.png"))).unwrap();
    }
}

fn fixture() -> TempDir {
    let dir = TempDir::new().unwrap();
    write_fixture(dir.path());
    dir
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Ground-truth-perfect masks for the evaluated range.
fn write_perfect_masks(dir: &Path, invert: bool) {
    fs::create_dir_all(dir).unwrap();
    for i in 7..=16u32 {
        let (ox, oy) = object_origin(i);
        let mask = GrayImage::from_fn(SIZE, SIZE, |x, y| {
            let inside = x >= ox && x < ox + OBJ && y >= oy && y < oy + OBJ;
            image::Luma([if inside != invert { 255 } else { 0 }])
        });
        mask.save(dir.join(format!("bin{i:06}.png"))).unwrap();
    }
}

#[test]
fn train_detect_roundtrip() {
    let data = fixture();
    let out = TempDir::new().unwrap();
    let model = out.path().join("model.lssbgm");
    let input = data.path().join("input");

    let train = lssbg(&[
        "train",
        "--input",
        path_str(&input),
        "--model",
        path_str(&model),
        "--first",
        "1",
        "--last",
        "6",
    ]);
    assert_eq!(exit_code(&train), 0, "{}", stderr(&train));
    // Six identical frames collapse into one cluster everywhere.
    assert!(
        stdout(&train).contains("trained on 6 frames, average clusters per pixel: 1.000"),
        "unexpected stdout: {}",
        stdout(&train)
    );
    let loaded = lssbg::BackgroundModel32::load(&model).unwrap();
    assert_eq!((loaded.width, loaded.height), (SIZE as usize, SIZE as usize));

    let masks = out.path().join("masks");
    let detect = lssbg(&[
        "detect",
        "--model",
        path_str(&model),
        "--input",
        path_str(&input),
        "--out",
        path_str(&masks),
        "--first",
        "7",
        "--last",
        "16",
    ]);
    assert_eq!(exit_code(&detect), 0, "{}", stderr(&detect));
    let mut names: Vec<String> = fs::read_dir(&masks)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let expected: Vec<String> = (7..=16).map(|i| format!("bin{i:06}.png")).collect();
    assert_eq!(names, expected, "exactly the evaluated masks, no temp files");

    // A training frame re-detected against its own model is background.
    let quiet = out.path().join("quiet");
    let detect_train = lssbg(&[
        "detect",
        "--model",
        path_str(&model),
        "--input",
        path_str(&input),
        "--out",
        path_str(&quiet),
        "--first",
        "1",
        "--last",
        "1",
    ]);
    assert_eq!(exit_code(&detect_train), 0, "{}", stderr(&detect_train));
    let mask = image::open(quiet.join("bin000001.png")).unwrap().to_luma8();
    assert!(mask.pixels().all(|p| p.0[0] == 0), "training frame must detect as background");
}

#[test]
fn train_with_empty_range_is_a_usage_error() {
    let data = fixture();
    let out = TempDir::new().unwrap();
    let result = lssbg(&[
        "train",
        "--input",
        path_str(&data.path().join("input")),
        "--model",
        path_str(&out.path().join("m.lssbgm")),
        "--first",
        "100",
    ]);
    assert_eq!(exit_code(&result), 1);
    assert!(stderr(&result).contains("no input frames"), "{}", stderr(&result));
}

#[test]
fn evaluate_perfect_masks_scores_one() {
    let data = fixture();
    let out = TempDir::new().unwrap();
    let masks = out.path().join("masks");
    write_perfect_masks(&masks, false);

    let json = out.path().join("report.json");
    let csv = out.path().join("report.csv");
    let eval = lssbg(&[
        "evaluate",
        "--dataset",
        path_str(data.path()),
        "--masks",
        path_str(&masks),
        "--json",
        path_str(&json),
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(exit_code(&eval), 0, "{}", stderr(&eval));
    assert!(stdout(&eval).contains("fmeasure 1.0000"), "{}", stdout(&eval));
    let report = lssbg::eval::read_report_json(&json).unwrap();
    assert_eq!(report.category.fmeasure, 1.0);
    assert_eq!(report.category.fpr, 0.0);
    assert_eq!(report.videos.len(), 1);
    assert!(csv.is_file());
}

#[test]
fn evaluate_reports_missing_mask_with_frame_number() {
    let data = fixture();
    let out = TempDir::new().unwrap();
    let masks = out.path().join("masks");
    write_perfect_masks(&masks, false);
    fs::remove_file(masks.join("bin000009.png")).unwrap();

    let eval = lssbg(&[
        "evaluate",
        "--dataset",
        path_str(data.path()),
        "--masks",
        path_str(&masks),
    ]);
    assert_eq!(exit_code(&eval), 3);
    assert!(
        stderr(&eval).contains("missing mask file for frame 9"),
        "{}",
        stderr(&eval)
    );
}

#[test]
fn rank_orders_two_methods() {
    let data = fixture();
    let out = TempDir::new().unwrap();
    let good_masks = out.path().join("good");
    let bad_masks = out.path().join("bad");
    write_perfect_masks(&good_masks, false);
    write_perfect_masks(&bad_masks, true);

    let good_json = out.path().join("good.json");
    let bad_json = out.path().join("bad.json");
    for (masks, json, method) in
        [(&good_masks, &good_json, "perfect"), (&bad_masks, &bad_json, "inverted")]
    {
        let eval = lssbg(&[
            "evaluate",
            "--dataset",
            path_str(data.path()),
            "--masks",
            path_str(masks),
            "--json",
            path_str(json),
            "--method",
            method,
        ]);
        assert_eq!(exit_code(&eval), 0, "{}", stderr(&eval));
    }

    let table = out.path().join("ranking.csv");
    let rank = lssbg(&[
        "rank",
        path_str(&good_json),
        path_str(&bad_json),
        "--out",
        path_str(&table),
    ]);
    assert_eq!(exit_code(&rank), 0, "{}", stderr(&rank));
    let text = fs::read_to_string(&table).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3, "header plus one row per method:\n{text}");
    assert!(rows[0].starts_with("method,average_rank"));
    assert!(rows[1].starts_with("perfect,1"));
    assert!(rows[2].starts_with("inverted,2"));
}

#[test]
fn run_is_byte_identical_to_composed_subcommands() {
    let data = fixture();
    let run_out = TempDir::new().unwrap();
    let step_out = TempDir::new().unwrap();

    let run = lssbg(&[
        "run",
        "--dataset",
        path_str(data.path()),
        "--out",
        path_str(run_out.path()),
    ]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));

    let input = data.path().join("input");
    let model = step_out.path().join("model.lssbgm");
    let masks = step_out.path().join("masks");
    let json = step_out.path().join("report.json");
    let train = lssbg(&[
        "train",
        "--input",
        path_str(&input),
        "--model",
        path_str(&model),
        "--last",
        "6",
    ]);
    assert_eq!(exit_code(&train), 0, "{}", stderr(&train));
    let detect = lssbg(&[
        "detect",
        "--model",
        path_str(&model),
        "--input",
        path_str(&input),
        "--out",
        path_str(&masks),
        "--first",
        "7",
        "--last",
        "16",
    ]);
    assert_eq!(exit_code(&detect), 0, "{}", stderr(&detect));
    let eval = lssbg(&[
        "evaluate",
        "--dataset",
        path_str(data.path()),
        "--masks",
        path_str(&masks),
        "--json",
        path_str(&json),
    ]);
    assert_eq!(exit_code(&eval), 0, "{}", stderr(&eval));

    let read = |p: PathBuf| fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    assert_eq!(
        read(run_out.path().join("model.lssbgm")),
        read(model.clone()),
        "model files differ"
    );
    for i in 7..=16u32 {
        let name = format!("bin{i:06}.png");
        assert_eq!(
            read(run_out.path().join("masks").join(&name)),
            read(masks.join(&name)),
            "{name} differs"
        );
    }
    assert_eq!(
        read(run_out.path().join("report.json")),
        read(json),
        "reports differ"
    );
}
