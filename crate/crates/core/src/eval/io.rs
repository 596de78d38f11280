//! Evaluator inputs and outputs on disk.
//!
//! Detections come as `{"detections": [{"image", "class", "bbox", "score"}]}`.
//! Ground truth is a directory of annotation documents as written by the
//! dataset generator (either the dataset root or its `annotations/`).
//! Images are keyed by file stem, so `scene_000001`, `scene_000001.jpg` and
//! `scene_000001.png` all name the same image.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{evaluate_sets, ApMode, Detection, EvalError, EvalReport, GroundTruth};
use crate::annotate::BBox;
use crate::dataset::json::AnnotationFile;
use crate::scene::ShapeClass;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetection {
    image: String,
    class: String,
    bbox: [f64; 4],
    score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionsFile {
    detections: Vec<RawDetection>,
}

impl DetectionsFile {
    pub fn from_detections(dets: &[Detection]) -> Self {
        let detections = dets
            .iter()
            .map(|d| RawDetection {
                image: d.image.clone(),
                class: d.class.name().into(),
                bbox: d.bbox.to_array(),
                score: d.score,
            })
            .collect();
        Self { detections }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("detections serialize")
    }
}

fn image_key(name: &str) -> &str {
    let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
    match base.rsplit_once('.') {
        Some((stem, _)) if !stem.is_empty() => stem,
        _ => base,
    }
}

fn read(path: &Path) -> Result<String, EvalError> {
    fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.to_path_buf(), source })
}

/// Parses a detections document. `source` names the input in error messages.
pub fn parse_detections(text: &str, source: &str) -> Result<Vec<Detection>, EvalError> {
    let file: DetectionsFile =
        serde_json::from_str(text).map_err(|e| EvalError::Parse { context: source.to_string(), message: e.to_string() })?;
    file.detections
        .into_iter()
        .enumerate()
        .map(|(i, raw)| {
            let context = format!("{source}: detections[{i}]");
            let class = ShapeClass::from_name(&raw.class)
                .ok_or_else(|| EvalError::UnknownClass { context: context.clone(), class: raw.class.clone() })?;
            let [x0, y0, x1, y1] = raw.bbox;
            let bbox = BBox::new(x0, y0, x1, y1);
            if !bbox.is_valid() {
                return Err(EvalError::Parse { context, message: format!("bbox {:?} is not a finite box with min < max", raw.bbox) });
            }
            if !raw.score.is_finite() {
                return Err(EvalError::Parse { context, message: format!("score {} is not finite", raw.score) });
            }
            Ok(Detection { image: image_key(&raw.image).to_string(), class, bbox, score: raw.score })
        })
        .collect()
}

pub fn load_detections(path: &Path) -> Result<Vec<Detection>, EvalError> {
    parse_detections(&read(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthSet {
    /// Every annotated image, including those without objects.
    pub images: BTreeSet<String>,
    pub boxes: Vec<GroundTruth>,
}

/// Reads every `*.json` annotation document under `dir`, or under
/// `dir/annotations` when that exists.
pub fn load_ground_truth(dir: &Path) -> Result<GroundTruthSet, EvalError> {
    let nested = dir.join("annotations");
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let entries = fs::read_dir(&dir).map_err(|source| EvalError::Io { path: dir.clone(), source })?;
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|source| EvalError::Io { path: dir.clone(), source })?.path();
        if path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    let mut set = GroundTruthSet::default();
    for path in files {
        let doc = AnnotationFile::parse(&read(&path)?)
            .map_err(|e| EvalError::Parse { context: path.display().to_string(), message: e.to_string() })?;
        let key = image_key(&doc.image).to_string();
        for ann in doc.annotations() {
            set.boxes.push(GroundTruth { image: key.clone(), class: ann.class, bbox: ann.bbox });
        }
        set.images.insert(key);
    }
    Ok(set)
}

/// Loads both inputs and scores them. Every detection must name an image
/// present in the ground truth.
pub fn evaluate(gt_dir: &Path, dets_path: &Path, mode: ApMode, iou_threshold: f64) -> Result<EvalReport, EvalError> {
    let gt = load_ground_truth(gt_dir)?;
    let dets = load_detections(dets_path)?;
    if let Some((index, d)) = dets.iter().enumerate().find(|(_, d)| !gt.images.contains(&d.image)) {
        return Err(EvalError::ImageIdMismatch { index, image: d.image.clone() });
    }
    Ok(evaluate_sets(&dets, &gt.boxes, gt.images.len(), mode, iou_threshold))
}

fn class_color(class: ShapeClass) -> &'static str {
    match class {
        ShapeClass::Box => "#d62728",
        ShapeClass::Cylinder => "#1f77b4",
        ShapeClass::Sphere => "#2ca02c",
    }
}

/// The step-wise PR polyline, starting at recall 0.
fn curve_points(pr: &[[f64; 2]], size: f64, margin: f64) -> String {
    let map = |r: f64, p: f64| (margin + r * size, margin + (1.0 - p) * size);
    let mut pts = Vec::with_capacity(2 * pr.len() + 1);
    let first_p = pr.first().map_or(1.0, |p| p[1]);
    pts.push(map(0.0, first_p));
    for w in pr {
        pts.push(map(w[0], w[1]));
    }
    pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
}

pub fn pr_svg(report: &EvalReport) -> String {
    let (size, margin) = (400.0, 50.0);
    let total = size + 2.0 * margin;
    let mut s = String::new();
    writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\" viewBox=\"0 0 {total} {total}\">").unwrap();
    writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{total}\" height=\"{total}\" fill=\"white\"/>").unwrap();
    writeln!(s, "<rect x=\"{margin}\" y=\"{margin}\" width=\"{size}\" height=\"{size}\" fill=\"none\" stroke=\"black\"/>").unwrap();
    for k in 1..10 {
        let v = margin + size * k as f64 / 10.0;
        writeln!(s, "<line x1=\"{v}\" y1=\"{margin}\" x2=\"{v}\" y2=\"{}\" stroke=\"#ddd\"/>", margin + size).unwrap();
        writeln!(s, "<line x1=\"{margin}\" y1=\"{v}\" x2=\"{}\" y2=\"{v}\" stroke=\"#ddd\"/>", margin + size).unwrap();
    }
    writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">recall</text>", margin + size / 2.0, total - 15.0).unwrap();
    writeln!(
        s,
        "<text x=\"15\" y=\"{0}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 15 {0})\">precision</text>",
        margin + size / 2.0
    )
    .unwrap();
    for (i, c) in report.classes.iter().enumerate() {
        let color = class_color(c.class);
        if !c.pr.is_empty() {
            writeln!(
                s,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
                curve_points(&c.pr, size, margin)
            )
            .unwrap();
        }
        let ap = c.ap.map_or("n/a".to_string(), |a| format!("{a:.3}"));
        writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"{color}\">{} AP {ap}</text>",
            margin + 10.0,
            margin + size - 50.0 + 18.0 * i as f64,
            c.class.name()
        )
        .unwrap();
    }
    writeln!(s, "<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-size=\"15\">mAP {:.3} ({})</text>", total / 2.0, report.map, report.ap_mode)
        .unwrap();
    s.push_str("</svg>\n");
    s
}

/// Writes `pr_<class>.csv` for every class plus `pr_curves.svg`; returns the
/// written paths.
pub fn write_pr_curves(report: &EvalReport, out_dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| EvalError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut written = Vec::new();
    for c in &report.classes {
        let mut csv = String::from("recall,precision\n");
        for [r, p] in &c.pr {
            writeln!(csv, "{r},{p}").unwrap();
        }
        let path = out_dir.join(format!("pr_{}.csv", c.class.name()));
        fs::write(&path, csv).map_err(io(&path))?;
        written.push(path);
    }
    let svg = out_dir.join("pr_curves.svg");
    fs::write(&svg, pr_svg(report)).map_err(io(&svg))?;
    written.push(svg);
    Ok(written)
}
