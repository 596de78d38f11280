//! Detection metrics at a fixed IoU threshold: one-to-one greedy matching,
//! per-class average precision, mAP and precision/recall curves.
//!
//! Matching walks each class's detections by descending score (ties keep
//! input order). A detection is a true positive when an unmatched ground
//! truth box of the same class in the same image overlaps it with IoU at or
//! above the threshold; it claims the highest-IoU such box.

mod io;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    evaluate, load_detections, load_ground_truth, parse_detections, pr_svg, write_pr_curves, DetectionsFile, GroundTruthSet,
};

use crate::annotate::BBox;
use crate::scene::ShapeClass;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
    #[error("unknown class '{class}' in {context}")]
    UnknownClass { context: String, class: String },
    #[error("detection {index} refers to image '{image}' which has no ground truth")]
    ImageIdMismatch { index: usize, image: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image: String,
    pub class: ShapeClass,
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub image: String,
    pub class: ShapeClass,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ApMode {
    /// Area under the monotone precision envelope at every recall step.
    #[default]
    #[serde(rename = "allpoint")]
    AllPoint,
    /// Mean envelope precision at recall 0, 0.1, ..., 1.
    #[serde(rename = "11point")]
    ElevenPoint,
}

impl fmt::Display for ApMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApMode::AllPoint => "allpoint",
            ApMode::ElevenPoint => "11point",
        })
    }
}

impl FromStr for ApMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "allpoint" => Ok(ApMode::AllPoint),
            "11point" => Ok(ApMode::ElevenPoint),
            _ => Err(format!("unknown AP mode '{s}' (expected allpoint|11point)")),
        }
    }
}

/// Intersection over union of two half-open boxes; 0 for empty unions.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = a.xmax.min(b.xmax) - a.xmin.max(b.xmin);
    let ih = a.ymax.min(b.ymax) - a.ymin.max(b.ymin);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// One detection after matching, in rank order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledDetection {
    /// Position in the caller's detection list.
    pub index: usize,
    pub score: f64,
    pub true_positive: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassMatches {
    /// Sorted by descending score, ties in input order.
    pub detections: Vec<LabeledDetection>,
    pub gt_count: usize,
}

/// Matches detections against ground truth, per class. The result is
/// indexed by [`ShapeClass::code`].
pub fn match_detections(dets: &[Detection], gts: &[GroundTruth], threshold: f64) -> [ClassMatches; 3] {
    let mut out: [ClassMatches; 3] = Default::default();
    for class in ShapeClass::ALL {
        let slot = &mut out[class.code() as usize];
        let mut by_image: HashMap<&str, Vec<(BBox, bool)>> = HashMap::new();
        for g in gts.iter().filter(|g| g.class == class) {
            by_image.entry(g.image.as_str()).or_default().push((g.bbox, false));
            slot.gt_count += 1;
        }
        let mut order: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].class == class).collect();
        // stable: equal scores keep input order
        order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
        for i in order {
            let d = &dets[i];
            let mut best: Option<(usize, f64)> = None;
            if let Some(cands) = by_image.get(d.image.as_str()) {
                for (k, (bbox, taken)) in cands.iter().enumerate() {
                    if *taken {
                        continue;
                    }
                    let o = iou(&d.bbox, bbox);
                    if o >= threshold && best.is_none_or(|(_, b)| o > b) {
                        best = Some((k, o));
                    }
                }
            }
            if let Some((k, _)) = best {
                by_image.get_mut(d.image.as_str()).unwrap()[k].1 = true;
            }
            slot.detections.push(LabeledDetection { index: i, score: d.score, true_positive: best.is_some() });
        }
    }
    out
}

/// `(recall, precision)` after each detection in rank order.
pub fn pr_curve(ranked: &[LabeledDetection], gt_count: usize) -> Vec<[f64; 2]> {
    let mut tp = 0usize;
    ranked
        .iter()
        .enumerate()
        .map(|(i, d)| {
            tp += d.true_positive as usize;
            let recall = if gt_count == 0 { 0.0 } else { tp as f64 / gt_count as f64 };
            [recall, tp as f64 / (i + 1) as f64]
        })
        .collect()
}

/// Average precision of one class's ranked detections.
///
/// `None` when the class has neither ground truth nor detections (it is
/// left out of the mAP); `Some(0.0)` when there are detections but no
/// ground truth.
pub fn average_precision(ranked: &[LabeledDetection], gt_count: usize, mode: ApMode) -> Option<f64> {
    if gt_count == 0 {
        return if ranked.is_empty() { None } else { Some(0.0) };
    }
    let curve = pr_curve(ranked, gt_count);
    // envelope[i] = max precision at ranks >= i
    let mut envelope: Vec<f64> = curve.iter().map(|p| p[1]).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let ap = match mode {
        // recall steps by exactly 1/gt at each true positive and stays put
        // otherwise, so AP is the envelope summed over TP ranks over gt
        ApMode::AllPoint => {
            let mut best = (0usize, 1usize);
            let mut at_tp = Vec::new();
            let mut tp = ranked.iter().filter(|d| d.true_positive).count();
            for (i, d) in ranked.iter().enumerate().rev() {
                let here = (tp, i + 1);
                if ratio(here) > ratio(best) {
                    best = here;
                }
                if d.true_positive {
                    at_tp.push(best);
                    tp -= 1;
                }
            }
            exact_mean_of_ratios(&at_tp, gt_count)
        }
        ApMode::ElevenPoint => {
            let sum: f64 = (0..=10)
                .map(|k| {
                    let r = k as f64 / 10.0;
                    curve.iter().position(|p| p[0] >= r).map_or(0.0, |i| envelope[i])
                })
                .sum();
            sum / 11.0
        }
    };
    Some(ap.clamp(0.0, 1.0))
}

fn ratio((n, d): (usize, usize)) -> f64 {
    n as f64 / d as f64
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `sum(n / d) / m` in double-double, rounded once at the end, so results
/// such as 5/6 come out as the nearest double.
fn exact_mean_of_ratios(terms: &[(usize, usize)], m: usize) -> f64 {
    let (mut hi, mut lo) = (0.0, 0.0);
    for &(n, d) in terms {
        let (n, d) = (n as f64, d as f64);
        let q = n / d;
        let r = (-q).mul_add(d, n) / d;
        let (s, e) = two_sum(hi, q);
        hi = s;
        lo += e + r;
    }
    let (hi, lo) = two_sum(hi, lo);
    let m = m as f64;
    let q = hi / m;
    q + ((-q).mul_add(m, hi) + lo) / m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: ShapeClass,
    /// `null` when the class has neither ground truth nor detections.
    pub ap: Option<f64>,
    pub gt: usize,
    pub tp: usize,
    pub fp: usize,
    /// `(recall, precision)` pairs by descending score threshold.
    pub pr: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ap_mode: ApMode,
    pub iou_threshold: f64,
    pub images: usize,
    pub classes: Vec<ClassReport>,
    /// Mean of the per-class APs that are defined.
    pub map: f64,
}

impl EvalReport {
    pub fn class(&self, class: ShapeClass) -> &ClassReport {
        self.classes.iter().find(|c| c.class == class).expect("every class is reported")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut s = format!("mAP@{} ({}): {:.6}\n", self.iou_threshold, self.ap_mode, self.map);
        for c in &self.classes {
            let ap = c.ap.map_or("n/a".to_string(), |a| format!("{a:.6}"));
            s += &format!("  AP {:<9} {ap:>9}  gt={} tp={} fp={}\n", c.class.name(), c.gt, c.tp, c.fp);
        }
        s
    }
}

/// Full report for in-memory detections and ground truth.
pub fn evaluate_sets(dets: &[Detection], gts: &[GroundTruth], images: usize, mode: ApMode, threshold: f64) -> EvalReport {
    let matches = match_detections(dets, gts, threshold);
    let classes: Vec<ClassReport> = ShapeClass::ALL
        .into_iter()
        .map(|class| {
            let m = &matches[class.code() as usize];
            let tp = m.detections.iter().filter(|d| d.true_positive).count();
            ClassReport {
                class,
                ap: average_precision(&m.detections, m.gt_count, mode),
                gt: m.gt_count,
                tp,
                fp: m.detections.len() - tp,
                pr: pr_curve(&m.detections, m.gt_count),
            }
        })
        .collect();
    let defined: Vec<f64> = classes.iter().filter_map(|c| c.ap).collect();
    let map = if defined.is_empty() { 0.0 } else { defined.iter().sum::<f64>() / defined.len() as f64 };
    EvalReport { ap_mode: mode, iou_threshold: threshold, images, classes, map }
}
