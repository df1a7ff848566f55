//! COCO-protocol detection metrics: AP with 101-point interpolation,
//! mAP50, mAP50–95 and AR@100, following the reference evaluator's
//! matching and accumulation order exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::annotation::{AnnotationSet, BoundingBox};
use crate::error::{Error, Result};
use crate::matchagree::{class_names, iou};

/// Detections kept per image and class.
pub const MAX_DETECTIONS: usize = 100;
const RECALL_POINTS: usize = 101;

/// A scored box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub image_id: u64,
    pub bbox: BoundingBox,
    /// 1-based class.
    pub label: usize,
    pub score: f64,
}

/// The ten COCO thresholds 0.50, 0.55, …, 0.95, bit-compatible with the
/// reference evaluator's `linspace`.
pub fn coco_iou_thresholds() -> Vec<f64> {
    let step = (0.95 - 0.5) / 9.0;
    let mut t: Vec<f64> = (0..10).map(|i| i as f64 * step + 0.5).collect();
    t[9] = 0.95;
    t
}

fn recall_thresholds() -> [f64; RECALL_POINTS] {
    let mut r = [0.0; RECALL_POINTS];
    for (i, v) in r.iter_mut().enumerate() {
        *v = i as f64 * 0.01;
    }
    r[RECALL_POINTS - 1] = 1.0;
    r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassEval {
    pub class: usize,
    pub name: String,
    pub num_gt: usize,
    pub num_dets: usize,
    /// AP per threshold of [`EvalResult::iou_thresholds`].
    pub ap: Vec<f64>,
    /// Final recall per threshold.
    pub recall: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub iou_thresholds: Vec<f64>,
    /// Classes with at least one ground truth; the others are skipped.
    pub per_class: Vec<ClassEval>,
    pub map50: f64,
    pub map50_95: f64,
    pub ar100: f64,
}

impl EvalResult {
    /// mAP at one of the evaluated thresholds, e.g. 0.75.
    pub fn map_at(&self, threshold: f64) -> Option<f64> {
        let t = self.iou_thresholds.iter().position(|&v| (v - threshold).abs() < 1e-9)?;
        Some(mean(self.per_class.iter().map(|c| c.ap[t])))
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14}{:>8}{:>8}{:>10}{:>12}{:>10}", "Class", "GT", "Dets", "mAP50", "mAP50-95", "AR@100");
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:<14}{:>8}{:>8}{:>10.3}{:>12.3}{:>10.3}",
                c.name,
                c.num_gt,
                c.num_dets,
                c.ap[0],
                mean(c.ap.iter().copied()),
                mean(c.recall.iter().copied())
            );
        }
        let _ = writeln!(
            out,
            "{:<14}{:>8}{:>8}{:>10.3}{:>12.3}{:>10.3}",
            "all",
            self.per_class.iter().map(|c| c.num_gt).sum::<usize>(),
            self.per_class.iter().map(|c| c.num_dets).sum::<usize>(),
            self.map50,
            self.map50_95,
            self.ar100
        );
        out
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

struct Grouped<'a> {
    /// Image ids in ascending order.
    images: Vec<u64>,
    dets: HashMap<(u64, usize), Vec<&'a DetectionRecord>>,
}

fn group<'a>(dets: &'a [DetectionRecord], gts: &AnnotationSet) -> Result<Grouped<'a>> {
    let mut images: Vec<u64> = gts.images.iter().map(|i| i.image_id).collect();
    images.sort_unstable();
    let mut map: HashMap<(u64, usize), Vec<&DetectionRecord>> = HashMap::new();
    for (i, d) in dets.iter().enumerate() {
        if !(0.0..=1.0).contains(&d.score) {
            return Err(Error::validation(format!("detections[{i}].score"), format!("score {} outside [0, 1]", d.score)));
        }
        if d.label == 0 || d.label > gts.num_classes {
            return Err(Error::validation(
                format!("detections[{i}].label"),
                format!("label {} outside 1..={}", d.label, gts.num_classes),
            ));
        }
        if images.binary_search(&d.image_id).is_err() {
            return Err(Error::validation(
                format!("detections[{i}].image_id"),
                format!("image {} is not in the ground truth", d.image_id),
            ));
        }
        map.entry((d.image_id, d.label)).or_default().push(d);
    }
    for v in map.values_mut() {
        // Stable: equal scores keep input order.
        v.sort_by(|a, b| b.score.total_cmp(&a.score));
        v.truncate(MAX_DETECTIONS);
    }
    Ok(Grouped { images, dets: map })
}

/// Per-threshold (AP, final recall) for one class, or `None` without
/// ground truth.
fn eval_class(g: &Grouped, gts: &AnnotationSet, class: usize, thresholds: &[f64]) -> Option<(Vec<f64>, Vec<f64>, usize, usize)> {
    let nt = thresholds.len();
    let mut scores = Vec::new();
    // matched[t] parallel to scores
    let mut matched: Vec<Vec<bool>> = vec![Vec::new(); nt];
    let mut num_gt = 0;
    for &image_id in &g.images {
        let gt_boxes: Vec<BoundingBox> = gts
            .image(image_id)
            .map(|img| img.instances.iter().filter(|i| i.label == class).map(|i| i.bbox).collect())
            .unwrap_or_default();
        num_gt += gt_boxes.len();
        let Some(dets) = g.dets.get(&(image_id, class)) else { continue };
        for (t, &thr) in thresholds.iter().enumerate() {
            let mut gt_taken = vec![false; gt_boxes.len()];
            for d in dets {
                let mut best = thr.min(1.0 - 1e-10);
                let mut m = None;
                for (j, gb) in gt_boxes.iter().enumerate() {
                    if gt_taken[j] {
                        continue;
                    }
                    let v = iou(&d.bbox, gb);
                    if v < best {
                        continue;
                    }
                    best = v;
                    m = Some(j);
                }
                if let Some(j) = m {
                    gt_taken[j] = true;
                }
                matched[t].push(m.is_some());
            }
        }
        scores.extend(dets.iter().map(|d| d.score));
    }
    if num_gt == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let rec_thr = recall_thresholds();

    let mut aps = Vec::with_capacity(nt);
    let mut recalls = Vec::with_capacity(nt);
    for m in &matched {
        let (mut tp, mut fp) = (0.0f64, 0.0f64);
        let mut rc = Vec::with_capacity(order.len());
        let mut pr = Vec::with_capacity(order.len());
        for &i in &order {
            if m[i] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            rc.push(tp / num_gt as f64);
            pr.push(tp / (fp + tp + f64::EPSILON));
        }
        recalls.push(rc.last().copied().unwrap_or(0.0));
        for i in (1..pr.len()).rev() {
            if pr[i] > pr[i - 1] {
                pr[i - 1] = pr[i];
            }
        }
        let mut q = [0.0; RECALL_POINTS];
        for (slot, &r) in q.iter_mut().zip(&rec_thr) {
            let idx = rc.partition_point(|&v| v < r);
            match pr.get(idx) {
                Some(&p) => *slot = p,
                None => break,
            }
        }
        aps.push(q.iter().sum::<f64>() / RECALL_POINTS as f64);
    }
    Some((aps, recalls, num_gt, scores.len()))
}

/// AP of one class at one IoU threshold; `None` when the class has no
/// ground truth.
pub fn average_precision(dets: &[DetectionRecord], gts: &AnnotationSet, class: usize, iou_threshold: f64) -> Result<Option<f64>> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::domain(format!("IoU threshold must lie in [0, 1], got {iou_threshold}")));
    }
    let g = group(dets, gts)?;
    Ok(eval_class(&g, gts, class, &[iou_threshold]).map(|(ap, ..)| ap[0]))
}

/// Full evaluation over the COCO thresholds. Classes without ground truth
/// are left out of every average; with none at all, every metric is 0.
pub fn evaluate(dets: &[DetectionRecord], gts: &AnnotationSet) -> Result<EvalResult> {
    let thresholds = coco_iou_thresholds();
    let g = group(dets, gts)?;
    let names = class_names(gts.num_classes);
    let per_class: Vec<ClassEval> = (1..=gts.num_classes)
        .filter_map(|class| {
            eval_class(&g, gts, class, &thresholds).map(|(ap, recall, num_gt, num_dets)| ClassEval {
                class,
                name: names[class - 1].clone(),
                num_gt,
                num_dets,
                ap,
                recall,
            })
        })
        .collect();
    Ok(EvalResult {
        map50: mean(per_class.iter().map(|c| c.ap[0])),
        map50_95: mean(per_class.iter().flat_map(|c| c.ap.iter().copied())),
        ar100: mean(per_class.iter().flat_map(|c| c.recall.iter().copied())),
        iou_thresholds: thresholds,
        per_class,
    })
}
