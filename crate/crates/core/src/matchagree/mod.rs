//! Annotation agreement: IoU, optimal one-to-one box matching per image,
//! row-normalized confusion matrices and a synthetic annotator simulator.

mod confusion;
mod hungarian;
mod simulate;

pub use confusion::{class_names, ConfusionMatrix};
pub use hungarian::{hungarian, Assignment};
pub use simulate::{simulate_annotators, SimulatedAnnotations, FRUITS_PER_IMAGE, IMAGE_HEIGHT, IMAGE_WIDTH};

use std::collections::HashSet;

use serde::Serialize;

use crate::annotation::{AnnotationSet, BoundingBox, Instance};
use crate::error::{Error, Result};

/// Default IoU threshold for retaining a matched pair.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Intersection over union of two boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    /// Instance index in the reference (A) image.
    pub a: usize,
    /// Instance index in the target (B) image.
    pub b: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageMatch {
    pub image_id: u64,
    pub pairs: Vec<MatchedPair>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub iou_threshold: f64,
    pub images: Vec<ImageMatch>,
}

impl MatchResult {
    pub fn num_pairs(&self) -> usize {
        self.images.iter().map(|m| m.pairs.len()).sum()
    }

    pub fn num_unmatched_a(&self) -> usize {
        self.images.iter().map(|m| m.unmatched_a.len()).sum()
    }

    pub fn num_unmatched_b(&self) -> usize {
        self.images.iter().map(|m| m.unmatched_b.len()).sum()
    }
}

fn match_image(image_id: u64, a: &[Instance], b: &[Instance], threshold: f64) -> Result<ImageMatch> {
    if a.is_empty() || b.is_empty() {
        return Ok(ImageMatch {
            image_id,
            pairs: Vec::new(),
            unmatched_a: (0..a.len()).collect(),
            unmatched_b: (0..b.len()).collect(),
        });
    }
    let ious: Vec<Vec<f64>> = a
        .iter()
        .map(|ia| b.iter().map(|ib| iou(&ia.bbox, &ib.bbox)).collect())
        .collect();
    let cost: Vec<Vec<f64>> = ious.iter().map(|row| row.iter().map(|v| 1.0 - v).collect()).collect();
    let assignment = hungarian(&cost)?;

    let mut pairs = Vec::new();
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    for (r, c) in assignment.pairs {
        if ious[r][c] >= threshold {
            used_a[r] = true;
            used_b[c] = true;
            pairs.push(MatchedPair { a: r, b: c, iou: ious[r][c] });
        }
    }
    Ok(ImageMatch {
        image_id,
        pairs,
        unmatched_a: (0..a.len()).filter(|&i| !used_a[i]).collect(),
        unmatched_b: (0..b.len()).filter(|&i| !used_b[i]).collect(),
    })
}

/// Matches boxes of `a` to boxes of `b` image by image: Hungarian assignment
/// on 1 − IoU, then pairs below `iou_threshold` are dropped and their members
/// reported unmatched. Images present in only one set contribute only
/// unmatched entries. Output follows the image order of `a`, then the
/// images found only in `b`.
pub fn match_sets(a: &AnnotationSet, b: &AnnotationSet, iou_threshold: f64) -> Result<MatchResult> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::domain(format!("IoU threshold must lie in [0, 1], got {iou_threshold}")));
    }
    let mut images = Vec::new();
    let mut seen = HashSet::new();
    for img in &a.images {
        seen.insert(img.image_id);
        let other = b.image(img.image_id).map_or(&[][..], |o| &o.instances);
        images.push(match_image(img.image_id, &img.instances, other, iou_threshold)?);
    }
    for img in b.images.iter().filter(|img| !seen.contains(&img.image_id)) {
        images.push(match_image(img.image_id, &[], &img.instances, iou_threshold)?);
    }
    Ok(MatchResult { iou_threshold, images })
}

/// Confusion of reference labels (rows, from `a`) against target labels
/// (columns, from `b`) over the matched pairs.
pub fn confusion(result: &MatchResult, a: &AnnotationSet, b: &AnnotationSet) -> Result<ConfusionMatrix> {
    let k = a.num_classes.max(b.num_classes);
    let mut pairs = Vec::with_capacity(result.num_pairs());
    for m in &result.images {
        let lookup = |set: &AnnotationSet, idx: usize| -> Result<usize> {
            set.image(m.image_id)
                .and_then(|img| img.instances.get(idx))
                .map(|inst| inst.label)
                .ok_or_else(|| {
                    Error::validation(
                        format!("{}[image {}]", set.source_name, m.image_id),
                        format!("match refers to missing instance {idx}"),
                    )
                })
        };
        for p in &m.pairs {
            pairs.push((lookup(a, p.a)?, lookup(b, p.b)?));
        }
    }
    ConfusionMatrix::from_pairs(k, pairs)
}

/// The three pairwise comparisons between a reference labeling and two
/// annotators.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub reference_vs_a: ConfusionMatrix,
    pub reference_vs_b: ConfusionMatrix,
    pub a_vs_b: ConfusionMatrix,
    pub unmatched: [(usize, usize); 3],
}

pub fn three_way_agreement(
    reference: &AnnotationSet,
    a: &AnnotationSet,
    b: &AnnotationSet,
    iou_threshold: f64,
) -> Result<AgreementReport> {
    let run = |x: &AnnotationSet, y: &AnnotationSet| -> Result<(ConfusionMatrix, (usize, usize))> {
        let m = match_sets(x, y, iou_threshold)?;
        Ok((confusion(&m, x, y)?, (m.num_unmatched_a(), m.num_unmatched_b())))
    };
    let (ra, ua) = run(reference, a)?;
    let (rb, ub) = run(reference, b)?;
    let (ab, uab) = run(a, b)?;
    Ok(AgreementReport {
        reference_vs_a: ra,
        reference_vs_b: rb,
        a_vs_b: ab,
        unmatched: [ua, ub, uab],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::ImageAnnotations;
    use proptest::prelude::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    fn set(name: &str, images: Vec<(u64, Vec<(BoundingBox, usize)>)>) -> AnnotationSet {
        AnnotationSet::new(
            name,
            3,
            images
                .into_iter()
                .map(|(id, inst)| ImageAnnotations {
                    image_id: id,
                    instances: inst.into_iter().map(|(bbox, label)| Instance { bbox, label }).collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bx(5.0, 5.0, 1.0, 1.0)), 0.0);
        assert_eq!(iou(&a, &bx(2.0, 0.0, 1.0, 1.0)), 0.0, "touching edges");
        assert!((iou(&a, &bx(1.0, 0.0, 2.0, 2.0)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identical_sets_match_fully() {
        let s = set("s", vec![(1, vec![(bx(0.0, 0.0, 10.0, 10.0), 1), (bx(20.0, 0.0, 10.0, 10.0), 3)])]);
        let m = match_sets(&s, &s, 0.5).unwrap();
        assert_eq!(m.num_pairs(), 2);
        assert!(m.images[0].pairs.iter().all(|p| p.a == p.b && p.iou == 1.0));
    }

    #[test]
    fn one_sided_image_is_unmatched() {
        let a = set("a", vec![(7, vec![(bx(0.0, 0.0, 4.0, 4.0), 2)])]);
        let b = set("b", vec![]);
        let m = match_sets(&a, &b, 0.5).unwrap();
        assert_eq!(m.num_pairs(), 0);
        assert_eq!(m.images[0].unmatched_a, vec![0]);
        let m = match_sets(&b, &a, 0.5).unwrap();
        assert_eq!(m.images[0].unmatched_b, vec![0]);
    }

    #[test]
    fn crossed_geometry_picks_max_iou_sum() {
        // a0 overlaps both b's, a1 overlaps only b0: greedy a0→b0 would be worse.
        let a = set("a", vec![(1, vec![(bx(0.0, 0.0, 10.0, 10.0), 1), (bx(-6.0, 0.0, 10.0, 10.0), 1)])]);
        let b = set("b", vec![(1, vec![(bx(-2.0, 0.0, 10.0, 10.0), 1), (bx(3.0, 0.0, 10.0, 10.0), 1)])]);
        let ious = |i: usize, j: usize| iou(&a.images[0].instances[i].bbox, &b.images[0].instances[j].bbox);
        let straight = ious(0, 0) + ious(1, 1);
        let crossed = ious(0, 1) + ious(1, 0);
        let m = match_sets(&a, &b, 0.0).unwrap();
        let got: f64 = m.images[0].pairs.iter().map(|p| p.iou).sum();
        assert!((got - straight.max(crossed)).abs() < 1e-12);
        assert_eq!(m.images[0].pairs.iter().map(|p| (p.a, p.b)).collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn low_iou_pairs_are_dropped_after_assignment() {
        let a = set("a", vec![(1, vec![(bx(0.0, 0.0, 10.0, 10.0), 1)])]);
        let b = set("b", vec![(1, vec![(bx(6.0, 0.0, 10.0, 10.0), 2)])]);
        let m = match_sets(&a, &b, 0.5).unwrap();
        assert_eq!(m.num_pairs(), 0);
        assert_eq!((m.num_unmatched_a(), m.num_unmatched_b()), (1, 1));
        assert!(match_sets(&a, &b, 1.5).is_err());
    }

    #[test]
    fn confusion_from_matches() {
        let boxes: Vec<BoundingBox> = (0..4).map(|i| bx(20.0 * i as f64, 0.0, 10.0, 10.0)).collect();
        let a = set("a", vec![(1, boxes.iter().zip([1, 1, 2, 2]).map(|(b, l)| (*b, l)).collect())]);
        let b = set("b", vec![(1, boxes.iter().zip([1, 2, 2, 2]).map(|(b, l)| (*b, l)).collect())]);
        let cm = confusion(&match_sets(&a, &b, 0.5).unwrap(), &a, &b).unwrap();
        assert_eq!(cm.normalized[0], vec![50.0, 50.0, 0.0]);
        assert_eq!(cm.normalized[1], vec![0.0, 100.0, 0.0]);
        assert!(cm.empty_rows[2]);
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(
            x1 in -50.0f64..50.0, y1 in -50.0f64..50.0, w1 in 0.1f64..40.0, h1 in 0.1f64..40.0,
            x2 in -50.0f64..50.0, y2 in -50.0f64..50.0, w2 in 0.1f64..40.0, h2 in 0.1f64..40.0,
        ) {
            let a = bx(x1, y1, w1, h1);
            let b = bx(x2, y2, w2, h2);
            let v = iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&b, &a));
        }

        #[test]
        fn matching_respects_threshold(seed in 0u64..200, thr in 0.05f64..0.95) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut mk = |n: usize| -> Vec<(BoundingBox, usize)> {
                (0..n).map(|_| (bx(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0),
                    rng.random_range(5.0..15.0), rng.random_range(5.0..15.0)), 1)).collect()
            };
            let a = set("a", vec![(1, mk(6))]);
            let b = set("b", vec![(1, mk(5))]);
            let m = match_sets(&a, &b, thr).unwrap();
            let img = &m.images[0];
            prop_assert!(img.pairs.iter().all(|p| p.iou >= thr));
            let mut used_b: Vec<usize> = img.pairs.iter().map(|p| p.b).collect();
            used_b.sort_unstable();
            used_b.dedup();
            prop_assert_eq!(used_b.len(), img.pairs.len());
            prop_assert_eq!(img.pairs.len() + img.unmatched_a.len(), 6);
            prop_assert_eq!(img.pairs.len() + img.unmatched_b.len(), 5);
        }
    }
}
