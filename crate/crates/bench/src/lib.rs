//! Fixtures shared by the criterion benches.

use latmat_core::detmetrics::DetectionRecord;
use latmat_core::matchagree::simulate_annotators;
use latmat_core::{AnnotationSet, ThresholdSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Square cost matrix with entries uniform on [0, 1).
pub fn cost_matrix(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..n).map(|_| rng.random()).collect()).collect()
}

/// Simulated ground truth plus scored detections taken from a jittered
/// annotator, with a fraction of labels and boxes disturbed.
pub fn detection_fixture(n_fruits: usize, seed: u64) -> (Vec<DetectionRecord>, AnnotationSet) {
    let sim = simulate_annotators(n_fruits, &ThresholdSchedule::default(), 0.05, seed).expect("valid simulation");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dets = Vec::new();
    for img in &sim.annotator_a.images {
        for inst in &img.instances {
            let mut bbox = inst.bbox;
            bbox.x += rng.random_range(-0.2..0.2) * bbox.w;
            bbox.y += rng.random_range(-0.2..0.2) * bbox.h;
            dets.push(DetectionRecord { image_id: img.image_id, bbox, label: inst.label, score: rng.random() });
        }
    }
    (dets, sim.baseline)
}
