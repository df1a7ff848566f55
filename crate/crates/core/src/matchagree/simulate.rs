use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::annotation::{AnnotationSet, BoundingBox, ImageAnnotations, Instance};
use crate::error::{Error, Result};
use crate::maturity::ThresholdSchedule;

/// Fruits placed per synthetic image (a 5×4 grid of 100 px cells).
pub const FRUITS_PER_IMAGE: usize = 20;
const GRID_COLS: usize = 5;
const CELL: f64 = 100.0;
/// Synthetic image size in pixels.
pub const IMAGE_WIDTH: u32 = 500;
pub const IMAGE_HEIGHT: u32 = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedAnnotations {
    pub baseline: AnnotationSet,
    pub annotator_a: AnnotationSet,
    pub annotator_b: AnnotationSet,
    /// Latent maturity of every fruit, in instance order.
    pub latent: Vec<f64>,
}

impl SimulatedAnnotations {
    pub fn sets(&self) -> [&AnnotationSet; 3] {
        [&self.baseline, &self.annotator_a, &self.annotator_b]
    }
}

/// Labels `n_fruits` fruits three times. The baseline quantizes the latent
/// maturity with `base`; each annotator quantizes it with the interior cuts
/// shifted by fresh N(0, jitter_sigma) draws for every decision. Shifts are
/// clamped to just under half the narrowest interval, so the cuts stay
/// ordered and a label can only move to an adjacent class. All three sets
/// share identical boxes.
pub fn simulate_annotators(
    n_fruits: usize,
    base: &ThresholdSchedule,
    jitter_sigma: f64,
    seed: u64,
) -> Result<SimulatedAnnotations> {
    if !(jitter_sigma.is_finite() && jitter_sigma >= 0.0) {
        return Err(Error::domain(format!("jitter sigma must be finite and >= 0, got {jitter_sigma}")));
    }
    let k = base.num_classes();
    let interior = base.interior();
    let max_shift = 0.499 * base.min_width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let jittered_label = |m: f64, rng: &mut ChaCha8Rng| -> usize {
        let mut label = 1;
        for &cut in interior {
            let z: f64 = rng.sample(StandardNormal);
            if m >= cut + (z * jitter_sigma).clamp(-max_shift, max_shift) {
                label += 1;
            }
        }
        label
    };

    let n_images = n_fruits.div_ceil(FRUITS_PER_IMAGE);
    let mut latent = Vec::with_capacity(n_fruits);
    let mut images = [Vec::with_capacity(n_images), Vec::with_capacity(n_images), Vec::with_capacity(n_images)];
    for img in 0..n_images {
        let count = FRUITS_PER_IMAGE.min(n_fruits - img * FRUITS_PER_IMAGE);
        let mut inst: [Vec<Instance>; 3] = Default::default();
        for slot in 0..count {
            let (col, row) = ((slot % GRID_COLS) as f64, (slot / GRID_COLS) as f64);
            let w = rng.random_range(40.0..90.0);
            let h = rng.random_range(40.0..90.0);
            let x = col * CELL + rng.random_range(0.0..CELL - w);
            let y = row * CELL + rng.random_range(0.0..CELL - h);
            let bbox = BoundingBox::new(x, y, w, h)?;
            let m: f64 = rng.random();
            latent.push(m);
            let labels = [base.classify(m), jittered_label(m, &mut rng), jittered_label(m, &mut rng)];
            for (set, label) in inst.iter_mut().zip(labels) {
                set.push(Instance { bbox, label });
            }
        }
        for (dst, instances) in images.iter_mut().zip(inst) {
            dst.push(ImageAnnotations {
                image_id: img as u64 + 1,
                instances,
            });
        }
    }
    let [base_imgs, a_imgs, b_imgs] = images;
    Ok(SimulatedAnnotations {
        baseline: AnnotationSet::new("Baseline", k, base_imgs)?,
        annotator_a: AnnotationSet::new("Annotator A", k, a_imgs)?,
        annotator_b: AnnotationSet::new("Annotator B", k, b_imgs)?,
        latent,
    })
}
