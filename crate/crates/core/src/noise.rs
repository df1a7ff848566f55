//! Symmetric adjacent-class label noise. A fixed-size random subset of
//! instances moves to a neighboring class; boxes and image ids are untouched.

use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotation::AnnotationSet;
use crate::error::{Error, Result};

/// Default fraction of instances to corrupt.
pub const DEFAULT_NOISE_RATE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub rate: f64,
    pub seed: u64,
    /// Apply the rate within each class separately instead of globally.
    #[serde(default)]
    pub per_class: bool,
}

impl NoiseSpec {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        let spec = NoiseSpec { rate, seed, per_class: false };
        spec.validate()?;
        Ok(spec)
    }

    pub fn per_class(mut self, on: bool) -> Self {
        self.per_class = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::domain(format!("noise rate must lie in [0, 1], got {}", self.rate)));
        }
        Ok(())
    }

    /// Number of flips for a population of `n`: round(rate · n), halves away
    /// from zero.
    pub fn flip_count(&self, n: usize) -> usize {
        ((self.rate * n as f64).round() as usize).min(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flip {
    pub image_id: u64,
    /// Instance index within the image.
    pub index: usize,
    pub old: usize,
    pub new: usize,
}

/// Flip log as CSV, header `image_id,index,old_label,new_label`.
pub fn flip_log_csv(flips: &[Flip]) -> String {
    let mut out = String::from("image_id,index,old_label,new_label\n");
    for f in flips {
        let _ = writeln!(out, "{},{},{},{}", f.image_id, f.index, f.old, f.new);
    }
    out
}

fn adjacent(label: usize, k: usize, rng: &mut impl Rng) -> usize {
    if label == 1 {
        2
    } else if label == k {
        k - 1
    } else if rng.random_bool(0.5) {
        label - 1
    } else {
        label + 1
    }
}

/// Corrupts round(rate · N) instances chosen uniformly without replacement
/// (per class when `spec.per_class`). Returns the noisy copy and the flip log
/// in image, then instance order.
pub fn inject_noise(annotations: &AnnotationSet, spec: &NoiseSpec) -> Result<(AnnotationSet, Vec<Flip>)> {
    spec.validate()?;
    annotations.validate()?;
    let k = annotations.num_classes;
    let slots: Vec<(usize, usize, usize)> = annotations
        .images
        .iter()
        .enumerate()
        .flat_map(|(i, img)| img.instances.iter().enumerate().map(move |(j, inst)| (i, j, inst.label)))
        .collect();
    if k < 2 && spec.flip_count(slots.len()) > 0 {
        return Err(Error::domain("adjacent-class noise needs at least 2 classes"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups: Vec<Vec<usize>> = if spec.per_class {
        (1..=k)
            .map(|c| (0..slots.len()).filter(|&s| slots[s].2 == c).collect())
            .collect()
    } else {
        vec![(0..slots.len()).collect()]
    };
    let mut chosen = Vec::new();
    for group in &groups {
        let n = spec.flip_count(group.len());
        chosen.extend(index::sample(&mut rng, group.len(), n).into_iter().map(|i| group[i]));
    }
    chosen.sort_unstable();

    let mut noisy = annotations.clone();
    let mut flips = Vec::with_capacity(chosen.len());
    for s in chosen {
        let (i, j, old) = slots[s];
        let new = adjacent(old, k, &mut rng);
        noisy.images[i].instances[j].label = new;
        flips.push(Flip {
            image_id: annotations.images[i].image_id,
            index: j,
            old,
            new,
        });
    }
    Ok((noisy, flips))
}

/// Flips per (old, new) class pair, 1-based, as a K×K count table.
pub fn flip_counts(flips: &[Flip], k: usize) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0; k]; k];
    for f in flips {
        counts[f.old - 1][f.new - 1] += 1;
    }
    counts
}
