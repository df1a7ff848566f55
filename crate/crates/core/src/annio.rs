//! The interchange format: a COCO-style JSON subset with `images`,
//! `categories` and `annotations`. An optional per-annotation `score` turns a
//! ground-truth file into a detection file.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationSet, BoundingBox, ImageAnnotations, Instance};
use crate::detmetrics::DetectionRecord;
use crate::error::{Error, Result};
use crate::matchagree::class_names;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: u64,
    pub width: u32,
    pub height: u32,
    pub file_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: u64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    /// `[x, y, width, height]`, top-left origin.
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub images: Vec<ImageInfo>,
    pub categories: Vec<Category>,
    pub annotations: Vec<AnnotationRecord>,
}

/// Category id ↔ 1-based class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    ids: Vec<u64>,
}

impl ClassMap {
    /// Classes in the given category-id order.
    pub fn explicit(ids: Vec<u64>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::config("class map is empty"));
        }
        let unique: HashSet<_> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(Error::config(format!("class map repeats a category id: {ids:?}")));
        }
        Ok(ClassMap { ids })
    }

    pub fn num_classes(&self) -> usize {
        self.ids.len()
    }

    pub fn class_of(&self, category_id: u64) -> Option<usize> {
        self.ids.iter().position(|&c| c == category_id).map(|i| i + 1)
    }

    pub fn category_of(&self, class: usize) -> Option<u64> {
        class.checked_sub(1).and_then(|i| self.ids.get(i)).copied()
    }

    pub fn category_ids(&self) -> &[u64] {
        &self.ids
    }
}

fn ann_path(i: usize, a: &AnnotationRecord) -> String {
    format!("annotations[{i}] (id {})", a.id)
}

impl AnnotationFile {
    /// Parses and validates UTF-8 JSON.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let file: AnnotationFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if inner.is_data() {
                Error::validation(path, inner.to_string())
            } else {
                Error::Json(inner)
            }
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(Error::validation("categories", "at least one category is required"));
        }
        let mut image_ids = HashSet::new();
        for (i, img) in self.images.iter().enumerate() {
            if !image_ids.insert(img.id) {
                return Err(Error::validation(format!("images[{i}].id"), format!("duplicate image id {}", img.id)));
            }
        }
        let mut cat_ids = HashSet::new();
        for (i, c) in self.categories.iter().enumerate() {
            if !cat_ids.insert(c.id) {
                return Err(Error::validation(format!("categories[{i}].id"), format!("duplicate category id {}", c.id)));
            }
        }
        let mut ann_ids = HashSet::new();
        for (i, a) in self.annotations.iter().enumerate() {
            let path = ann_path(i, a);
            if !ann_ids.insert(a.id) {
                return Err(Error::validation(format!("{path}.id"), "duplicate annotation id"));
            }
            if !image_ids.contains(&a.image_id) {
                return Err(Error::validation(
                    format!("{path}.image_id"),
                    format!("unknown image id {}", a.image_id),
                ));
            }
            if !cat_ids.contains(&a.category_id) {
                return Err(Error::validation(
                    format!("{path}.category_id"),
                    format!("unknown category id {}", a.category_id),
                ));
            }
            let [x, y, w, h] = a.bbox;
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::validation(format!("{path}.bbox"), "box origin must be finite"));
            }
            if !(w.is_finite() && w > 0.0 && h.is_finite() && h > 0.0) {
                return Err(Error::validation(
                    format!("{path}.bbox"),
                    format!("box width and height must be positive, got {w}x{h}"),
                ));
            }
            if let Some(s) = a.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::validation(format!("{path}.score"), format!("score {s} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Pretty-printed JSON with fixed key order and a trailing newline.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("annotation file serializes");
        out.push(b'\n');
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&bytes).map_err(|e| match e {
            Error::Validation { path: p, message } => Error::Validation {
                path: format!("{}: {p}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.serialize()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Classes by ascending category id.
    pub fn class_map(&self) -> ClassMap {
        let mut ids: Vec<u64> = self.categories.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        ClassMap { ids }
    }

    fn check_map(&self, map: &ClassMap) -> Result<()> {
        for (i, c) in self.categories.iter().enumerate() {
            if map.class_of(c.id).is_none() {
                return Err(Error::validation(
                    format!("categories[{i}]"),
                    format!("category id {} missing from the class map", c.id),
                ));
            }
        }
        Ok(())
    }

    /// Per-image instance lists: images in file order, each image's
    /// annotations in file order.
    fn grouped(&self) -> Vec<(u64, Vec<usize>)> {
        let mut slot: HashMap<u64, usize> = HashMap::new();
        let mut groups: Vec<(u64, Vec<usize>)> = Vec::with_capacity(self.images.len());
        for img in &self.images {
            slot.insert(img.id, groups.len());
            groups.push((img.id, Vec::new()));
        }
        for (i, a) in self.annotations.iter().enumerate() {
            groups[slot[&a.image_id]].1.push(i);
        }
        groups
    }

    pub fn to_annotation_set(&self, source_name: impl Into<String>, map: &ClassMap) -> Result<AnnotationSet> {
        self.check_map(map)?;
        let images = self
            .grouped()
            .into_iter()
            .map(|(image_id, idx)| {
                let instances = idx
                    .into_iter()
                    .map(|i| {
                        let a = &self.annotations[i];
                        let [x, y, w, h] = a.bbox;
                        Ok(Instance {
                            bbox: BoundingBox::new(x, y, w, h)?,
                            label: map.class_of(a.category_id).expect("checked above"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ImageAnnotations { image_id, instances })
            })
            .collect::<Result<Vec<_>>>()?;
        AnnotationSet::new(source_name, map.num_classes(), images)
    }

    /// Scored records; every annotation must carry a score.
    pub fn detections(&self, map: &ClassMap) -> Result<Vec<DetectionRecord>> {
        self.check_map(map)?;
        self.annotations
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let score = a
                    .score
                    .ok_or_else(|| Error::validation(format!("{}.score", ann_path(i, a)), "detections need a score"))?;
                let [x, y, w, h] = a.bbox;
                Ok(DetectionRecord {
                    image_id: a.image_id,
                    bbox: BoundingBox::new(x, y, w, h)?,
                    label: map.class_of(a.category_id).expect("checked above"),
                    score,
                })
            })
            .collect()
    }

    /// Copy with category ids rewritten from `set`, which must have been
    /// produced by [`to_annotation_set`](Self::to_annotation_set) on this
    /// file (same image and instance order). Nothing else changes.
    pub fn with_labels(&self, set: &AnnotationSet, map: &ClassMap) -> Result<Self> {
        let mut out = self.clone();
        let groups = self.grouped();
        if groups.len() != set.images.len() {
            return Err(Error::validation(&set.source_name, "image count differs from the file"));
        }
        for ((image_id, idx), img) in groups.into_iter().zip(&set.images) {
            if image_id != img.image_id || idx.len() != img.instances.len() {
                return Err(Error::validation(
                    format!("{}[image {image_id}]", set.source_name),
                    "instances do not line up with the file",
                ));
            }
            for (i, inst) in idx.into_iter().zip(&img.instances) {
                out.annotations[i].category_id = map.category_of(inst.label).ok_or_else(|| {
                    Error::validation(format!("{}[image {image_id}]", set.source_name), format!("no category for class {}", inst.label))
                })?;
            }
        }
        Ok(out)
    }

    /// A ground-truth file for `set`: categories 1..K with the stage names,
    /// every image `width`×`height`, annotation ids numbered from 1.
    pub fn from_annotation_set(set: &AnnotationSet, width: u32, height: u32) -> Self {
        let categories = class_names(set.num_classes)
            .into_iter()
            .enumerate()
            .map(|(i, name)| Category { id: i as u64 + 1, name })
            .collect();
        let images = set
            .images
            .iter()
            .map(|img| ImageInfo {
                id: img.image_id,
                width,
                height,
                file_name: format!("image_{:06}.jpg", img.image_id),
            })
            .collect();
        let annotations = set
            .images
            .iter()
            .flat_map(|img| img.instances.iter().map(move |inst| (img.image_id, inst)))
            .enumerate()
            .map(|(i, (image_id, inst))| AnnotationRecord {
                id: i as u64 + 1,
                image_id,
                category_id: inst.label as u64,
                bbox: inst.bbox.to_array(),
                score: None,
            })
            .collect();
        AnnotationFile { images, categories, annotations }
    }

    /// Seeded random partition of the images: `round(fraction · n)` go to
    /// the first part. Both parts keep the file's image and annotation order.
    pub fn split_images(&self, fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::domain(format!("split fraction must lie in [0, 1], got {fraction}")));
        }
        let mut order: Vec<usize> = (0..self.images.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_first = ((fraction * order.len() as f64).round() as usize).min(order.len());
        let first: HashSet<u64> = order[..n_first].iter().map(|&i| self.images[i].id).collect();
        let part = |keep: bool| AnnotationFile {
            images: self.images.iter().filter(|i| first.contains(&i.id) == keep).cloned().collect(),
            categories: self.categories.clone(),
            annotations: self
                .annotations
                .iter()
                .filter(|a| first.contains(&a.image_id) == keep)
                .cloned()
                .collect(),
        };
        Ok((part(true), part(false)))
    }
}
