//! Boxes and labeled annotation sets shared by matching, noise injection and
//! evaluation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box, top-left corner plus size, in image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::domain(format!("box origin must be finite, got ({x}, {y})")));
        }
        if !(w.is_finite() && w > 0.0 && h.is_finite() && h > 0.0) {
            return Err(Error::domain(format!("box size must be positive, got {w}x{h}")));
        }
        Ok(BoundingBox { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }
}

/// One labeled object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance {
    pub bbox: BoundingBox,
    /// 1-based class.
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageAnnotations {
    pub image_id: u64,
    pub instances: Vec<Instance>,
}

/// All boxes and labels produced by one source (an annotator, a reference
/// labeling, a model) over a collection of images.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub source_name: String,
    pub num_classes: usize,
    pub images: Vec<ImageAnnotations>,
}

impl AnnotationSet {
    pub fn new(source_name: impl Into<String>, num_classes: usize, images: Vec<ImageAnnotations>) -> Result<Self> {
        let set = AnnotationSet {
            source_name: source_name.into(),
            num_classes,
            images,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::validation(&self.source_name, "annotation set has no classes"));
        }
        let mut seen = HashSet::new();
        for (i, img) in self.images.iter().enumerate() {
            if !seen.insert(img.image_id) {
                return Err(Error::validation(
                    format!("{}.images[{i}]", self.source_name),
                    format!("duplicate image id {}", img.image_id),
                ));
            }
            for (j, inst) in img.instances.iter().enumerate() {
                if inst.label == 0 || inst.label > self.num_classes {
                    return Err(Error::validation(
                        format!("{}.images[{i}].instances[{j}]", self.source_name),
                        format!("label {} outside 1..={}", inst.label, self.num_classes),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn image(&self, image_id: u64) -> Option<&ImageAnnotations> {
        self.images.iter().find(|img| img.image_id == image_id)
    }

    /// Total number of instances across all images.
    pub fn len(&self) -> usize {
        self.images.iter().map(|img| img.instances.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Labels in image order, then instance order.
    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.images.iter().flat_map(|img| img.instances.iter().map(|i| i.label))
    }
}
