//! Interval-censored maturity classification.
//!
//! A latent maturity `m ∈ [0, 1]` is observed only through a quantized class
//! label. The [`maturity`] module predicts a Beta distribution over `m` and
//! turns it into class probabilities by integrating the CDF over the class
//! intervals; [`specfun`] supplies the CDF and its shape gradients.
//! Around that sit the supporting pipelines: annotation agreement
//! ([`matchagree`]), adjacent-class label noise ([`noise`]), COCO-style
//! detection metrics ([`detmetrics`]), the interchange format ([`annio`]) and
//! a desk-scale training experiment ([`toytrain`]).

pub mod annio;
pub mod annotation;
pub mod detmetrics;
pub mod error;
pub mod matchagree;
pub mod maturity;
pub mod noise;
pub mod specfun;
pub mod toytrain;

pub use annio::{AnnotationFile, ClassMap};
pub use annotation::{AnnotationSet, BoundingBox, ImageAnnotations, Instance};
pub use detmetrics::{DetectionRecord, EvalResult};
pub use error::{Error, Result};
pub use matchagree::{ConfusionMatrix, MatchResult};
pub use noise::{Flip, NoiseSpec};
pub use maturity::{BetaParams, FocalConfig, ProbVector, ThresholdSchedule};
pub use specfun::ShapePair;
pub use toytrain::{ExperimentReport, HeadWeights, TrainConfig};
