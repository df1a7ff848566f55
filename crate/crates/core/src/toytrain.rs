//! Desk-scale noise-robustness experiment: synthetic latent-maturity data,
//! a small MLP trained with either the Beta head or a softmax head, and the
//! clean-vs-noisy accuracy comparison.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationSet, BoundingBox, ImageAnnotations, Instance};
use crate::error::{Error, Result};
use crate::matchagree::ConfusionMatrix;
use crate::maturity::{self, argmax_lowest, focal_term, FocalConfig, ThresholdSchedule, LINK_EPSILON};
use crate::noise::{inject_noise, NoiseSpec};

// RNG streams derived from one seed.
const STREAM_TRAIN: u64 = 0;
const STREAM_VAL: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_INIT: u64 = 3;
const STREAM_SHUFFLE: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_dims: Vec<usize>,
    pub gamma: f64,
    pub lambda_weight: f64,
    pub thresholds: ThresholdSchedule,
    pub feature_noise_sigma: f64,
    pub distractors: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Keep the epoch with the best accuracy on the (clean) validation
    /// split instead of the last one.
    pub select_on_val: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            epochs: 100,
            batch_size: 8,
            learning_rate: 0.05,
            hidden_dims: vec![16],
            gamma: 2.0,
            lambda_weight: 1.0,
            thresholds: ThresholdSchedule::default(),
            feature_noise_sigma: 0.02,
            distractors: 3,
            n_train: 5000,
            n_val: 2000,
            n_test: 5000,
            select_on_val: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::config("hidden layer widths must be >= 1"));
        }
        if !(self.feature_noise_sigma.is_finite() && self.feature_noise_sigma >= 0.0) {
            return Err(Error::config(format!(
                "feature_noise_sigma must be >= 0, got {}",
                self.feature_noise_sigma
            )));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::config("train and test sizes must be >= 1"));
        }
        self.focal()?;
        Ok(())
    }

    pub fn focal(&self) -> Result<FocalConfig> {
        FocalConfig::new(self.gamma, self.lambda_weight)
    }

    pub fn num_features(&self) -> usize {
        1 + self.distractors
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticSample {
    pub latent_m: f64,
    pub features: Vec<f64>,
    pub clean_label: usize,
    pub observed_label: usize,
}

/// Inputs are validated up front, so a domain error while fitting means the
/// head's outputs overflowed.
fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Domain(_) => Error::Divergence { epoch },
        e => e,
    }
}

fn gen_stream(n: usize, config: &TrainConfig, stream: u64) -> Vec<SyntheticSample> {
    let mut rng = config.rng(stream);
    (0..n)
        .map(|_| {
            let m: f64 = rng.random();
            let mut features = Vec::with_capacity(config.num_features());
            let z: f64 = rng.sample(StandardNormal);
            features.push(m + config.feature_noise_sigma * z);
            for _ in 0..config.distractors {
                features.push(rng.sample(StandardNormal));
            }
            let label = config.thresholds.classify(m);
            SyntheticSample {
                latent_m: m,
                features,
                clean_label: label,
                observed_label: label,
            }
        })
        .collect()
}

/// `n` samples: m ~ U(0, 1), informative feature m + N(0, σ), then
/// `distractors` N(0, 1) features. Same config, same samples.
pub fn gen_synthetic(n: usize, config: &TrainConfig) -> Result<Vec<SyntheticSample>> {
    if n == 0 {
        return Err(Error::config("sample count must be >= 1"));
    }
    Ok(gen_stream(n, config, STREAM_TRAIN))
}

/// Train, validation and test splits drawn from independent streams.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub train: Vec<SyntheticSample>,
    pub val: Vec<SyntheticSample>,
    pub test: Vec<SyntheticSample>,
}

impl Dataset {
    pub fn generate(config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Dataset {
            train: gen_stream(config.n_train, config, STREAM_TRAIN),
            val: gen_stream(config.n_val, config, STREAM_VAL),
            test: gen_stream(config.n_test, config, STREAM_TEST),
        })
    }
}

/// Wraps samples as a one-image annotation set (dummy boxes) so the noise
/// injector can act on their observed labels.
pub fn as_annotation_set(samples: &[SyntheticSample], num_classes: usize) -> Result<AnnotationSet> {
    let instances = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(Instance {
                bbox: BoundingBox::new(i as f64, 0.0, 1.0, 1.0)?,
                label: s.observed_label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    AnnotationSet::new("train", num_classes, vec![ImageAnnotations { image_id: 1, instances }])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    /// Two raw outputs → Beta shapes → CDF class probabilities.
    Beta,
    /// K logits → softmax.
    Softmax,
}

impl HeadKind {
    fn outputs(self, k: usize) -> usize {
        match self {
            HeadKind::Beta => 2,
            HeadKind::Softmax => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// A tanh MLP with a linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadWeights {
    pub kind: HeadKind,
    pub layers: Vec<Layer>,
}

impl HeadWeights {
    /// Uniform ±1/√fan_in initialization.
    pub fn init(kind: HeadKind, inputs: usize, hidden: &[usize], num_classes: usize, rng: &mut impl Rng) -> Self {
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(kind.outputs(num_classes));
        let layers = sizes
            .windows(2)
            .map(|w| {
                let r = 1.0 / (w[0] as f64).sqrt();
                let mut draw = |n: usize| (0..n).map(|_| rng.random_range(-r..=r)).collect::<Vec<f64>>();
                let weights = draw(w[0] * w[1]);
                let bias = draw(w[1]);
                Layer { inputs: w[0], outputs: w[1], weights, bias }
            })
            .collect();
        HeadWeights { kind, layers }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All weights then biases, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params(), "parameter count");
        let mut off = 0;
        for l in &mut self.layers {
            let n = l.weights.len();
            l.weights.copy_from_slice(&params[off..off + n]);
            off += n;
            let n = l.bias.len();
            l.bias.copy_from_slice(&params[off..off + n]);
            off += n;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Activations of every layer, input first; the last entry is the raw
    /// output.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let input = acts.last().expect("input present");
            let out: Vec<f64> = (0..l.outputs)
                .map(|o| {
                    let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                    let z = l.bias[o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
                    if li == last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn raw_output(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).pop().expect("output layer")
    }

    /// Class probabilities for one feature vector.
    pub fn class_probs(&self, x: &[f64], thresholds: &ThresholdSchedule) -> Result<Vec<f64>> {
        let out = self.raw_output(x);
        match self.kind {
            HeadKind::Beta => {
                let params = maturity::link(out[0], out[1], LINK_EPSILON)?;
                Ok(maturity::class_probs(params, thresholds)?.as_slice().to_vec())
            }
            HeadKind::Softmax => Ok(softmax(&out)),
        }
    }

    /// 1-based predicted class, ties toward the lower class.
    pub fn predict(&self, x: &[f64], thresholds: &ThresholdSchedule) -> Result<usize> {
        let out = self.raw_output(x);
        match self.kind {
            HeadKind::Beta => maturity::predict_class(maturity::link(out[0], out[1], LINK_EPSILON)?, thresholds),
            HeadKind::Softmax => Ok(argmax_lowest(&out) + 1),
        }
    }

    /// Loss of one sample and its gradient w.r.t. the raw outputs.
    fn output_loss(&self, out: &[f64], label: usize, thresholds: &ThresholdSchedule, focal: &FocalConfig) -> Result<(f64, Vec<f64>)> {
        match self.kind {
            HeadKind::Beta => {
                let (loss, g) = maturity::loss_and_grad(out[0], out[1], label, thresholds, focal, LINK_EPSILON)?;
                Ok((loss, g.to_vec()))
            }
            HeadKind::Softmax => {
                let p = softmax(out);
                let py = p[label - 1];
                let (loss, dl_dp) = focal_term(py, focal.gamma);
                let grad = p
                    .iter()
                    .enumerate()
                    .map(|(j, &pj)| {
                        let delta = if j == label - 1 { 1.0 } else { 0.0 };
                        dl_dp * py * (delta - pj)
                    })
                    .collect();
                Ok((loss, grad))
            }
        }
    }

    /// λ-weighted mean focal loss over `batch` and its gradient in
    /// [`params`](Self::params) order.
    pub fn batch_loss_and_grad(
        &self,
        batch: &[&SyntheticSample],
        thresholds: &ThresholdSchedule,
        focal: &FocalConfig,
    ) -> Result<(f64, Vec<f64>)> {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> =
            self.layers.iter().map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()])).collect();
        let mut total = 0.0;
        for s in batch {
            let acts = self.forward(&s.features);
            let (loss, mut delta) = self.output_loss(acts.last().expect("output"), s.observed_label, thresholds, focal)?;
            total += loss;
            for li in (0..self.layers.len()).rev() {
                let l = &self.layers[li];
                let input = &acts[li];
                let (gw, gb) = &mut grads[li];
                for o in 0..l.outputs {
                    gb[o] += delta[o];
                    for (g, v) in gw[o * l.inputs..(o + 1) * l.inputs].iter_mut().zip(input) {
                        *g += delta[o] * v;
                    }
                }
                if li > 0 {
                    // Back through the tanh of the previous layer's output.
                    delta = (0..l.inputs)
                        .map(|i| {
                            let s: f64 = (0..l.outputs).map(|o| l.weights[o * l.inputs + i] * delta[o]).sum();
                            s * (1.0 - input[i] * input[i])
                        })
                        .collect();
                }
            }
        }
        let scale = focal.lambda_weight / batch.len() as f64;
        let flat = grads
            .into_iter()
            .flat_map(|(w, b)| w.into_iter().chain(b))
            .map(|g| g * scale)
            .collect();
        Ok((total * scale, flat))
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Trained weights plus the mean training loss of every epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub weights: HeadWeights,
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch gradient descent on the observed labels.
pub fn train_head(kind: HeadKind, data: &[SyntheticSample], config: &TrainConfig) -> Result<TrainOutcome> {
    fit(kind, data, None, config)
}

/// As [`train_head`]; with `config.select_on_val` the returned weights are
/// those of the epoch with the highest accuracy on `val` (earliest on ties).
pub fn train_head_with_val(
    kind: HeadKind,
    data: &[SyntheticSample],
    val: &[SyntheticSample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    fit(kind, data, Some(val), config)
}

fn fit(kind: HeadKind, data: &[SyntheticSample], val: Option<&[SyntheticSample]>, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::config("training data is empty"));
    }
    let focal = config.focal()?;
    let k = config.thresholds.num_classes();
    let inputs = data[0].features.len();
    if data.iter().any(|s| s.features.len() != inputs) {
        return Err(Error::config("samples disagree on feature count"));
    }
    let mut weights = HeadWeights::init(kind, inputs, &config.hidden_dims, k, &mut config.rng(STREAM_INIT));
    let mut shuffle_rng = config.rng(STREAM_SHUFFLE);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut params = weights.params();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let val = val.filter(|v| config.select_on_val && !v.is_empty());
    let mut best: Option<(f64, HeadWeights)> = match val {
        Some(v) => Some((evaluate_head(&weights, v, &config.thresholds)?.0, weights.clone())),
        None => None,
    };
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&SyntheticSample> = chunk.iter().map(|&i| &data[i]).collect();
            let (loss, grad) = weights.batch_loss_and_grad(&batch, &config.thresholds, &focal).map_err(diverged(epoch))?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            sum += loss * chunk.len() as f64;
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
            weights.set_params(&params);
        }
        let mean = sum / data.len() as f64;
        if !mean.is_finite() || !weights.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        epoch_losses.push(mean);
        if let (Some(v), Some((best_acc, best_w))) = (val, best.as_mut()) {
            let acc = evaluate_head(&weights, v, &config.thresholds).map_err(diverged(epoch))?.0;
            if acc > *best_acc {
                *best_acc = acc;
                *best_w = weights.clone();
            }
        }
    }
    if let Some((_, w)) = best {
        weights = w;
    }
    Ok(TrainOutcome { weights, epoch_losses })
}

pub fn train_beta_head(data: &[SyntheticSample], config: &TrainConfig) -> Result<TrainOutcome> {
    train_head(HeadKind::Beta, data, config)
}

pub fn train_softmax_head(data: &[SyntheticSample], config: &TrainConfig) -> Result<TrainOutcome> {
    train_head(HeadKind::Softmax, data, config)
}

/// Accuracy against the clean labels and the clean-vs-predicted confusion.
pub fn evaluate_head(weights: &HeadWeights, data: &[SyntheticSample], thresholds: &ThresholdSchedule) -> Result<(f64, ConfusionMatrix)> {
    let mut pairs = Vec::with_capacity(data.len());
    for s in data {
        pairs.push((s.clean_label, weights.predict(&s.features, thresholds)?));
    }
    let correct = pairs.iter().filter(|(a, b)| a == b).count();
    let acc = if data.is_empty() { 0.0 } else { correct as f64 / data.len() as f64 };
    Ok((acc, ConfusionMatrix::from_pairs(thresholds.num_classes(), pairs)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub flips: usize,
    pub clean_accuracy: f64,
    pub noisy_accuracy: f64,
}

impl SeedRun {
    pub fn drop(&self) -> f64 {
        self.clean_accuracy - self.noisy_accuracy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadSummary {
    pub head: HeadKind,
    pub runs: Vec<SeedRun>,
    pub mean_clean: f64,
    pub mean_noisy: f64,
    /// Mean of clean − noisy accuracy.
    pub mean_drop: f64,
    pub std_drop: f64,
    /// `mean_drop / mean_clean` in percent.
    pub pct_drop: f64,
    /// Test confusion (clean labels vs predictions) summed over seeds.
    pub clean_confusion: ConfusionMatrix,
    pub noisy_confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub noise_rate: f64,
    pub n_seeds: usize,
    pub config: TrainConfig,
    pub beta: HeadSummary,
    pub softmax: HeadSummary,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn add_counts(acc: &mut Option<Vec<Vec<u64>>>, cm: &ConfusionMatrix) {
    match acc {
        None => *acc = Some(cm.counts.clone()),
        Some(a) => {
            for (ra, rb) in a.iter_mut().zip(&cm.counts) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
        }
    }
}

struct HeadAccumulator {
    head: HeadKind,
    runs: Vec<SeedRun>,
    clean: Option<Vec<Vec<u64>>>,
    noisy: Option<Vec<Vec<u64>>>,
}

impl HeadAccumulator {
    fn finish(self, k: usize) -> HeadSummary {
        let clean: Vec<f64> = self.runs.iter().map(|r| r.clean_accuracy).collect();
        let noisy: Vec<f64> = self.runs.iter().map(|r| r.noisy_accuracy).collect();
        let drops: Vec<f64> = self.runs.iter().map(SeedRun::drop).collect();
        let (mean_clean, _) = mean_std(&clean);
        let (mean_noisy, _) = mean_std(&noisy);
        let (mean_drop, std_drop) = mean_std(&drops);
        let zero = || vec![vec![0; k]; k];
        HeadSummary {
            head: self.head,
            runs: self.runs,
            mean_clean,
            mean_noisy,
            mean_drop,
            std_drop,
            pct_drop: if mean_clean > 0.0 { 100.0 * mean_drop / mean_clean } else { 0.0 },
            clean_confusion: ConfusionMatrix::from_counts(self.clean.unwrap_or_else(zero)),
            noisy_confusion: ConfusionMatrix::from_counts(self.noisy.unwrap_or_else(zero)),
        }
    }
}

/// For seeds `config.seed + i`, i < n_seeds: trains both heads on the clean
/// training split and on a copy with `noise_rate` adjacent-class noise, and
/// scores all four models on the pristine test split. Within a seed the
/// clean and noisy runs share data, initialization and batch order.
pub fn run_noise_experiment(config: &TrainConfig, noise_rate: f64, n_seeds: usize) -> Result<ExperimentReport> {
    config.validate()?;
    NoiseSpec::new(noise_rate, 0)?;
    if n_seeds == 0 {
        return Err(Error::config("n_seeds must be >= 1"));
    }
    let k = config.thresholds.num_classes();
    let mut heads = [HeadKind::Beta, HeadKind::Softmax].map(|head| HeadAccumulator {
        head,
        runs: Vec::with_capacity(n_seeds),
        clean: None,
        noisy: None,
    });
    for i in 0..n_seeds {
        let cfg = TrainConfig {
            seed: config.seed.wrapping_add(i as u64),
            ..config.clone()
        };
        let data = Dataset::generate(&cfg)?;
        let (noisy_set, flips) = inject_noise(&as_annotation_set(&data.train, k)?, &NoiseSpec::new(noise_rate, cfg.seed)?)?;
        let mut noisy_train = data.train.clone();
        for (s, inst) in noisy_train.iter_mut().zip(&noisy_set.images[0].instances) {
            s.observed_label = inst.label;
        }
        for acc in &mut heads {
            let clean = train_head_with_val(acc.head, &data.train, &data.val, &cfg)?;
            let noisy = train_head_with_val(acc.head, &noisy_train, &data.val, &cfg)?;
            let (clean_accuracy, clean_cm) = evaluate_head(&clean.weights, &data.test, &cfg.thresholds)?;
            let (noisy_accuracy, noisy_cm) = evaluate_head(&noisy.weights, &data.test, &cfg.thresholds)?;
            add_counts(&mut acc.clean, &clean_cm);
            add_counts(&mut acc.noisy, &noisy_cm);
            acc.runs.push(SeedRun {
                seed: cfg.seed,
                flips: flips.len(),
                clean_accuracy,
                noisy_accuracy,
            });
        }
    }
    let [beta, softmax] = heads.map(|h| h.finish(k));
    Ok(ExperimentReport {
        noise_rate,
        n_seeds,
        config: config.clone(),
        beta,
        softmax,
    })
}

impl ExperimentReport {
    /// Aligned table with columns Clean, Noise, Abs. Drop, % Drop
    /// (accuracies in percent).
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Test accuracy, {} seeds, {:.0}% adjacent label noise",
            self.n_seeds,
            100.0 * self.noise_rate
        );
        let _ = writeln!(out, "{:<14}{:>9}{:>9}{:>11}{:>9}{:>12}", "Head", "Clean", "Noise", "Abs. Drop", "% Drop", "Drop s.d.");
        for (name, h) in [("Beta (ours)", &self.beta), ("Softmax", &self.softmax)] {
            let _ = writeln!(
                out,
                "{:<14}{:>9.2}{:>9.2}{:>11.2}{:>9.2}{:>12.2}",
                name,
                100.0 * h.mean_clean,
                100.0 * h.mean_noisy,
                100.0 * h.mean_drop,
                h.pct_drop,
                100.0 * h.std_drop
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TrainConfig {
        TrainConfig {
            n_train: 200,
            n_val: 10,
            n_test: 200,
            epochs: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_noise_features_equal_latent() {
        let cfg = TrainConfig { feature_noise_sigma: 0.0, ..small() };
        let data = gen_synthetic(100, &cfg).unwrap();
        assert!(data.iter().all(|s| s.features[0] == s.latent_m && s.features.len() == 4));
        assert!(data.iter().all(|s| s.clean_label == cfg.thresholds.classify(s.latent_m)));
        assert_eq!(data, gen_synthetic(100, &cfg).unwrap());
        assert!(gen_synthetic(0, &cfg).is_err());
    }

    #[test]
    fn splits_are_independent() {
        let d = Dataset::generate(&small()).unwrap();
        assert_ne!(d.train[0].latent_m, d.test[0].latent_m);
        assert_eq!(d.train, gen_synthetic(200, &small()).unwrap());
    }

    #[test]
    fn zero_epochs_returns_init() {
        let cfg = TrainConfig { epochs: 0, ..small() };
        let data = gen_synthetic(50, &cfg).unwrap();
        for kind in [HeadKind::Beta, HeadKind::Softmax] {
            let out = train_head(kind, &data, &cfg).unwrap();
            let init = HeadWeights::init(kind, 4, &cfg.hidden_dims, 3, &mut cfg.rng(STREAM_INIT));
            assert_eq!(out.weights, init);
            assert!(out.epoch_losses.is_empty());
        }
    }

    #[test]
    fn deterministic_and_loss_decreases() {
        let cfg = small();
        let data = gen_synthetic(200, &cfg).unwrap();
        for kind in [HeadKind::Beta, HeadKind::Softmax] {
            let a = train_head(kind, &data, &cfg).unwrap();
            let b = train_head(kind, &data, &cfg).unwrap();
            assert_eq!(a, b);
            assert!(a.epoch_losses.last().unwrap() <= &a.epoch_losses[0]);
        }
    }

    #[test]
    fn divergence_is_reported() {
        // A linear head with an absurd step overflows the logits.
        let cfg = TrainConfig { learning_rate: f64::MAX, hidden_dims: vec![], epochs: 20, ..small() };
        let mut data = gen_synthetic(50, &cfg).unwrap();
        for s in &mut data {
            s.features.iter_mut().for_each(|v| *v *= 100.0);
        }
        match train_head(HeadKind::Softmax, &data, &cfg) {
            Err(Error::Divergence { epoch }) => assert!(epoch < 20),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut w = HeadWeights::init(HeadKind::Softmax, 4, &[5, 3], 3, &mut rng);
        assert_eq!(w.num_params(), 4 * 5 + 5 + 5 * 3 + 3 + 3 * 3 + 3);
        let p: Vec<f64> = (0..w.num_params()).map(|i| i as f64).collect();
        w.set_params(&p);
        assert_eq!(w.params(), p);
        let r = 1.0 / 2.0;
        let w = HeadWeights::init(HeadKind::Beta, 4, &[16], 3, &mut rng);
        assert!(w.layers[0].weights.iter().all(|v| v.abs() <= r));
        assert_eq!(w.layers[1].outputs, 2);
    }

    #[test]
    fn bad_config_rejected() {
        let data = gen_synthetic(10, &small()).unwrap();
        for cfg in [
            TrainConfig { batch_size: 0, ..small() },
            TrainConfig { learning_rate: -1.0, ..small() },
            TrainConfig { hidden_dims: vec![0], ..small() },
            TrainConfig { gamma: -1.0, ..small() },
        ] {
            assert!(matches!(train_head(HeadKind::Beta, &data, &cfg), Err(Error::Config(_))));
        }
        assert!(train_head(HeadKind::Beta, &[], &small()).is_err());
        assert!(run_noise_experiment(&small(), 1.5, 1).is_err());
        assert!(run_noise_experiment(&small(), 0.1, 0).is_err());
    }

    #[test]
    fn zero_noise_means_zero_drop() {
        let r = run_noise_experiment(&small(), 0.0, 2).unwrap();
        for h in [&r.beta, &r.softmax] {
            assert!(h.runs.iter().all(|run| run.clean_accuracy == run.noisy_accuracy && run.flips == 0));
            assert_eq!(h.mean_drop, 0.0);
        }
        assert!(r.to_table().contains("% Drop"));
        assert!(r.to_json().contains("\"mean_drop\""));
    }

    #[test]
    fn noisy_runs_flip_ten_percent() {
        let r = run_noise_experiment(&small(), 0.1, 1).unwrap();
        assert_eq!(r.beta.runs[0].flips, 20);
    }
}
