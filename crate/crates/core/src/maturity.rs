//! Probabilistic maturity head: softplus link to Beta shapes, class
//! probabilities as CDF mass over threshold intervals, focal loss on those
//! probabilities and its gradient with respect to the raw head outputs.
//!
//! Class labels are 1-based (`1..=K`) at every public boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{self, softplus, softplus_deriv, ShapePair};

/// Offset added after softplus so both shapes stay away from zero.
pub const LINK_EPSILON: f64 = 0.01;
/// Floor applied to the target-class probability before taking its log.
pub const PROB_FLOOR: f64 = 1e-12;
/// Class probabilities closer than this count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Beta shapes produced by the link, together with the raw outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub raw1: f64,
    pub raw2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl BetaParams {
    pub fn shape(&self) -> ShapePair {
        ShapePair {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

impl From<BetaParams> for ShapePair {
    fn from(p: BetaParams) -> Self {
        p.shape()
    }
}

impl From<&BetaParams> for ShapePair {
    fn from(p: &BetaParams) -> Self {
        p.shape()
    }
}

/// α = softplus(raw1) + ε, β = softplus(raw2) + ε.
pub fn link(raw1: f64, raw2: f64, epsilon: f64) -> Result<BetaParams> {
    if !raw1.is_finite() || !raw2.is_finite() {
        return Err(Error::domain(format!("raw head outputs must be finite, got ({raw1}, {raw2})")));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::domain(format!("link epsilon must be positive, got {epsilon}")));
    }
    Ok(BetaParams {
        raw1,
        raw2,
        alpha: softplus(raw1) + epsilon,
        beta: softplus(raw2) + epsilon,
        epsilon,
    })
}

/// Cut points τ₀ = 0 < τ₁ < … < τ_K = 1 quantizing latent maturity into K classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdSchedule {
    cuts: Vec<f64>,
}

impl ThresholdSchedule {
    /// Builds a schedule from all K + 1 cut points including both ends.
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        if cuts.len() < 3 {
            return Err(Error::config(format!(
                "a threshold schedule needs at least 3 cut points (K >= 2), got {}",
                cuts.len()
            )));
        }
        if cuts[0] != 0.0 || cuts[cuts.len() - 1] != 1.0 {
            return Err(Error::config("threshold schedule must start at 0 and end at 1"));
        }
        if cuts.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::config(format!("cut points must be strictly increasing: {cuts:?}")));
        }
        Ok(ThresholdSchedule { cuts })
    }

    /// Builds a schedule from the interior cuts τ₁..τ_{K−1} only.
    pub fn from_interior(interior: &[f64]) -> Result<Self> {
        let mut cuts = Vec::with_capacity(interior.len() + 2);
        cuts.push(0.0);
        cuts.extend_from_slice(interior);
        cuts.push(1.0);
        Self::new(cuts)
    }

    /// K equal-width intervals.
    pub fn equal(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::config(format!("need K >= 2 classes, got {k}")));
        }
        Self::new((0..=k).map(|i| i as f64 / k as f64).collect())
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn interior(&self) -> &[f64] {
        &self.cuts[1..self.cuts.len() - 1]
    }

    pub fn num_classes(&self) -> usize {
        self.cuts.len() - 1
    }

    /// Smallest interval width.
    pub fn min_width(&self) -> f64 {
        self.cuts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// The mirrored schedule τ'_k = 1 − τ_{K−k}.
    pub fn reversed(&self) -> Self {
        ThresholdSchedule {
            cuts: self.cuts.iter().rev().map(|c| 1.0 - c).collect(),
        }
    }

    /// 1-based class whose interval [τ_{k−1}, τ_k) contains `m`; m = 1 maps to K.
    pub fn classify(&self, m: f64) -> usize {
        let k = self.num_classes();
        self.cuts[1..k].iter().take_while(|&&c| m >= c).count() + 1
    }
}

impl Default for ThresholdSchedule {
    fn default() -> Self {
        ThresholdSchedule::equal(3).expect("3 classes")
    }
}

impl TryFrom<Vec<f64>> for ThresholdSchedule {
    type Error = Error;
    fn try_from(cuts: Vec<f64>) -> Result<Self> {
        ThresholdSchedule::new(cuts)
    }
}

impl From<ThresholdSchedule> for Vec<f64> {
    fn from(t: ThresholdSchedule) -> Self {
        t.cuts
    }
}

/// Class probabilities p_1..p_K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Checks entries lie in [0, 1] and sum to 1 within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::domain("a probability vector needs at least 2 classes"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::domain(format!("probabilities must lie in [0, 1]: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ProbVector(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Probability of a 1-based class.
    pub fn get(&self, label: usize) -> Option<f64> {
        label.checked_sub(1).and_then(|i| self.0.get(i)).copied()
    }

    /// 1-based argmax; ties (within [`TIE_TOLERANCE`]) go to the lower class.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] + TIE_TOLERANCE {
                best = i;
            }
        }
        best + 1
    }
}

/// 0-based argmax with ties broken toward the lowest index.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// CDF mass of the Beta distribution over each threshold interval.
pub fn class_probs(params: impl Into<ShapePair>, thresholds: &ThresholdSchedule) -> Result<ProbVector> {
    let shape = params.into();
    let shape = ShapePair::new(shape.alpha, shape.beta)?;
    let cuts = thresholds.cuts();
    let mut lower = Vec::with_capacity(cuts.len());
    let mut upper = Vec::with_capacity(cuts.len());
    for &c in cuts {
        lower.push(specfun::reg_inc_beta(c, shape)?);
        upper.push(specfun::reg_inc_beta_complement(c, shape)?);
    }
    Ok(ProbVector(interval_masses(&lower, &upper)))
}

/// Differences of the CDF over consecutive cuts. Intervals in the upper
/// half of the distribution are differenced on the upper tail, where the
/// values carry full relative precision.
fn interval_masses(lower: &[f64], upper: &[f64]) -> Vec<f64> {
    (1..lower.len())
        .map(|k| {
            let p = if lower[k - 1] > 0.5 {
                upper[k - 1] - upper[k]
            } else {
                lower[k] - lower[k - 1]
            };
            p.clamp(0.0, 1.0)
        })
        .collect()
}

/// Focal-loss settings: focusing exponent γ and the weight λ applied to the
/// focal term in the total training loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalConfig {
    pub gamma: f64,
    pub lambda_weight: f64,
}

impl FocalConfig {
    pub fn new(gamma: f64, lambda_weight: f64) -> Result<Self> {
        let cfg = FocalConfig { gamma, lambda_weight };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.lambda_weight.is_finite() && self.lambda_weight > 0.0) {
            return Err(Error::config(format!(
                "lambda_weight must be > 0, got {}",
                self.lambda_weight
            )));
        }
        Ok(())
    }
}

impl Default for FocalConfig {
    fn default() -> Self {
        FocalConfig {
            gamma: 2.0,
            lambda_weight: 1.0,
        }
    }
}

/// (1 − p)^γ · (−ln p) and its derivative in p, with p floored at
/// [`PROB_FLOOR`]. Below the floor the slope at the floor is reported so
/// saturated predictions still receive a finite push.
pub(crate) fn focal_term(p: f64, gamma: f64) -> (f64, f64) {
    let p = p.max(PROB_FLOOR);
    let q = 1.0 - p;
    let ln_p = p.ln();
    if gamma == 0.0 {
        return (-ln_p, -1.0 / p);
    }
    let w = q.powf(gamma);
    let loss = -w * ln_p;
    let dw = if q > 0.0 { gamma * q.powf(gamma - 1.0) } else { 0.0 };
    (loss, dw * ln_p - w / p)
}

fn check_label(label: usize, k: usize) -> Result<()> {
    if label == 0 || label > k {
        return Err(Error::domain(format!("label {label} outside 1..={k}")));
    }
    Ok(())
}

/// Focal loss −(1 − p_y)^γ ln p_y of the target class (λ not applied).
pub fn focal_loss(probs: &ProbVector, label: usize, config: &FocalConfig) -> Result<f64> {
    check_label(label, probs.len())?;
    config.validate()?;
    Ok(focal_term(probs.0[label - 1], config.gamma).0)
}

/// Focal loss of the composed head and its gradient w.r.t. (raw1, raw2).
pub fn loss_and_grad(
    raw1: f64,
    raw2: f64,
    label: usize,
    thresholds: &ThresholdSchedule,
    config: &FocalConfig,
    epsilon: f64,
) -> Result<(f64, [f64; 2])> {
    check_label(label, thresholds.num_classes())?;
    let params = link(raw1, raw2, epsilon)?;
    let shape = params.shape();
    let lo_cut = thresholds.cuts()[label - 1];
    let hi_cut = thresholds.cuts()[label];
    let (f_lo, g_lo) = specfun::reg_inc_beta_with_grad(lo_cut, shape);
    let (f_hi, g_hi) = specfun::reg_inc_beta_with_grad(hi_cut, shape);
    let p = if f_lo > 0.5 {
        specfun::reg_inc_beta_complement(lo_cut, shape)? - specfun::reg_inc_beta_complement(hi_cut, shape)?
    } else {
        f_hi - f_lo
    }
    .clamp(0.0, 1.0);
    let (loss, dl_dp) = focal_term(p, config.gamma);
    let dl_dalpha = dl_dp * (g_hi[0] - g_lo[0]);
    let dl_dbeta = dl_dp * (g_hi[1] - g_lo[1]);
    Ok((
        loss,
        [dl_dalpha * softplus_deriv(raw1), dl_dbeta * softplus_deriv(raw2)],
    ))
}

/// Gradient of focal_loss ∘ class_probs ∘ link at the default link epsilon.
pub fn loss_grad(
    raw1: f64,
    raw2: f64,
    label: usize,
    thresholds: &ThresholdSchedule,
    config: &FocalConfig,
) -> Result<(f64, f64)> {
    config.validate()?;
    let (_, g) = loss_and_grad(raw1, raw2, label, thresholds, config, LINK_EPSILON)?;
    Ok((g[0], g[1]))
}

/// Most probable class (1-based), ties toward the lower class.
pub fn predict_class(params: impl Into<ShapePair>, thresholds: &ThresholdSchedule) -> Result<usize> {
    Ok(class_probs(params, thresholds)?.argmax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(a: f64, b: f64) -> ShapePair {
        ShapePair::new(a, b).unwrap()
    }

    fn thirds() -> ThresholdSchedule {
        ThresholdSchedule::default()
    }

    fn assert_probs(got: &ProbVector, want: &[f64], tol: f64) {
        for (g, w) in got.as_slice().iter().zip(want) {
            assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn link_examples() {
        let p = link(0.0, 0.0, 0.01).unwrap();
        assert!((p.alpha - 0.703_147_180_559_945_3).abs() < 1e-15);
        assert_eq!(p.alpha, p.beta);

        let p = link(-50.0, -50.0, 0.01).unwrap();
        assert!((p.alpha - 0.01).abs() < 1e-20 && p.alpha >= 0.01);

        // softplus(3.2) = ln(1 + e^3.2), softplus(−1.1) = ln(1 + e^−1.1)
        let p = link(3.2, -1.1, 0.01).unwrap();
        assert!((p.alpha - (3.2f64.exp().ln_1p() + 0.01)).abs() < 1e-15);
        assert!((p.alpha - 3.249_953_333_162_43).abs() < 1e-12);
        assert!((p.beta - 0.297_335_325_115_430_8).abs() < 1e-12);
    }

    #[test]
    fn link_rejects_bad_input() {
        assert!(link(f64::NAN, 0.0, 0.01).is_err());
        assert!(link(0.0, f64::INFINITY, 0.01).is_err());
        assert!(link(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(ThresholdSchedule::new(vec![0.0, 1.0]).is_err());
        assert!(ThresholdSchedule::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(ThresholdSchedule::new(vec![0.1, 0.5, 1.0]).is_err());
        assert!(ThresholdSchedule::from_interior(&[0.7, 0.3]).is_err());
        let t = ThresholdSchedule::from_interior(&[0.25, 0.6]).unwrap();
        assert_eq!(t.num_classes(), 3);
        assert_eq!(t.classify(0.0), 1);
        assert_eq!(t.classify(0.25), 2);
        assert_eq!(t.classify(0.59), 2);
        assert_eq!(t.classify(1.0), 3);
        assert!((t.min_width() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn class_probs_examples() {
        let p = class_probs(shape(1.0, 1.0), &thirds()).unwrap();
        assert_probs(&p, &[1.0 / 3.0; 3], 1e-12);

        // F(x) = 3x² − 2x³
        let p = class_probs(shape(2.0, 2.0), &thirds()).unwrap();
        assert_probs(&p, &[7.0 / 27.0, 13.0 / 27.0, 7.0 / 27.0], 1e-14);

        // F(x) = x⁵ when β = 1
        let (a, b) = (f64::powi(1.0 / 3.0, 5), f64::powi(2.0 / 3.0, 5));
        let p = class_probs(shape(5.0, 1.0), &thirds()).unwrap();
        assert_probs(&p, &[a, b - a, 1.0 - b], 1e-14);
    }

    #[test]
    fn focal_loss_examples() {
        let cfg0 = FocalConfig::new(0.0, 1.0).unwrap();
        let cfg2 = FocalConfig::default();
        let p = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((focal_loss(&p, 3, &cfg0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);

        let p = ProbVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        for g in [0.0, 1.0, 2.0, 5.0] {
            assert_eq!(focal_loss(&p, 1, &FocalConfig::new(g, 1.0).unwrap()).unwrap(), 0.0);
        }

        let p = ProbVector::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert!((focal_loss(&p, 2, &cfg2).unwrap() - 0.25 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((focal_loss(&p, 2, &cfg2).unwrap() - 0.173_287).abs() < 1e-6);
    }

    #[test]
    fn focal_loss_clamps_zero_probability() {
        let p = ProbVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let l = focal_loss(&p, 2, &FocalConfig::new(0.0, 1.0).unwrap()).unwrap();
        assert!((l - (-PROB_FLOOR.ln())).abs() < 1e-12);
        assert!(focal_loss(&p, 0, &FocalConfig::default()).is_err());
        assert!(focal_loss(&p, 4, &FocalConfig::default()).is_err());
    }

    #[test]
    fn focal_config_validation() {
        assert!(FocalConfig::new(-1.0, 1.0).is_err());
        assert!(FocalConfig::new(2.0, 0.0).is_err());
    }

    #[test]
    fn loss_grad_symmetric_configuration() {
        // p_2 is symmetric in (α, β) under symmetric cuts, so both partials agree
        let cfg = FocalConfig::default();
        let (g1, g2) = loss_grad(0.0, 0.0, 2, &thirds(), &cfg).unwrap();
        assert!((g1 - g2).abs() < 1e-14, "{g1} {g2}");
        assert!(g1 < 0.0);
        // the outer classes mirror each other
        let (a1, a2) = loss_grad(0.4, -0.7, 1, &thirds(), &cfg).unwrap();
        let (b1, b2) = loss_grad(-0.7, 0.4, 3, &thirds(), &cfg).unwrap();
        assert!((a1 - b2).abs() < 1e-13 && (a2 - b1).abs() < 1e-13);
    }

    #[test]
    fn predict_class_examples() {
        assert_eq!(predict_class(shape(1.0, 1.0), &thirds()).unwrap(), 1);
        assert_eq!(predict_class(shape(5.0, 1.0), &thirds()).unwrap(), 3);
        assert_eq!(predict_class(shape(1.0, 5.0), &thirds()).unwrap(), 1);
        assert_eq!(predict_class(shape(3.0, 3.0), &thirds()).unwrap(), 2);
    }

    proptest! {
        #[test]
        fn probs_partition_unity(
            a in 0.01f64..500.0,
            b in 0.01f64..500.0,
            t1 in 0.01f64..0.98,
            gap in 0.005f64..0.99,
        ) {
            let t2 = (t1 + gap).min(0.995);
            prop_assume!(t2 > t1);
            let t = ThresholdSchedule::from_interior(&[t1, t2]).unwrap();
            let p = class_probs(shape(a, b), &t).unwrap();
            let sum: f64 = p.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(p.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn reflection_reverses_probs(
            a in 0.05f64..100.0,
            b in 0.05f64..100.0,
            t1 in 0.05f64..0.45,
            t2 in 0.55f64..0.95,
        ) {
            let t = ThresholdSchedule::from_interior(&[t1, t2]).unwrap();
            let p = class_probs(shape(a, b), &t).unwrap();
            let q = class_probs(shape(b, a), &t.reversed()).unwrap();
            for (x, y) in p.as_slice().iter().zip(q.as_slice().iter().rev()) {
                prop_assert!((x - y).abs() <= 1e-13, "{p:?} {q:?}");
            }
        }

        #[test]
        fn focal_is_monotone_and_bounded_by_ce(p1 in 1e-6f64..1.0, p2 in 1e-6f64..1.0, g in 0.0f64..6.0) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(focal_term(hi, g).0 <= focal_term(lo, g).0 + 1e-15);
            prop_assert!(focal_term(p1, g).0 <= focal_term(p1, 0.0).0 + 1e-15);
        }

        #[test]
        fn argmax_invariant_under_monotone_rescaling(a in 0.05f64..50.0, b in 0.05f64..50.0) {
            let p = class_probs(shape(a, b), &thirds()).unwrap();
            let mapped: Vec<f64> = p.as_slice().iter().map(|v| (3.0 * v + 0.1).ln()).collect();
            prop_assert_eq!(p.argmax(), argmax_lowest(&mapped) + 1);
        }
    }
}
