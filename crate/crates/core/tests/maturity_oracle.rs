use latmat_core::maturity::{class_probs, focal_loss, link, loss_grad, FocalConfig, ThresholdSchedule, LINK_EPSILON};
use latmat_oracles::{central_diff, central_diff4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn composed_loss(raw1: f64, raw2: f64, label: usize, t: &ThresholdSchedule, cfg: &FocalConfig) -> f64 {
    let params = link(raw1, raw2, LINK_EPSILON).unwrap();
    let probs = class_probs(params, t).unwrap();
    focal_loss(&probs, label, cfg).unwrap()
}

/// Plain central differences with h = 1e-6.
fn fd_grad(raw1: f64, raw2: f64, label: usize, t: &ThresholdSchedule, cfg: &FocalConfig) -> (f64, f64) {
    const H: f64 = 1e-6;
    (
        central_diff(|r| composed_loss(r, raw2, label, t, cfg), raw1, H),
        central_diff(|r| composed_loss(raw1, r, label, t, cfg), raw2, H),
    )
}

/// Five-point central stencil with h = 1e-4. Some partials are small
/// differences of two CDF partials, where the h = 1e-6 quotient carries
/// ~1e-8 of rounding noise; the wider fourth-order stencil does not.
fn fd_grad4(raw1: f64, raw2: f64, label: usize, t: &ThresholdSchedule, cfg: &FocalConfig) -> (f64, f64) {
    const H: f64 = 1e-4;
    (
        central_diff4(|r| composed_loss(r, raw2, label, t, cfg), raw1, H),
        central_diff4(|r| composed_loss(raw1, r, label, t, cfg), raw2, H),
    )
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-5 * want.abs() || (got - want).abs() <= 1e-8
}

#[test]
fn loss_grad_matches_finite_differences() {
    let t = ThresholdSchedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let raw1 = rng.random_range(-5.0..5.0);
        let raw2 = rng.random_range(-5.0..5.0);
        let gamma = [0.0, 1.0, 2.0, 5.0][rng.random_range(0..4)];
        let label = rng.random_range(1..=3);
        let cfg = FocalConfig::new(gamma, 1.0).unwrap();
        let (g1, g2) = loss_grad(raw1, raw2, label, &t, &cfg).unwrap();
        let (f1, f2) = fd_grad4(raw1, raw2, label, &t, &cfg);
        assert!(close(g1, f1) && close(g2, f2), "raw=({raw1},{raw2}) label={label} γ={gamma}: ({g1},{g2}) vs ({f1},{f2})");
    }
}

#[test]
fn loss_grad_named_examples() {
    let t = ThresholdSchedule::default();
    let cfg2 = FocalConfig::default();
    let cfg0 = FocalConfig::new(0.0, 1.0).unwrap();
    for (raw1, raw2, label, cfg) in [(1.0, -1.0, 3, cfg2), (0.5, 0.5, 1, cfg0)] {
        let (g1, g2) = loss_grad(raw1, raw2, label, &t, &cfg).unwrap();
        let (f1, f2) = fd_grad(raw1, raw2, label, &t, &cfg);
        println!("raw=({raw1},{raw2}) label={label}: analytic ({g1:.12}, {g2:.12}) fd ({f1:.12}, {f2:.12})");
        assert!(close(g1, f1) && close(g2, f2));
    }
}
