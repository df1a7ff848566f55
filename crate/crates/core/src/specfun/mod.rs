//! Beta-function special functions: log-Beta, the regularized incomplete
//! Beta function (the Beta CDF) and its partials with respect to both shapes,
//! plus the softplus link used to produce positive shapes.
//!
//! The incomplete Beta is evaluated with a modified-Lentz continued fraction,
//! switching to the reflected form `1 - I_{1-x}(b, a)` for `x` above
//! `(a + 1) / (a + b + 2)`. Shape derivatives run the same code on a dual
//! number, so values and gradients never drift apart.

mod dual;
mod gamma;
mod incbeta;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use dual::Dual;

/// A pair of positive Beta shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePair {
    pub alpha: f64,
    pub beta: f64,
}

impl ShapePair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_shape(alpha, beta)?;
        Ok(ShapePair { alpha, beta })
    }

    /// The pair with alpha and beta exchanged (density reflected about ½).
    pub fn swapped(self) -> Self {
        ShapePair {
            alpha: self.beta,
            beta: self.alpha,
        }
    }

    pub fn mean(self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

fn check_shape(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) || !(beta.is_finite() && beta > 0.0) {
        return Err(Error::domain(format!(
            "Beta shapes must be finite and positive, got alpha={alpha}, beta={beta}"
        )));
    }
    Ok(())
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x must lie in [0, 1], got {x}")));
    }
    Ok(())
}

/// ln Γ(x) for finite x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain(format!("ln_gamma needs x > 0, got {x}")));
    }
    Ok(gamma::ln_gamma_unchecked(x))
}

/// ln B(α, β) = ln Γ(α) + ln Γ(β) − ln Γ(α + β).
pub fn ln_beta(alpha: f64, beta: f64) -> Result<f64> {
    check_shape(alpha, beta)?;
    Ok(incbeta::ln_beta(alpha, beta))
}

/// Regularized incomplete Beta function I_x(α, β), i.e. the Beta CDF at x.
pub fn reg_inc_beta(x: f64, shape: ShapePair) -> Result<f64> {
    check_unit(x)?;
    check_shape(shape.alpha, shape.beta)?;
    Ok(match x {
        0.0 => 0.0,
        1.0 => 1.0,
        _ => incbeta::tails(x, shape.alpha, shape.beta).0.clamp(0.0, 1.0),
    })
}

/// Upper tail 1 − I_x(α, β), accurate even where I_x is close to 1.
pub fn reg_inc_beta_complement(x: f64, shape: ShapePair) -> Result<f64> {
    check_unit(x)?;
    check_shape(shape.alpha, shape.beta)?;
    Ok(match x {
        0.0 => 1.0,
        1.0 => 0.0,
        _ => incbeta::tails(x, shape.alpha, shape.beta).1.clamp(0.0, 1.0),
    })
}

/// Partial derivatives (∂I/∂α, ∂I/∂β) of I_x(α, β).
///
/// At x = 0 and x = 1 the CDF does not depend on the shapes and both
/// partials are exactly zero.
pub fn grad_reg_inc_beta(x: f64, shape: ShapePair) -> Result<(f64, f64)> {
    check_unit(x)?;
    check_shape(shape.alpha, shape.beta)?;
    if x == 0.0 || x == 1.0 {
        return Ok((0.0, 0.0));
    }
    let (lower, _) = incbeta::tails(x, Dual::var(shape.alpha, 0), Dual::var(shape.beta, 1));
    Ok((lower.d[0], lower.d[1]))
}

/// Value and shape gradient of I_x in one pass.
pub(crate) fn reg_inc_beta_with_grad(x: f64, shape: ShapePair) -> (f64, [f64; 2]) {
    if x <= 0.0 {
        return (0.0, [0.0; 2]);
    }
    if x >= 1.0 {
        return (1.0, [0.0; 2]);
    }
    let (lower, _) = incbeta::tails(x, Dual::var(shape.alpha, 0), Dual::var(shape.beta, 1));
    (lower.v.clamp(0.0, 1.0), lower.d)
}

/// Beta density at an interior point.
pub fn beta_density(x: f64, shape: ShapePair) -> Result<f64> {
    check_shape(shape.alpha, shape.beta)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("density is evaluated on (0, 1), got {x}")));
    }
    let ln_density = (shape.alpha - 1.0) * x.ln() + (shape.beta - 1.0) * (-x).ln_1p()
        - incbeta::ln_beta(shape.alpha, shape.beta);
    Ok(ln_density.exp())
}

/// softplus(y) = ln(1 + eʸ), overflow-safe.
pub fn softplus(y: f64) -> f64 {
    if y > 30.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

/// Derivative of softplus: the logistic function.
pub fn softplus_deriv(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(a: f64, b: f64) -> ShapePair {
        ShapePair::new(a, b).unwrap()
    }

    #[test]
    fn ln_beta_examples() {
        assert!(ln_beta(1.0, 1.0).unwrap().abs() < 1e-15);
        assert!((ln_beta(2.0, 2.0).unwrap() - (1.0f64 / 6.0).ln()).abs() < 1e-14);
        assert!((ln_beta(0.5, 0.5).unwrap() - std::f64::consts::PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_beta_rejects_bad_shapes() {
        assert!(ln_beta(0.0, 1.0).is_err());
        assert!(ln_beta(1.0, -2.0).is_err());
        assert!(ln_beta(f64::NAN, 1.0).is_err());
        assert!(ln_beta(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn ln_beta_branches_agree_at_the_switch() {
        // the Stirling branches against the plain gamma sum just below/above 8
        for &(a, b) in &[(8.0, 8.0), (8.0, 3.0), (2.5, 8.0), (12.0, 30.0), (8.0, 0.2)] {
            let direct = gamma::ln_gamma_unchecked(a) + gamma::ln_gamma_unchecked(b)
                - gamma::ln_gamma_unchecked(a + b);
            let got = ln_beta(a, b).unwrap();
            assert!((got - direct).abs() < 1e-12 * direct.abs().max(1.0), "({a},{b})");
        }
    }

    #[test]
    fn ln_beta_integer_identity() {
        // B(m, n) = (m-1)!(n-1)!/(m+n-1)!
        let lf = |n: u32| -> f64 { (1..=n).map(|k| (k as f64).ln()).sum() };
        for m in 1..40u32 {
            for n in [1u32, 2, 7, 9, 25, 60] {
                let want = lf(m - 1) + lf(n - 1) - lf(m + n - 1);
                let got = ln_beta(m as f64, n as f64).unwrap();
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "B({m},{n})");
            }
        }
    }

    #[test]
    fn reg_inc_beta_examples() {
        assert!((reg_inc_beta(0.7, shape(1.0, 1.0)).unwrap() - 0.7).abs() < 1e-15);
        let mid = reg_inc_beta(0.5, shape(3.0, 3.0)).unwrap();
        assert!((mid - 0.5).abs() < 1e-14, "{mid}");
        // closed form 3x² − 2x³ for Beta(2, 2)
        let x = 1.0 / 3.0;
        assert!((reg_inc_beta(x, shape(2.0, 2.0)).unwrap() - 7.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn reg_inc_beta_endpoints_and_domain() {
        let s = shape(0.3, 4.0);
        assert_eq!(reg_inc_beta(0.0, s).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, s).unwrap(), 1.0);
        assert!(reg_inc_beta(-0.1, s).is_err());
        assert!(reg_inc_beta(1.1, s).is_err());
        assert!(reg_inc_beta(f64::NAN, s).is_err());
        assert!(ShapePair::new(0.0, 1.0).is_err());
    }

    #[test]
    fn power_law_cases() {
        // I_x(a, 1) = x^a and I_x(1, b) = 1 − (1 − x)^b
        for &a in &[0.05, 0.5, 3.0, 40.0, 900.0] {
            for &x in &[0.01, 0.3, 0.77, 0.999] {
                let want = f64::powf(x, a);
                let got = reg_inc_beta(x, shape(a, 1.0)).unwrap();
                assert!((got - want).abs() <= 1e-13 * want.max(1e-300), "a={a} x={x}");
                let want_c = f64::powf(1.0 - x, a);
                let got_c = reg_inc_beta_complement(x, shape(1.0, a)).unwrap();
                assert!((got_c - want_c).abs() <= 1e-12 * want_c.max(1e-300), "b={a} x={x}");
            }
        }
    }

    #[test]
    fn grad_examples() {
        let (da, db) = grad_reg_inc_beta(0.5, shape(2.0, 2.0)).unwrap();
        assert!((da + db).abs() < 1e-15);
        assert!(da < 0.0);

        // I_x(α, 1) = x^α  ⇒  ∂/∂α = x^α ln x, which at α = 1 is x ln x
        let (da, _) = grad_reg_inc_beta(0.9, shape(1.0, 1.0)).unwrap();
        assert!((da - 0.9 * f64::ln(0.9)).abs() < 1e-14);
        assert!((da + 0.094_824_464_4).abs() < 1e-9);
    }

    #[test]
    fn grad_is_zero_at_endpoints() {
        let s = shape(2.5, 0.4);
        assert_eq!(grad_reg_inc_beta(0.0, s).unwrap(), (0.0, 0.0));
        assert_eq!(grad_reg_inc_beta(1.0, s).unwrap(), (0.0, 0.0));
        assert!(grad_reg_inc_beta(1.5, s).is_err());
    }

    #[test]
    fn density_integrates_to_cdf_increment() {
        // crude midpoint check of dI/dx = density
        let s = shape(2.0, 5.0);
        let (x, h) = (0.3, 1e-6);
        let fd = (reg_inc_beta(x + h, s).unwrap() - reg_inc_beta(x - h, s).unwrap()) / (2.0 * h);
        assert!((fd - beta_density(x, s).unwrap()).abs() < 1e-7);
        assert!(beta_density(0.0, s).is_err());
    }

    #[test]
    fn softplus_examples() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
        assert!((softplus(100.0) - 100.0).abs() < 1e-12);
        assert!(softplus(1000.0).is_finite());
        assert_eq!(softplus_deriv(0.0), 0.5);
        assert!(softplus_deriv(-800.0) >= 0.0 && softplus_deriv(800.0) <= 1.0);
    }

    proptest! {
        #[test]
        fn cdf_bounded_and_monotone(
            a in 0.01f64..200.0,
            b in 0.01f64..200.0,
            x1 in 0.0f64..1.0,
            x2 in 0.0f64..1.0,
        ) {
            let s = shape(a, b);
            let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
            let f_lo = reg_inc_beta(lo, s).unwrap();
            let f_hi = reg_inc_beta(hi, s).unwrap();
            prop_assert!((0.0..=1.0).contains(&f_lo));
            prop_assert!((0.0..=1.0).contains(&f_hi));
            prop_assert!(f_lo <= f_hi + 1e-15);
        }

        #[test]
        fn reflection_identity(a in 0.01f64..1e4, b in 0.01f64..1e4, x in 0.001f64..0.999) {
            let s = shape(a, b);
            let sum = reg_inc_beta(x, s).unwrap() + reg_inc_beta(1.0 - x, s.swapped()).unwrap();
            prop_assert!((sum - 1.0).abs() <= 1e-12, "sum={sum}");
        }

        #[test]
        fn tails_sum_to_one(a in 0.01f64..1e3, b in 0.01f64..1e3, x in 0.0f64..=1.0) {
            let s = shape(a, b);
            let sum = reg_inc_beta(x, s).unwrap() + reg_inc_beta_complement(x, s).unwrap();
            prop_assert!((sum - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn softplus_positive_and_close_to_relu(y in -700.0f64..700.0) {
            let sp = softplus(y);
            prop_assert!(sp > 0.0);
            prop_assert!(sp - y.max(0.0) <= std::f64::consts::LN_2 + 1e-15);
            let d = softplus_deriv(y);
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
