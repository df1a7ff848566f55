//! Log-Beta and the regularized incomplete Beta function, generic over the
//! scalar so one code path yields both values and shape derivatives.

use super::dual::Real;
use super::gamma::{stirling_corr, HALF_LN_2PI};

/// Both shapes at or above this use the Stirling form of ln B.
const LARGE: f64 = 8.0;
const MAX_ITER: usize = 100_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// ln Γ(big) − ln Γ(small + big), for big ≥ LARGE.
fn ln_gamma_ratio<T: Real>(small: T, big: T) -> T {
    -(small * big.ln()) - (small + big - 0.5) * (small / big).ln_1p() + small
        + stirling_corr(big)
        - stirling_corr(small + big)
}

pub(crate) fn ln_beta<T: Real>(a: T, b: T) -> T {
    let (av, bv) = (a.value(), b.value());
    if av >= LARGE && bv >= LARGE {
        // ln p and ln q for p = a/(a+b), q = b/(a+b)
        let ln_p = -(b / a).ln_1p();
        let ln_q = -(a / b).ln_1p();
        T::constant(HALF_LN_2PI) - b.ln() * 0.5 + (a - 0.5) * ln_p + b * ln_q + stirling_corr(a)
            + stirling_corr(b)
            - stirling_corr(a + b)
    } else if av >= LARGE {
        b.ln_gamma() + ln_gamma_ratio(b, a)
    } else if bv >= LARGE {
        a.ln_gamma() + ln_gamma_ratio(a, b)
    } else {
        a.ln_gamma() + b.ln_gamma() - (a + b).ln_gamma()
    }
}

/// (ln x, ln y) for y = 1 − x, taking whichever form avoids cancellation.
fn ln_pair(x: f64, y: f64) -> (f64, f64) {
    let ln_x = if x > 0.5 { (-y).ln_1p() } else { x.ln() };
    let ln_y = if y > 0.5 { (-x).ln_1p() } else { y.ln() };
    (ln_x, ln_y)
}

/// ln[x^a y^b / (a B(a, b))] with y = 1 − x supplied by the caller.
fn ln_prefactor<T: Real>(a: T, b: T, x: f64, y: f64) -> T {
    let (ln_x, ln_y) = ln_pair(x, y);
    if a.value() >= LARGE && b.value() >= LARGE {
        // Expand around the mean p = a/(a+b). The linear terms a*u + b*v
        // cancel identically, leaving only the curvature of ln(1 + u).
        let s = a + b;
        let p = a / s;
        let q = b / s;
        let u = (T::constant(x) - p) / p;
        let v = (T::constant(y) - q) / q;
        let ta = if u.value().abs() < 0.5 {
            u.ln_1p() - u
        } else {
            (b / a).ln_1p() + ln_x - u
        };
        let tb = if v.value().abs() < 0.5 {
            v.ln_1p() - v
        } else {
            (a / b).ln_1p() + ln_y - v
        };
        a * ta + b * tb + (a * b / s).ln() * 0.5 - HALF_LN_2PI
            - (stirling_corr(a) + stirling_corr(b) - stirling_corr(s))
            - a.ln()
    } else {
        a * ln_x + b * ln_y - ln_beta(a, b) - a.ln()
    }
}

/// Continued fraction for I_x(a, b), modified Lentz evaluation.
fn cont_frac<T: Real>(a: T, b: T, x: f64) -> T {
    let one = T::constant(1.0);
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = one;
    let mut d = (one - qab * x / qap).clamp_tiny(CF_TINY);
    d = one / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let aa = (b - mf) * (mf * x) / ((qam + m2) * (a + m2));
        d = (one + aa * d).clamp_tiny(CF_TINY);
        c = (one + aa / c).clamp_tiny(CF_TINY);
        d = one / d;
        h = h * d * c;
        let aa = -((a + mf) * (qab + mf)) * x / ((a + m2) * (qap + m2));
        d = (one + aa * d).clamp_tiny(CF_TINY);
        c = (one + aa / c).clamp_tiny(CF_TINY);
        d = one / d;
        let del = d * c;
        h = h * del;
        if T::lentz_converged(h, del, CF_EPS) {
            break;
        }
    }
    h
}

/// (I_x(a,b), 1 − I_x(a,b)) for 0 < x < 1. The tail evaluated directly by
/// the continued fraction keeps full relative precision.
pub(crate) fn tails<T: Real>(x: f64, a: T, b: T) -> (T, T) {
    let y = 1.0 - x;
    let (av, bv) = (a.value(), b.value());
    let one = T::constant(1.0);
    if x > (av + 1.0) / (av + bv + 2.0) {
        let w = ln_prefactor(b, a, y, x).exp() * cont_frac(b, a, y);
        (one - w, w)
    } else {
        let w = ln_prefactor(a, b, x, y).exp() * cont_frac(a, b, x);
        (w, one - w)
    }
}
