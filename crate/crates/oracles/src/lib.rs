//! Independent reference computations for tests.
//!
//! Nothing here shares code with `latmat-core`: the Beta CDF is obtained by
//! adaptive quadrature of the density, gradients by central differences and
//! assignments by exhaustive enumeration.

pub mod assignment;
pub mod quadrature;

/// Central difference (f(x + h) − f(x − h)) / 2h.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Five-point central stencil, fourth order in h.
pub fn central_diff4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// |got − want| / |want|, with both-zero counted as exact agreement.
pub fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs()
    }
}
