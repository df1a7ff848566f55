//! Scalar abstraction shared by the value path (`f64`) and the gradient path
//! (`Dual`, forward-mode derivatives with respect to both Beta shapes).

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::gamma::{digamma, ln_gamma_unchecked};

pub(crate) trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn ln_1p(self) -> Self;
    fn ln_gamma(self) -> Self;
    /// Replaces values too close to zero for a continued-fraction denominator.
    fn clamp_tiny(self, tiny: f64) -> Self;
    /// Convergence test for one multiplicative Lentz update `h <- h * del`.
    fn lentz_converged(h: Self, del: Self, eps: f64) -> bool;
}

impl Real for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn ln_gamma(self) -> Self {
        ln_gamma_unchecked(self)
    }
    fn clamp_tiny(self, tiny: f64) -> Self {
        if self.abs() < tiny {
            tiny
        } else {
            self
        }
    }
    fn lentz_converged(_h: Self, del: Self, eps: f64) -> bool {
        (del - 1.0).abs() <= eps
    }
}

/// Value plus partial derivatives with respect to (alpha, beta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dual {
    pub v: f64,
    pub d: [f64; 2],
}

impl Dual {
    pub fn var(v: f64, slot: usize) -> Self {
        let mut d = [0.0; 2];
        d[slot] = 1.0;
        Dual { v, d }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        Dual {
            v,
            d: [self.d[0] * dv, self.d[1] * dv],
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1]],
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: [
                self.d[0] * o.v + self.v * o.d[0],
                self.d[1] * o.v + self.v * o.d[1],
            ],
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual {
            v: q,
            d: [(self.d[0] - q * o.d[0]) / o.v, (self.d[1] - q * o.d[1]) / o.v],
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            d: [-self.d[0], -self.d[1]],
        }
    }
}

impl Add<f64> for Dual {
    type Output = Dual;
    fn add(self, o: f64) -> Dual {
        Dual { v: self.v + o, ..self }
    }
}

impl Sub<f64> for Dual {
    type Output = Dual;
    fn sub(self, o: f64) -> Dual {
        Dual { v: self.v - o, ..self }
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        Dual {
            v: self.v * o,
            d: [self.d[0] * o, self.d[1] * o],
        }
    }
}

impl Div<f64> for Dual {
    type Output = Dual;
    fn div(self, o: f64) -> Dual {
        Dual {
            v: self.v / o,
            d: [self.d[0] / o, self.d[1] / o],
        }
    }
}

impl Real for Dual {
    fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; 2] }
    }
    fn value(self) -> f64 {
        self.v
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln_1p(self) -> Self {
        self.chain(self.v.ln_1p(), 1.0 / (1.0 + self.v))
    }
    fn ln_gamma(self) -> Self {
        self.chain(ln_gamma_unchecked(self.v), digamma(self.v))
    }
    fn clamp_tiny(self, tiny: f64) -> Self {
        if self.v.abs() < tiny {
            Dual::constant(tiny)
        } else {
            self
        }
    }
    fn lentz_converged(h: Self, del: Self, eps: f64) -> bool {
        let scale = h.v.abs();
        (del.v - 1.0).abs() <= eps
            && (0..2).all(|i| (h.v * del.d[i]).abs() <= eps * (h.d[i].abs() + scale))
    }
}
