//! Double-double scalar (about 32 significant digits).
//!
//! Only used to evaluate error-propagation numerators, which are differences
//! of terms up to `N⁴` that cancel to `O(N²θ²)` near θ = 0.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::jet::Real;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::from_f64(0.0);
        }
        let x = self.hi.sqrt();
        let x = Self::from_f64(x);
        // one Newton step doubles the precision
        x + (self - x * x) / x.scale(2.0)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        Dd::renorm(q1, q2) + Dd::from_f64(q3)
    }
}

impl Real for Dd {
    fn constant(x: f64) -> Self {
        Dd::from_f64(x)
    }
    fn value(self) -> f64 {
        self.hi + self.lo
    }
    fn cos(self) -> Self {
        self.cos_sin().0
    }
    fn sin(self) -> Self {
        self.cos_sin().1
    }
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Dd::from_f64(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            Dd::from_f64(1.0) / acc
        } else {
            acc
        }
    }
    fn scale(self, c: f64) -> Self {
        self * Dd::from_f64(c)
    }
    /// The smaller of `|cos|`, `|sin|` is taken from `f64` and the other is
    /// completed to `c² + s² = 1` in double-double, so the pair is exact for an
    /// argument within one `f64` ulp of `self`.
    fn cos_sin(self) -> (Self, Self) {
        let (s, c) = self.hi.sin_cos();
        let one = Dd::from_f64(1.0);
        if s.abs() <= c.abs() {
            let s = Dd::from_f64(s);
            let c_abs = (one - s * s).sqrt();
            (if c < 0.0 { -c_abs } else { c_abs }, s)
        } else {
            let c = Dd::from_f64(c);
            let s_abs = (one - c * c).sqrt();
            (c, if s < 0.0 { -s_abs } else { s_abs })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_recovers_lost_bits() {
        let a = Dd::from_f64(1.0) + Dd::from_f64(1e-20);
        assert_eq!((a - Dd::from_f64(1.0)).value(), 1e-20);
        let third = Dd::from_f64(1.0) / Dd::from_f64(3.0);
        let back = third * Dd::from_f64(3.0) - Dd::from_f64(1.0);
        assert!(back.value().abs() < 1e-31);
    }

    #[test]
    fn cos_sin_on_unit_circle() {
        for &x in &[1e-8, 0.3, 1.2, 2.9, -0.7] {
            let (c, s) = Dd::from_f64(x).cos_sin();
            let err = c * c + s * s - Dd::from_f64(1.0);
            assert!(err.value().abs() < 1e-30, "{x}");
            assert!((c.value() - x.cos()).abs() < 1e-15 && (s.value() - x.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn powers_and_roots() {
        let eps = 2f64.powi(-40);
        let p = Dd::from_f64(1.0 - eps).powi(1000).value();
        assert!((p - (1000.0 * (-eps).ln_1p()).exp()).abs() < 1e-15);
        let r = Dd::from_f64(2.0).sqrt();
        assert!((r * r - Dd::from_f64(2.0)).value().abs() < 1e-30);
    }
}
