//! Second-order forward-mode jets and the scalar trait the closed forms use.
//!
//! A [`Jet`] carries `f(θ)`, `f'(θ)` and `f''(θ)` through arithmetic, so a
//! closed form written once over [`Real`] yields exact derivatives with
//! respect to the encoded parameter. The θ→0 limits of the precision
//! formulas are 0/0 and are resolved from these second derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by `f64` and [`Jet`].
pub trait Real:
    Copy
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(x: f64) -> Self;
    fn value(self) -> f64;
    fn cos(self) -> Self;
    fn sin(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn scale(self, c: f64) -> Self {
        self * Self::constant(c)
    }

    /// `(cos x, sin x)`. Implementations may return a pair that is exact for a
    /// nearby argument, as long as the two agree with each other.
    fn cos_sin(self) -> (Self, Self) {
        (self.cos(), self.sin())
    }
}

impl Real for f64 {
    fn constant(x: f64) -> Self {
        x
    }
    fn value(self) -> f64 {
        self
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Value with first and second derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, d1, d2 }
    }

    /// The independent variable at `x`.
    pub const fn variable(x: f64) -> Self {
        Self::new(x, 1.0, 0.0)
    }

    // Chain rule through a scalar function with known f, f', f''.
    fn compose(self, f: f64, df: f64, ddf: f64) -> Self {
        Self::new(f, df * self.d1, ddf * self.d1 * self.d1 + df * self.d2)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = o.compose(1.0 / o.v, -1.0 / (o.v * o.v), 2.0 / (o.v * o.v * o.v));
        self * inv
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::new(-self.v, -self.d1, -self.d2)
    }
}

impl Real for Jet {
    fn constant(x: f64) -> Self {
        Jet::new(x, 0.0, 0.0)
    }
    fn value(self) -> f64 {
        self.v
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(c, -s, -c)
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(s, c, -s)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Jet::constant(1.0),
            1 => self,
            _ => {
                let nf = n as f64;
                let f = self.v.powi(n);
                let df = nf * self.v.powi(n - 1);
                let ddf = nf * (nf - 1.0) * self.v.powi(n - 2);
                self.compose(f, df, ddf)
            }
        }
    }
    fn scale(self, c: f64) -> Self {
        Jet::new(self.v * c, self.d1 * c, self.d2 * c)
    }
}
