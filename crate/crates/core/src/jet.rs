//! Second-order truncated Taylor arithmetic.
//!
//! A [`Jet`] carries the normalized Taylor coefficients `[f, f', f''/2]` of a
//! function at a point. Jets nest: `Jet<Jet<Complex64>>` is a bivariate
//! expansion, used to expand the dispersion relations in the attenuation
//! strength while keeping frequency derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// Scalar types the jet arithmetic is generic over.
pub trait JetScalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_complex(c: Complex64) -> Self;

    fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// Principal-branch power with a real exponent.
    fn powf(&self, p: f64) -> Self;

    fn scale(&self, k: f64) -> Self;

    fn is_zero(&self) -> bool;

    fn is_finite(&self) -> bool;

    fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    fn recip(&self) -> Self {
        Self::from_real(1.0) / self.clone()
    }
}

impl JetScalar for Complex64 {
    fn from_complex(c: Complex64) -> Self {
        c
    }

    fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        if p == 1.0 {
            return *self;
        }
        if *self == Complex64::new(0.0, 0.0) {
            return if p > 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(f64::INFINITY, 0.0)
            };
        }
        if p == 0.5 {
            return Complex64::sqrt(*self);
        }
        Complex64::powf(*self, p)
    }

    fn scale(&self, k: f64) -> Self {
        self * k
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Truncated Taylor polynomial `c0 + c1 h + c2 h^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S> {
    pub c: [S; 3],
}

/// Frequency jet with complex coefficients.
pub type TaylorJet = Jet<Complex64>;

impl<S: JetScalar> Jet<S> {
    pub fn new(c0: S, c1: S, c2: S) -> Self {
        Jet { c: [c0, c1, c2] }
    }

    pub fn constant(v: S) -> Self {
        Jet::new(v, S::from_real(0.0), S::from_real(0.0))
    }

    /// The identity function expanded around `center`.
    pub fn variable(center: S) -> Self {
        Jet::new(center, S::from_real(1.0), S::from_real(0.0))
    }

    pub fn value(&self) -> &S {
        &self.c[0]
    }

    /// `k`-th derivative at the expansion point (`k <= 2`).
    pub fn derivative(&self, k: usize) -> S {
        match k {
            0 => self.c[0].clone(),
            1 => self.c[1].clone(),
            2 => self.c[2].scale(2.0),
            _ => S::from_real(0.0),
        }
    }

    fn is_constant(&self) -> bool {
        self.c[1].is_zero() && self.c[2].is_zero()
    }

    /// Compose a scalar function given its value and first two derivatives
    /// at the constant term.
    fn compose(&self, f0: S, f1: S, f2: S) -> Self {
        let c1 = f1.clone() * self.c[1].clone();
        let c2 = f1 * self.c[2].clone() + (f2 * self.c[1].clone() * self.c[1].clone()).scale(0.5);
        Jet::new(f0, c1, c2)
    }
}

impl<S: JetScalar> Add for Jet<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let [a0, a1, a2] = self.c;
        let [b0, b1, b2] = rhs.c;
        Jet::new(a0 + b0, a1 + b1, a2 + b2)
    }
}

impl<S: JetScalar> Sub for Jet<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let [a0, a1, a2] = self.c;
        let [b0, b1, b2] = rhs.c;
        Jet::new(a0 - b0, a1 - b1, a2 - b2)
    }
}

impl<S: JetScalar> Neg for Jet<S> {
    type Output = Self;
    fn neg(self) -> Self {
        let [a0, a1, a2] = self.c;
        Jet::new(-a0, -a1, -a2)
    }
}

impl<S: JetScalar> Mul for Jet<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let [a0, a1, a2] = self.c;
        let [b0, b1, b2] = rhs.c;
        let c2 = a0.clone() * b2 + a1.clone() * b1.clone() + a2 * b0.clone();
        let c1 = a0.clone() * b1 + a1 * b0.clone();
        Jet::new(a0 * b0, c1, c2)
    }
}

impl<S: JetScalar> Div for Jet<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let [a0, a1, a2] = self.c;
        let [b0, b1, b2] = rhs.c;
        let q0 = a0 / b0.clone();
        let q1 = (a1 - q0.clone() * b1.clone()) / b0.clone();
        let q2 = (a2 - q0.clone() * b2 - q1.clone() * b1) / b0;
        Jet::new(q0, q1, q2)
    }
}

impl<S: JetScalar> JetScalar for Jet<S> {
    fn from_complex(c: Complex64) -> Self {
        Jet::constant(S::from_complex(c))
    }

    fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            return Jet::from_real(1.0);
        }
        if p == 1.0 {
            return self.clone();
        }
        let x = &self.c[0];
        let f0 = x.powf(p);
        if self.is_constant() {
            return Jet::constant(f0);
        }
        let f1 = x.powf(p - 1.0).scale(p);
        let f2 = x.powf(p - 2.0).scale(p * (p - 1.0));
        self.compose(f0, f1, f2)
    }

    fn scale(&self, k: f64) -> Self {
        Jet::new(self.c[0].scale(k), self.c[1].scale(k), self.c[2].scale(k))
    }

    fn is_zero(&self) -> bool {
        self.c.iter().all(JetScalar::is_zero)
    }

    fn is_finite(&self) -> bool {
        self.c.iter().all(JetScalar::is_finite)
    }
}
