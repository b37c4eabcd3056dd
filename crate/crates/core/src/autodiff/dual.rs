use core::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

/// First-order forward-mode number carrying `W` directional derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const W: usize> {
    pub value: f64,
    pub tangents: [f64; W],
}

impl<const W: usize> Dual<W> {
    pub fn constant(value: f64) -> Self {
        Self { value, tangents: [0.0; W] }
    }

    /// Independent variable along direction `lane`.
    pub fn seeded(value: f64, lane: usize) -> Self {
        let mut tangents = [0.0; W];
        tangents[lane] = 1.0;
        Self { value, tangents }
    }
}

impl<const W: usize> Add for Dual<W> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let mut t = self.tangents;
        for (a, b) in t.iter_mut().zip(rhs.tangents) {
            *a += b;
        }
        Self { value: self.value + rhs.value, tangents: t }
    }
}

impl<const W: usize> Sub for Dual<W> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let mut t = self.tangents;
        for (a, b) in t.iter_mut().zip(rhs.tangents) {
            *a -= b;
        }
        Self { value: self.value - rhs.value, tangents: t }
    }
}

impl<const W: usize> Mul for Dual<W> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut t = [0.0; W];
        for l in 0..W {
            t[l] = self.tangents[l] * rhs.value + self.value * rhs.tangents[l];
        }
        Self { value: self.value * rhs.value, tangents: t }
    }
}

impl<const W: usize> Div for Dual<W> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        let mut t = [0.0; W];
        for l in 0..W {
            t[l] = (self.tangents[l] - q * rhs.tangents[l]) / rhs.value;
        }
        Self { value: q, tangents: t }
    }
}

impl<const W: usize> Neg for Dual<W> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut t = self.tangents;
        for a in &mut t {
            *a = -*a;
        }
        Self { value: -self.value, tangents: t }
    }
}

impl<const W: usize> Scalar for Dual<W> {
    type Param = f64;

    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }

    #[inline]
    fn lift(p: f64) -> Self {
        Self::constant(p)
    }

    #[inline]
    fn value(&self) -> f64 {
        self.value
    }

    #[inline]
    fn chain(self, f: f64, df: f64, _d2f: f64) -> Self {
        let mut t = self.tangents;
        for a in &mut t {
            *a *= df;
        }
        Self { value: f, tangents: t }
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        let mut t = self.tangents;
        for a in &mut t {
            *a *= c;
        }
        Self { value: self.value * c, tangents: t }
    }

    fn dot_param(w: &[f64], x: &[Self]) -> Self {
        let mut value = 0.0;
        let mut t = [0.0; W];
        for (c, xi) in w.iter().zip(x) {
            value += c * xi.value;
            for l in 0..W {
                t[l] += c * xi.tangents[l];
            }
        }
        Self { value, tangents: t }
    }
}
