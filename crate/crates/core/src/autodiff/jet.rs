use core::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

/// Second-order forward-mode number: value, `W` directional first
/// derivatives `d`, and the matching pure second derivatives `dd`
/// (the Hessian diagonal along each seeded direction).
///
/// Summing `dd` over coordinate directions gives the Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const W: usize> {
    pub value: f64,
    pub d: [f64; W],
    pub dd: [f64; W],
}

impl<const W: usize> Jet<W> {
    pub fn constant(value: f64) -> Self {
        Self { value, d: [0.0; W], dd: [0.0; W] }
    }

    pub fn seeded(value: f64, lane: usize) -> Self {
        let mut d = [0.0; W];
        d[lane] = 1.0;
        Self { value, d, dd: [0.0; W] }
    }
}

impl<const W: usize> Add for Jet<W> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        out.value = self.value + rhs.value;
        for l in 0..W {
            out.d[l] += rhs.d[l];
            out.dd[l] += rhs.dd[l];
        }
        out
    }
}

impl<const W: usize> Sub for Jet<W> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        out.value = self.value - rhs.value;
        for l in 0..W {
            out.d[l] -= rhs.d[l];
            out.dd[l] -= rhs.dd[l];
        }
        out
    }
}

impl<const W: usize> Mul for Jet<W> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self, rhs);
        let mut out = Self::constant(a.value * b.value);
        for l in 0..W {
            out.d[l] = a.d[l] * b.value + a.value * b.d[l];
            out.dd[l] = a.dd[l] * b.value + 2.0 * a.d[l] * b.d[l] + a.value * b.dd[l];
        }
        out
    }
}

impl<const W: usize> Div for Jet<W> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        // q = a / b  =>  a' = q'b + qb',  a'' = q''b + 2q'b' + qb''
        let (a, b) = (self, rhs);
        let q = a.value / b.value;
        let mut out = Self::constant(q);
        for l in 0..W {
            let dq = (a.d[l] - q * b.d[l]) / b.value;
            out.d[l] = dq;
            out.dd[l] = (a.dd[l] - 2.0 * dq * b.d[l] - q * b.dd[l]) / b.value;
        }
        out
    }
}

impl<const W: usize> Neg for Jet<W> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut out = self;
        out.value = -self.value;
        for l in 0..W {
            out.d[l] = -out.d[l];
            out.dd[l] = -out.dd[l];
        }
        out
    }
}

impl<const W: usize> Scalar for Jet<W> {
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
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::constant(f);
        for l in 0..W {
            out.d[l] = df * self.d[l];
            out.dd[l] = df * self.dd[l] + d2f * self.d[l] * self.d[l];
        }
        out
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        let mut out = self;
        out.value = self.value * c;
        for l in 0..W {
            out.d[l] *= c;
            out.dd[l] *= c;
        }
        out
    }

    fn dot_param(w: &[f64], x: &[Self]) -> Self {
        let mut out = Self::constant(0.0);
        for (c, xi) in w.iter().zip(x) {
            out.value += c * xi.value;
            for l in 0..W {
                out.d[l] += c * xi.d[l];
                out.dd[l] += c * xi.dd[l];
            }
        }
        out
    }
}
