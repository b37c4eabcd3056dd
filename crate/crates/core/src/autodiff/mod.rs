//! Differentiation engine.
//!
//! Model code is written once, generic over [`Scalar`], and evaluated with:
//!
//! * `f64` for plain values,
//! * [`Dual`] for first derivatives with respect to positions,
//! * [`Jet`] for gradient plus the diagonal of the Hessian (the Laplacian),
//! * [`Var`] recorded on a [`GradientTape`] for parameter gradients.
//!
//! Every implementation computes the primal value with the same floating
//! point operations in the same order, so the value is bitwise identical
//! whichever scalar type carried it.
//!
//! Parameters enter model code as `S::Param`. For the forward-mode types a
//! parameter is a plain `f64`, which keeps weight-times-activation products
//! cheap; on the tape parameters are themselves variables.

mod dual;
pub mod fd;
mod jet;
mod tape;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

pub use dual::Dual;
pub use jet::Jet;
pub use tape::{GradientTape, Var};

use crate::error::EvalError;
use crate::math;

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    type Param: Copy + Debug;

    /// A constant (zero derivative).
    fn cst(v: f64) -> Self;

    fn lift(p: Self::Param) -> Self;

    fn value(&self) -> f64;

    /// Apply a scalar function with value `f`, first derivative `df` and
    /// second derivative `d2f` at `self.value()`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self;

    /// `self * c` for a constant `c`.
    fn scale(self, c: f64) -> Self;

    /// `sum_i w[i] * x[i]`, accumulated left to right from `0.0`.
    fn dot_param(w: &[Self::Param], x: &[Self]) -> Self;

    /// `sum_i a[i] * b[i]`, accumulated left to right from `0.0`.
    fn dot(a: &[Self], b: &[Self]) -> Self {
        let mut acc = Self::cst(0.0);
        for (x, y) in a.iter().zip(b) {
            acc = acc + *x * *y;
        }
        acc
    }

    fn exp(self) -> Self {
        let e = math::exp(self.value());
        self.chain(e, e, e)
    }

    fn ln(self) -> Self {
        let x = self.value();
        let r = 1.0 / x;
        self.chain(math::ln(x), r, -r * r)
    }

    fn ln_1p(self) -> Self {
        let x = self.value();
        let r = 1.0 / (1.0 + x);
        self.chain(math::ln_1p(x), r, -r * r)
    }

    fn sqrt(self) -> Self {
        let x = self.value();
        let s = math::sqrt(x);
        let d = 0.5 / s;
        self.chain(s, d, -0.5 * d / x)
    }

    fn tanh(self) -> Self {
        let t = math::tanh(self.value());
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }

    fn atan(self) -> Self {
        let x = self.value();
        let d = 1.0 / (1.0 + x * x);
        self.chain(math::atan(x), d, -2.0 * x * d * d)
    }

    /// `|x|`; the derivative at exactly zero is taken as zero.
    fn abs(self) -> Self {
        let x = self.value();
        let s = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(x.abs(), s, 0.0)
    }

    fn softplus(self) -> Self {
        let x = self.value();
        let s = math::sigmoid(x);
        self.chain(math::softplus(x), s, s * (1.0 - s))
    }

    fn square(self) -> Self {
        self * self
    }

    /// The operand with the smaller value (first one on ties).
    fn min_value(self, other: Self) -> Self {
        if other.value() < self.value() {
            other
        } else {
            self
        }
    }

    /// The operand with the larger value (first one on ties).
    fn max_value(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    type Param = f64;

    #[inline]
    fn cst(v: f64) -> Self {
        v
    }

    #[inline]
    fn lift(p: f64) -> Self {
        p
    }

    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn chain(self, f: f64, _df: f64, _d2f: f64) -> Self {
        f
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }

    #[inline]
    fn dot_param(w: &[f64], x: &[f64]) -> Self {
        let mut acc = 0.0;
        for (a, b) in w.iter().zip(x) {
            acc += a * b;
        }
        acc
    }

    fn exp(self) -> Self {
        math::exp(self)
    }

    fn ln(self) -> Self {
        math::ln(self)
    }

    fn tanh(self) -> Self {
        math::tanh(self)
    }

    fn sqrt(self) -> Self {
        math::sqrt(self)
    }
}

/// A scalar function of positions, generic over the carrier type.
///
/// Parameters, if any, are captured by the implementor as constants.
pub trait PositionFn {
    fn eval<S: Scalar<Param = f64>>(&self, x: &[S]) -> Result<S, EvalError>;
}

/// A scalar function of a parameter vector.
pub trait ParamFn {
    fn eval<S: Scalar>(&self, theta: &[S::Param]) -> Result<S, EvalError>;
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn grad_chunked<const W: usize, F: PositionFn>(f: &F, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
    let mut seeded: Vec<Dual<W>> = x.iter().map(|&v| Dual::constant(v)).collect();
    for start in (0..x.len()).step_by(W) {
        let end = (start + W).min(x.len());
        for (lane, k) in (start..end).enumerate() {
            seeded[k] = Dual::seeded(x[k], lane);
        }
        let y = f.eval(&seeded)?;
        for (lane, k) in (start..end).enumerate() {
            out[k] = finite(y.tangents[lane])?;
            seeded[k] = Dual::constant(x[k]);
        }
    }
    Ok(())
}

/// Gradient of `f` with respect to every coordinate, by forward mode.
pub fn grad_positions<F: PositionFn>(f: &F, x: &[f64]) -> Result<Vec<f64>, EvalError> {
    let mut out = vec![0.0; x.len()];
    match x.len() {
        0..=3 => grad_chunked::<3, F>(f, x, &mut out)?,
        4..=6 => grad_chunked::<6, F>(f, x, &mut out)?,
        7..=9 => grad_chunked::<9, F>(f, x, &mut out)?,
        10..=12 => grad_chunked::<12, F>(f, x, &mut out)?,
        _ => grad_chunked::<8, F>(f, x, &mut out)?,
    }
    Ok(out)
}

/// Value, gradient and Laplacian of a position function in one sweep of
/// second-order jets.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub laplacian: f64,
}

fn jets_chunked<const W: usize, F: PositionFn>(f: &F, x: &[f64]) -> Result<Derivatives, EvalError> {
    let mut gradient = vec![0.0; x.len()];
    let mut laplacian = 0.0;
    let mut value = 0.0;
    let mut seeded: Vec<Jet<W>> = x.iter().map(|&v| Jet::constant(v)).collect();
    for start in (0..x.len().max(1)).step_by(W) {
        let end = (start + W).min(x.len());
        for (lane, k) in (start..end).enumerate() {
            seeded[k] = Jet::seeded(x[k], lane);
        }
        let y = f.eval(&seeded)?;
        value = y.value;
        for (lane, k) in (start..end).enumerate() {
            gradient[k] = y.d[lane];
            laplacian += y.dd[lane];
            seeded[k] = Jet::constant(x[k]);
        }
    }
    finite(value)?;
    finite(laplacian)?;
    for g in &gradient {
        finite(*g)?;
    }
    Ok(Derivatives { value, gradient, laplacian })
}

/// Value, gradient and Laplacian of `f` with respect to positions.
pub fn position_derivatives<F: PositionFn>(f: &F, x: &[f64]) -> Result<Derivatives, EvalError> {
    match x.len() {
        0..=3 => jets_chunked::<3, F>(f, x),
        4..=6 => jets_chunked::<6, F>(f, x),
        7..=9 => jets_chunked::<9, F>(f, x),
        10..=12 => jets_chunked::<12, F>(f, x),
        _ => jets_chunked::<8, F>(f, x),
    }
}

/// `sum_d d^2 f / dx_d^2` over all coordinates.
pub fn laplacian_positions<F: PositionFn>(f: &F, x: &[f64]) -> Result<f64, EvalError> {
    position_derivatives(f, x).map(|d| d.laplacian)
}

/// Value and full parameter gradient by one reverse sweep.
pub fn value_and_grad_params<F: ParamFn>(f: &F, theta: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
    let tape = GradientTape::with_capacity(theta.len() * 4);
    let vars: Vec<Var<'_>> = theta.iter().map(|&t| tape.var(t)).collect();
    let y = f.eval::<Var<'_>>(&vars)?;
    let value = finite(y.value())?;
    let grad = tape.gradient(y, &vars);
    for g in &grad {
        finite(*g)?;
    }
    Ok((value, grad))
}

/// Gradient with respect to parameters, aligned with `theta`.
pub fn grad_params<F: ParamFn>(f: &F, theta: &[f64]) -> Result<Vec<f64>, EvalError> {
    value_and_grad_params(f, theta).map(|(_, g)| g)
}
