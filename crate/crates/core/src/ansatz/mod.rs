//! Wavefunction assembly: sortlets, the Vandermonde comparator, Jastrow and
//! envelope factors, and the signed-log sum over the `K` terms.

mod model;
pub mod oracle;
mod sort;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::math;

pub use model::{jastrow, jastrow_generic, SortletModel};
pub use sort::{
    evaluate_sortlet, sort_with_parity, sortlet_generic, sortlet_value, vandermonde_generic, vandermonde_value,
    SortletEvaluation,
};

/// A real number stored as `sign * exp(logmag)`.
///
/// `sign` is `-1`, `0` or `+1`; `logmag` is meaningless when `sign == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedLog<S = f64> {
    pub sign: i8,
    pub logmag: S,
}

impl<S: Scalar> SignedLog<S> {
    pub fn zero() -> Self {
        Self { sign: 0, logmag: S::cst(f64::NEG_INFINITY) }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Signed log of a carried value; `ln|v|` keeps its derivatives.
    pub fn from_scalar(v: S) -> Self {
        let x = v.value();
        if x == 0.0 {
            Self::zero()
        } else if x > 0.0 {
            Self { sign: 1, logmag: v.ln() }
        } else {
            Self { sign: -1, logmag: (-v).ln() }
        }
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        Self { sign: self.sign * other.sign, logmag: self.logmag + other.logmag }
    }

    pub fn neg(self) -> Self {
        Self { sign: -self.sign, ..self }
    }

    /// Strip derivative information.
    pub fn detach(&self) -> SignedLog<f64> {
        SignedLog { sign: self.sign, logmag: self.logmag.value() }
    }
}

impl SignedLog<f64> {
    pub fn from_value(v: f64) -> Self {
        Self::from_scalar(v)
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * math::exp(self.logmag)
        }
    }

    pub fn add(self, other: Self) -> Self {
        signed_log_sum_exp(&[self, other])
    }
}

/// `sum_k terms[k]` in the signed-log domain.
///
/// The largest magnitude is factored out, the signed mantissas are summed
/// left to right, and the result renormalised. An exactly cancelling sum
/// returns sign `0`.
pub fn signed_log_sum_exp<S: Scalar>(terms: &[SignedLog<S>]) -> SignedLog<S> {
    let max = terms
        .iter()
        .filter(|t| !t.is_zero())
        .map(|t| t.logmag.value())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return SignedLog::zero();
    }
    let shift = S::cst(max);
    let mut acc = S::cst(0.0);
    for t in terms.iter().filter(|t| !t.is_zero()) {
        let m = (t.logmag - shift).exp();
        acc = if t.sign > 0 { acc + m } else { acc - m };
    }
    let v = acc.value();
    if v == 0.0 {
        return SignedLog::zero();
    }
    let (sign, mag) = if v > 0.0 { (1, acc) } else { (-1, -acc) };
    SignedLog { sign, logmag: mag.ln() + shift }
}

/// Collect the `f64` views of a slice of signed logs.
pub fn detach_all<S: Scalar>(v: &[SignedLog<S>]) -> Vec<SignedLog<f64>> {
    v.iter().map(SignedLog::detach).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_cancellation_gives_zero_sign() {
        let a = SignedLog { sign: 1, logmag: -3.25 };
        assert!(signed_log_sum_exp(&[a, a.neg()]).is_zero());
        assert!(signed_log_sum_exp::<f64>(&[]).is_zero());
        assert!(signed_log_sum_exp(&[SignedLog::<f64>::zero(), SignedLog::zero()]).is_zero());
    }

    #[test]
    fn product_rules() {
        let a = SignedLog::from_value(-2.0);
        let b = SignedLog::from_value(3.0);
        assert!((a.mul(b).value() + 6.0).abs() < 1e-14);
        assert!(a.mul(SignedLog::zero()).is_zero());
        assert_eq!(SignedLog::from_value(0.0).sign, 0);
    }

    #[test]
    fn handles_magnitudes_beyond_double_range() {
        let big = SignedLog { sign: 1, logmag: 2000.0 };
        let s = signed_log_sum_exp(&[big, big]);
        assert_eq!(s.sign, 1);
        assert!((s.logmag - (2000.0 + core::f64::consts::LN_2)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_direct_arithmetic(v in proptest::collection::vec(-1e3f64..1e3, 1..8)) {
            let terms: Vec<SignedLog> = v.iter().map(|&x| SignedLog::from_value(x)).collect();
            let s = signed_log_sum_exp(&terms);
            let direct: f64 = v.iter().sum();
            let scale: f64 = v.iter().map(|x| x.abs()).sum();
            if direct == 0.0 {
                prop_assert!(s.is_zero() || s.value().abs() <= 1e-14 * scale);
            } else if direct.abs() > 1e-6 * scale {
                // away from catastrophic cancellation the sign is exact and the
                // magnitude agrees to rounding
                prop_assert_eq!(s.sign as f64, direct.signum());
                prop_assert!((s.value() - direct).abs() <= 1e-14 * scale, "{} vs {}", s.value(), direct);
            }
        }
    }
}
