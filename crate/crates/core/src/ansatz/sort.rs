use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::SignedLog;
use crate::autodiff::Scalar;
use crate::math;

/// Integer key whose signed order is `f64::total_cmp` order.
#[inline]
fn total_key(x: f64) -> i64 {
    let bits = x.to_bits() as i64;
    bits ^ ((((bits >> 63) as u64) >> 1) as i64)
}

/// Stable ascending argsort by bottom-up merge sort, returning the
/// permutation (`perm[rank] = original index`) and its parity
/// `(-1)^inversions`. Equal scores keep their original order and count as
/// no inversion.
pub fn sort_with_parity(scores: &[f64]) -> (Vec<usize>, i8) {
    let n = scores.len();
    // keys travel with their indices so merges read memory sequentially
    let mut a: Vec<(i64, usize)> = scores.iter().map(|&x| total_key(x)).zip(0..n).collect();
    let mut b = a.clone();
    let mut inversions: u64 = 0;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            // branch-free merge step: the comparison outcome on random
            // data is unpredictable
            while i < mid && j < hi {
                let right = a[j].0 < a[i].0;
                b[k] = if right { a[j] } else { a[i] };
                inversions += (mid - i) as u64 & (right as u64).wrapping_neg();
                j += right as usize;
                i += !right as usize;
                k += 1;
            }
            b[k..k + mid - i].copy_from_slice(&a[i..mid]);
            k += mid - i;
            b[k..k + hi - j].copy_from_slice(&a[j..hi]);
            lo = hi;
        }
        core::mem::swap(&mut a, &mut b);
        width *= 2;
    }
    (a.into_iter().map(|(_, i)| i).collect(), if inversions % 2 == 0 { 1 } else { -1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortletEvaluation {
    pub value: SignedLog,
    pub permutation: Vec<usize>,
    pub parity: i8,
    pub sorted_scores: Vec<f64>,
}

/// `ln` of the product of the ascending adjacent gaps and the wrap gap,
/// or `None` if two scores coincide. `sorted` must have length >= 2.
fn log_gap_product<S: Scalar>(sorted: &[S]) -> Option<S> {
    let n = sorted.len();
    let wrap = sorted[n - 1] - sorted[0];
    if wrap.value() <= 0.0 {
        return None;
    }
    let mut acc = wrap.ln();
    for w in sorted.windows(2) {
        let gap = w[1] - w[0];
        if gap.value() <= 0.0 {
            return None;
        }
        acc = acc + gap.ln();
    }
    Some(acc)
}

/// Sortlet `sigma(pi) * prod_{i<N} (s_(i+1) - s_(i)) * (s_(N) - s_(1))`,
/// differentiated through the sorted order fixed at the evaluation point.
/// A single score is returned as is.
pub fn sortlet_generic<S: Scalar>(scores: &[S]) -> SignedLog<S> {
    match scores.len() {
        0 => SignedLog::zero(),
        1 => SignedLog::from_scalar(scores[0]),
        _ => {
            let values: Vec<f64> = scores.iter().map(Scalar::value).collect();
            let (perm, parity) = sort_with_parity(&values);
            let sorted: Vec<S> = perm.iter().map(|&i| scores[i]).collect();
            match log_gap_product(&sorted) {
                Some(logmag) => SignedLog { sign: parity, logmag },
                None => SignedLog::zero(),
            }
        }
    }
}

pub fn sortlet_value(scores: &[f64]) -> SignedLog {
    sortlet_generic(scores)
}

/// Sortlet value together with the sort that produced it.
pub fn evaluate_sortlet(scores: &[f64]) -> SortletEvaluation {
    let (permutation, parity) = sort_with_parity(scores);
    let sorted_scores: Vec<f64> = permutation.iter().map(|&i| scores[i]).collect();
    let value = match scores.len() {
        0 => SignedLog::zero(),
        1 => SignedLog::from_value(scores[0]),
        _ => log_gap_product(&sorted_scores).map_or(SignedLog::zero(), |logmag| SignedLog { sign: parity, logmag }),
    };
    SortletEvaluation { value, permutation, parity, sorted_scores }
}

fn choose2_sign(n: usize) -> i8 {
    if (n * n.saturating_sub(1) / 2) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `prod_{i<j} (phi_i - phi_j)` over each block, multiplied together.
///
/// The product is formed over the sorted block, where every factor is a
/// positive gap, and the sign restored from the parity of the sort. The
/// magnitude is accumulated as a mantissa with a separate binary exponent,
/// so the `O(n^2)` loop costs one multiply per pair.
pub fn vandermonde_value(blocks: &[&[f64]]) -> SignedLog {
    let mut sign = 1i8;
    let mut exponent: i64 = 0;
    let mut mantissa = 1.0f64;
    for block in blocks {
        let (perm, parity) = sort_with_parity(block);
        let sorted: Vec<f64> = perm.iter().map(|&i| block[i]).collect();
        if sorted.windows(2).any(|w| w[1] <= w[0]) {
            return SignedLog::zero();
        }
        sign *= parity * choose2_sign(sorted.len());
        for (j, &sj) in sorted.iter().enumerate() {
            for &si in &sorted[..j] {
                mantissa *= sj - si;
                if !(1e-100..=1e100).contains(&mantissa) {
                    let (m, e) = math::frexp(mantissa);
                    mantissa = m;
                    exponent += e as i64;
                }
            }
        }
    }
    SignedLog { sign, logmag: math::ln(mantissa) + exponent as f64 * math::LN_2 }
}

/// Differentiable Vandermonde product over each block.
pub fn vandermonde_generic<S: Scalar>(blocks: &[&[S]]) -> SignedLog<S> {
    let mut sign = 1i8;
    let mut logmag = S::cst(0.0);
    for block in blocks {
        let values: Vec<f64> = block.iter().map(Scalar::value).collect();
        let (perm, parity) = sort_with_parity(&values);
        let sorted: Vec<S> = perm.iter().map(|&i| block[i]).collect();
        sign *= parity * choose2_sign(sorted.len());
        for j in 0..sorted.len() {
            for i in 0..j {
                let gap = sorted[j] - sorted[i];
                if gap.value() <= 0.0 {
                    return SignedLog::zero();
                }
                logmag = logmag + gap.ln();
            }
        }
    }
    SignedLog { sign, logmag }
}
