//! One particle on a line, small enough to integrate by quadrature.
//!
//! `ln psi(x) = -a x^2 - b x^4 + c x` with `theta = (a, b, c)` in the
//! anharmonic well `V(x) = x^2 / 2 + lambda x^4`. The Rayleigh quotient is
//! computed on a uniform grid with the trapezoidal rule using the kinetic
//! form `(1/2) int psi'^2`, independent of the local-energy code path.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ansatz::SignedLog;
use crate::autodiff::Scalar;
use crate::error::EvalError;
use crate::hamiltonian::PotentialTerms;
use crate::math;
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Toy1d {
    /// Quartic coupling in the potential.
    pub lambda: f64,
    /// Integration range `[-half_width, half_width]`.
    pub half_width: f64,
    pub grid_points: usize,
}

impl Default for Toy1d {
    fn default() -> Self {
        Self { lambda: 0.1, half_width: 10.0, grid_points: 40_001 }
    }
}

impl Toy1d {
    pub const N_PARAMS: usize = 3;

    pub fn potential_at(&self, x: f64) -> f64 {
        0.5 * x * x + self.lambda * x * x * x * x
    }

    fn log_psi_plain(theta: &[f64], x: f64) -> f64 {
        let x2 = x * x;
        -theta[0] * x2 - theta[1] * x2 * x2 + theta[2] * x
    }

    fn dlog_psi_plain(theta: &[f64], x: f64) -> f64 {
        -2.0 * theta[0] * x - 4.0 * theta[1] * x * x * x + theta[2]
    }

    fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.grid_points;
        let h = 2.0 * self.half_width / (n - 1) as f64;
        (0..n).map(move |i| {
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            (-self.half_width + i as f64 * h, w)
        })
    }

    /// `<psi|H|psi> / <psi|psi>` by trapezoidal quadrature.
    pub fn rayleigh_quotient(&self, theta: &[f64]) -> f64 {
        // shift by the log-density maximum on the grid for range safety
        let shift = self.grid().map(|(x, _)| Self::log_psi_plain(theta, x)).fold(f64::NEG_INFINITY, f64::max);
        let (mut norm, mut energy) = (0.0, 0.0);
        for (x, w) in self.grid() {
            let p = math::exp(2.0 * (Self::log_psi_plain(theta, x) - shift));
            let d = Self::dlog_psi_plain(theta, x);
            norm += w * p;
            energy += w * p * (0.5 * d * d + self.potential_at(x));
        }
        energy / norm
    }

    /// `n` stratified draws from `psi^2`: the inverse CDF evaluated at the
    /// midpoints `(i + 1/2) / n`, with linear interpolation on the grid.
    pub fn quantile_samples(&self, theta: &[f64], n: usize) -> Vec<f64> {
        let pts: Vec<(f64, f64)> = self.grid().collect();
        let logs: Vec<f64> = pts.iter().map(|&(x, _)| 2.0 * Self::log_psi_plain(theta, x)).collect();
        let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = logs.iter().map(|l| math::exp(l - shift)).collect();
        let mut cdf = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..pts.len() {
            acc += 0.5 * (dens[i - 1] + dens[i]) * (pts[i].0 - pts[i - 1].0);
            cdf.push(acc);
        }
        let total = acc;
        let mut out = Vec::with_capacity(n);
        let mut seg = 1;
        for i in 0..n {
            let target = (i as f64 + 0.5) / n as f64 * total;
            while seg < cdf.len() - 1 && cdf[seg] < target {
                seg += 1;
            }
            let (c0, c1) = (cdf[seg - 1], cdf[seg]);
            let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
            out.push(pts[seg - 1].0 + t * (pts[seg].0 - pts[seg - 1].0));
        }
        out
    }
}

impl WaveFunction for Toy1d {
    fn n_coords(&self) -> usize {
        1
    }

    fn n_params(&self) -> usize {
        Self::N_PARAMS
    }

    fn log_psi<S: Scalar>(&self, params: &[S::Param], x: &[S]) -> Result<SignedLog<S>, EvalError> {
        if params.len() != Self::N_PARAMS {
            return Err(EvalError::Shape { expected: Self::N_PARAMS, got: params.len() });
        }
        if x.len() != 1 {
            return Err(EvalError::Shape { expected: 1, got: x.len() });
        }
        let x2 = x[0] * x[0];
        let logmag = -(S::lift(params[0]) * x2) - S::lift(params[1]) * x2 * x2 + S::lift(params[2]) * x[0];
        Ok(SignedLog { sign: 1, logmag })
    }

    fn potential(&self, x: &[f64]) -> Result<PotentialTerms, EvalError> {
        if x.len() != 1 {
            return Err(EvalError::Shape { expected: 1, got: x.len() });
        }
        Ok(PotentialTerms { ee: 0.0, en: self.potential_at(x[0]), nn: 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::local_energy;

    #[test]
    fn harmonic_limit_is_exact() {
        let toy = Toy1d { lambda: 0.0, ..Default::default() };
        assert!((toy.rayleigh_quotient(&[0.5, 0.0, 0.0]) - 0.5).abs() < 1e-10);
        // e^{-a x^2}: E = a / 2 + 1 / (8 a)
        assert!((toy.rayleigh_quotient(&[1.0, 0.0, 0.0]) - 0.625).abs() < 1e-10);
    }

    #[test]
    fn quantile_mean_of_local_energy_matches_quadrature() {
        let toy = Toy1d::default();
        let theta = [0.45, 0.03, 0.2];
        let xs = toy.quantile_samples(&theta, 20_000);
        let mean: f64 = xs.iter().map(|&x| local_energy(&toy, &theta, &[x]).unwrap().total).sum::<f64>() / xs.len() as f64;
        let q = toy.rayleigh_quotient(&theta);
        assert!((mean - q).abs() < 1e-4 * q.abs(), "{mean} vs {q}");
    }

    #[test]
    fn quantiles_are_sorted_and_centred() {
        let toy = Toy1d::default();
        let xs = toy.quantile_samples(&[0.5, 0.0, 0.0], 1001);
        assert!(xs.windows(2).all(|w| w[0] <= w[1]));
        assert!(xs[500].abs() < 1e-6);
    }
}
