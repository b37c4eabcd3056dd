//! Born-Oppenheimer potential and the local energy `(H psi) / psi`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autodiff::{position_derivatives, PositionFn, Scalar};
use crate::error::EvalError;
use crate::geometry::{PotentialKind, SystemSpec};
use crate::math;
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PotentialTerms {
    pub ee: f64,
    pub en: f64,
    pub nn: f64,
}

impl PotentialTerms {
    pub fn total(&self) -> f64 {
        self.ee + self.en + self.nn
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    math::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
}

/// `sum_{I<J} Z_I Z_J / |R_I - R_J|`
pub fn nuclear_repulsion(system: &SystemSpec) -> f64 {
    let nuclei = system.nuclei();
    let mut nn = 0.0;
    for (i, a) in nuclei.iter().enumerate() {
        for b in &nuclei[i + 1..] {
            nn += (a.charge * b.charge) as f64 / distance(&a.position, &b.position);
        }
    }
    nn
}

/// Coulomb terms, or `|r|^2 / 2` per particle (reported as `en`) for the
/// harmonic test potential.
pub fn potential(system: &SystemSpec, x: &[f64]) -> Result<PotentialTerms, EvalError> {
    let n = system.n_electrons();
    if x.len() != 3 * n {
        return Err(EvalError::Shape { expected: 3 * n, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    if system.potential() == PotentialKind::Harmonic {
        let en = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
        return Ok(PotentialTerms { ee: 0.0, en, nn: 0.0 });
    }
    let mut ee = 0.0;
    for i in 0..n {
        for j in 0..i {
            let r = distance(&x[3 * i..3 * i + 3], &x[3 * j..3 * j + 3]);
            if r == 0.0 {
                return Err(EvalError::Coincidence);
            }
            ee += 1.0 / r;
        }
    }
    let mut en = 0.0;
    for i in 0..n {
        for nuc in system.nuclei() {
            let r = distance(&x[3 * i..3 * i + 3], &nuc.position);
            if r == 0.0 {
                return Err(EvalError::Coincidence);
            }
            en -= nuc.charge as f64 / r;
        }
    }
    Ok(PotentialTerms { ee, en, nn: nuclear_repulsion(system) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergyBreakdown {
    pub kinetic: f64,
    pub potential_ee: f64,
    pub potential_en: f64,
    pub potential_nn: f64,
    pub total: f64,
}

impl LocalEnergyBreakdown {
    fn new(kinetic: f64, v: PotentialTerms) -> Self {
        let total = kinetic + v.ee + v.en + v.nn;
        Self { kinetic, potential_ee: v.ee, potential_en: v.en, potential_nn: v.nn, total }
    }
}

struct LogAbsPsi<'a, W> {
    wf: &'a W,
    params: &'a [f64],
}

impl<W: WaveFunction> PositionFn for LogAbsPsi<'_, W> {
    fn eval<S: Scalar<Param = f64>>(&self, x: &[S]) -> Result<S, EvalError> {
        let v = self.wf.log_psi::<S>(self.params, x)?;
        if v.is_zero() {
            return Err(EvalError::Node);
        }
        Ok(v.logmag)
    }
}

/// Local energy with kinetic part `-(lap ln|psi| + |grad ln|psi||^2) / 2`.
pub fn local_energy<W: WaveFunction>(wf: &W, params: &[f64], x: &[f64]) -> Result<LocalEnergyBreakdown, EvalError> {
    let d = position_derivatives(&LogAbsPsi { wf, params }, x)?;
    let grad_sq: f64 = d.gradient.iter().map(|g| g * g).sum();
    let kinetic = -0.5 * (d.laplacian + grad_sq);
    if !kinetic.is_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok(LocalEnergyBreakdown::new(kinetic, wf.potential(x)?))
}

/// Local energies for a batch of flat configurations.
pub fn local_energies<W: WaveFunction>(
    wf: &W,
    params: &[f64],
    configs: &[Vec<f64>],
) -> Vec<Result<LocalEnergyBreakdown, EvalError>> {
    configs.iter().map(|x| local_energy(wf, params, x)).collect()
}
