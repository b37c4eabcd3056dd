//! Hand-written wavefunctions with known local energies, used to validate
//! the kinetic energy, sampler and estimators independently of the network.

use crate::ansatz::SignedLog;
use crate::autodiff::Scalar;
use crate::error::EvalError;
use crate::geometry::{PotentialKind, SystemSpec};
use crate::hamiltonian::{potential, PotentialTerms};
use crate::wavefunction::WaveFunction;

fn check_shape(expected: usize, got: usize) -> Result<(), EvalError> {
    if expected == got {
        Ok(())
    } else {
        Err(EvalError::Shape { expected, got })
    }
}

/// `psi = exp(-zeta sum_i |r_i - R_0|)` around the first nucleus.
///
/// With one electron, `zeta = Z` and a Coulomb potential this is the exact
/// ground state with energy `-Z^2 / 2`.
#[derive(Debug, Clone)]
pub struct SlaterOrbital {
    pub system: SystemSpec,
}

impl SlaterOrbital {
    pub fn new(system: SystemSpec) -> Self {
        Self { system }
    }

    pub fn hydrogen() -> Self {
        Self::new(SystemSpec::atom(1).expect("hydrogen"))
    }
}

impl WaveFunction for SlaterOrbital {
    fn n_coords(&self) -> usize {
        3 * self.system.n_electrons()
    }

    fn n_params(&self) -> usize {
        1
    }

    fn log_psi<S: Scalar>(&self, params: &[S::Param], x: &[S]) -> Result<SignedLog<S>, EvalError> {
        check_shape(1, params.len())?;
        check_shape(self.n_coords(), x.len())?;
        let centre = self.system.nuclei()[0].position;
        let mut sum = S::cst(0.0);
        for r in x.chunks_exact(3) {
            let v = [0, 1, 2].map(|d| r[d] - S::cst(centre[d]));
            sum = sum + S::dot(&v, &v).sqrt();
        }
        Ok(SignedLog { sign: 1, logmag: -(S::lift(params[0]) * sum) })
    }

    fn potential(&self, x: &[f64]) -> Result<PotentialTerms, EvalError> {
        potential(&self.system, x)
    }
}

/// `psi = exp(-zeta/2 sum_i |r_i|^2)`; with `zeta = 1` and the harmonic
/// potential each electron contributes exactly `3/2`.
#[derive(Debug, Clone)]
pub struct GaussianOrbital {
    pub system: SystemSpec,
}

impl GaussianOrbital {
    pub fn new(system: SystemSpec) -> Self {
        Self { system }
    }

    /// One particle in the isotropic harmonic well.
    pub fn oscillator() -> Self {
        Self::new(SystemSpec::atom(1).expect("one particle").with_potential(PotentialKind::Harmonic))
    }
}

impl WaveFunction for GaussianOrbital {
    fn n_coords(&self) -> usize {
        3 * self.system.n_electrons()
    }

    fn n_params(&self) -> usize {
        1
    }

    fn log_psi<S: Scalar>(&self, params: &[S::Param], x: &[S]) -> Result<SignedLog<S>, EvalError> {
        check_shape(1, params.len())?;
        check_shape(self.n_coords(), x.len())?;
        Ok(SignedLog { sign: 1, logmag: -(S::lift(params[0]) * S::dot(x, x)).scale(0.5) })
    }

    fn potential(&self, x: &[f64]) -> Result<PotentialTerms, EvalError> {
        potential(&self.system, x)
    }
}
