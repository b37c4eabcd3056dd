//! The interface shared by every trial wavefunction.

use crate::ansatz::SignedLog;
use crate::autodiff::Scalar;
use crate::error::EvalError;
use crate::hamiltonian::PotentialTerms;

/// A parametric trial wavefunction over a flat coordinate vector.
///
/// `log_psi` is written once and evaluated with every [`Scalar`] carrier:
/// plain `f64` for sampling, jets for the kinetic energy and the gradient
/// tape for parameter derivatives.
pub trait WaveFunction: Sync {
    /// Length of the coordinate vector (`3N` for molecules).
    fn n_coords(&self) -> usize;

    fn n_params(&self) -> usize;

    /// `(sign, ln|psi|)` at `x`.
    fn log_psi<S: Scalar>(&self, params: &[S::Param], x: &[S]) -> Result<SignedLog<S>, EvalError>;

    fn potential(&self, x: &[f64]) -> Result<PotentialTerms, EvalError>;
}
