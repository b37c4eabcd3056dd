//! Variational Monte Carlo with the sortlet ansatz.
//!
//! A sortlet antisymmetrizes a permutation-equivariant score function by
//! sorting: the wavefunction value is the parity of the sorting permutation
//! times a product of gaps between the sorted scores. Evaluation is
//! `O(N log N)` in the number of electrons, compared to `O(N^3)` for a
//! determinant.
//!
//! The crate is `no_std` (with `alloc`) and contains only the numerical
//! engine:
//!
//! * [`geometry`] - molecules, electron configurations, exchange paths
//! * [`autodiff`] - dual numbers, second-order jets and a reverse-mode tape
//! * [`backbone`] - the equivariant score network and its parameter layout
//! * [`ansatz`] - sortlets, the Vandermonde comparator, Jastrow, envelopes
//! * [`hamiltonian`] - Coulomb potential and local energy
//! * [`sampler`] - Metropolis-Hastings walkers over `|psi|^2`
//! * [`optimizer`] - energy statistics, gradient estimator, Adam, training
//! * [`probes`] - executable checks of the structural properties
//!
//! File formats, the command-line interface and thread pools live in the
//! companion `sortlet-cli` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ansatz;
pub mod autodiff;
pub mod backbone;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod hamiltonian;
pub(crate) mod math;
pub mod optimizer;
pub mod probes;
pub mod sampler;
pub mod toy;
pub mod wavefunction;

pub use error::{EvalError, GeometryError};
pub use wavefunction::WaveFunction;
