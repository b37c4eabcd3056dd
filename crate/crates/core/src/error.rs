use alloc::string::String;

/// Rejections raised while validating a molecule or a configuration.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("system needs at least one nucleus")]
    NoNuclei,
    #[error("nucleus {index}: charge must be >= 1, got {charge}")]
    BadCharge { index: usize, charge: i64 },
    #[error("nuclei {first} and {second} sit at the same position")]
    DuplicateNuclei { first: usize, second: usize },
    #[error("system needs at least one electron")]
    NoElectrons,
    #[error("non-finite coordinate in {0}")]
    NonFinite(String),
    #[error("electron index {index} out of range for {n} electrons")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("electrons {i} and {j} have opposite spin")]
    MixedSpin { i: usize, j: usize },
    #[error("expected {expected} coordinates, got {got}")]
    CoordinateCount { expected: usize, got: usize },
    #[error("unknown element symbol {0:?}")]
    UnknownElement(String),
}

/// A wavefunction or energy evaluation that could not produce a finite value.
///
/// The sampler treats any of these as a rejected proposal.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("wavefunction is zero at this configuration")]
    Node,
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("particle coincidence in the Coulomb potential")]
    Coincidence,
    #[error("input length mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
}
