use thiserror::Error;

/// Errors produced by state constructors, optical operations and budget
/// formulas.
#[derive(Debug, Clone, Error)]
pub enum QilError {
    /// A state or parameter specification is outside its documented domain.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// Annihilation applied to a mode with no photons: the result has zero
    /// norm and the caller must branch instead of renormalizing.
    #[error("annihilation on mode {mode} of a state with no photons in that mode")]
    ZeroAmplitude { mode: usize },

    /// The nonlinear beamsplitter is only defined on states supported by
    /// the extremal kets |s,0> and |0,s> of each photon-number sector.
    #[error("state has weight {amplitude:.3e} outside the NOON manifold at (n0={n0}, n1={n1})")]
    OutsideNoonManifold { n0: u32, n1: u32, amplitude: f64 },

    /// Qubit index past the end of the register.
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitIndexOutOfRange { index: usize, n_qubits: usize },

    /// Two states that should live in the same qubit space do not.
    #[error("qubit dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// Conditioning on a measurement record that cannot occur.
    #[error("conditioning on an outcome of probability {probability:.3e}")]
    ZeroProbabilityOutcome { probability: f64 },

    /// A scalar budget left its physical domain (e.g. a probability above
    /// one); the offending value is carried so callers can report it.
    #[error("parameter regime violation: {what} = {value:.6e}")]
    RegimeViolation { what: &'static str, value: f64 },

    /// Root bracketing failed: no sign change of the null amplitude in the
    /// searched interval.
    #[error("no sign change of the null amplitude for N*theta in (0, {searched_up_to}]")]
    NoSignChange { searched_up_to: f64 },
}

pub type Result<T> = std::result::Result<T, QilError>;
