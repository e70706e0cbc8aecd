//! Exact Fock-space simulator for interferometric entanglement generation
//! between single-atom qubits.
//!
//! A light pulse passes through a two-arm interferometer enclosing two
//! qubits whose internal state imprints an arm-dependent phase; measuring
//! the output collapses the qubit pair onto the balanced subspace
//! {|01>, |10>} (null result) or the imbalanced subspace {|00>, |11>},
//! creating entanglement on demand. Three input classes are covered, each
//! with its own measurement model and false-null rate:
//!
//! - coherent light with upper-port photon counting (rate epsilon),
//! - twin-Fock |N,N> input with number-difference readout (rate eta),
//! - NOON states through a nonlinear beamsplitter with a presence
//!   detector (rate kappa).
//!
//! The crate provides the exact dual-mode state machinery ([`fock`]),
//! qubit-light joint states and partial traces ([`qubit`]), the pipelines,
//! measurement models and error rates ([`interferometer`]), scalar
//! spontaneous-emission/cavity/loss budgets ([`budget`]), and the
//! application protocols: teleportation, GHZ chains and entanglement
//! swapping ([`protocols`]).

pub mod budget;
pub mod error;
pub mod fock;
pub mod interferometer;
pub mod protocols;
pub mod qubit;

pub use error::{QilError, Result};
pub use fock::{
    apply_annihilation, apply_beamsplitter, apply_nbs, apply_phase, inner_product, make_state,
    DualModeState, Mode, StateSpec, DEFAULT_TAIL_TOLERANCE,
};
pub use interferometer::{
    collapse, epsilon_closed, epsilon_simulated, eta, fidelities, find_first_zero, kappa_closed,
    kappa_prime, kappa_simulated, outcome_distribution, run_mz, run_noon, xi_m, OutcomeRecord,
    OutcomeValue, Scheme, Subspace, TwinFockAnalyzer, XiAmplitudes, ZeroScheme,
};
pub use qubit::{
    apply_qubit_interaction, balanced_weight, extract_qubits, make_joint, make_joint_register,
    partial_trace_light, qubit_fidelity, JointState, MixedEnsemble, QubitAmplitudes,
    QubitRegister,
};
