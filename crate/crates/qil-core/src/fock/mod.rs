//! Exact dual-mode bosonic state representation and the elementary optical
//! operations: state constructors, 50/50 beamsplitter, per-mode phases,
//! annihilation and the nonlinear beamsplitter.

mod beamsplitter;
mod state;

pub use beamsplitter::apply_beamsplitter;
pub use state::{
    apply_annihilation, apply_nbs, apply_phase, inner_product, make_state, DualModeState, Mode,
    StateSpec, DEFAULT_TAIL_TOLERANCE, MAX_TAIL_TOLERANCE, NBS_DOMAIN_TOLERANCE,
};
