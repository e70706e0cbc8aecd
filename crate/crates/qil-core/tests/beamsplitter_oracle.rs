//! Cross-checks of the sector-recurrence beamsplitter against a dense
//! matrix-exponential oracle, plus property tests of the elementary
//! optical operations on random states.

use num_complex::Complex64;
use proptest::prelude::*;

use qil_core::{
    apply_beamsplitter, apply_nbs, apply_phase, inner_product, DualModeState, Mode, StateSpec,
};

mod common;
use common::{basis, dense_bs_unitary};

#[test]
fn matches_dense_oracle_on_all_basis_states() {
    let cutoff = 8;
    let (keys, u) = dense_bs_unitary(cutoff);
    let mut worst = 0.0f64;
    for (col, &(n0, n1)) in keys.iter().enumerate() {
        let out = apply_beamsplitter(&DualModeState::fock(n0, n1));
        for (row, &(m0, m1)) in keys.iter().enumerate() {
            let diff = (out.amplitude(m0, m1) - u[(row, col)]).norm();
            worst = worst.max(diff);
        }
    }
    assert!(worst < 1e-10, "max amplitude difference {worst:.3e}");
}

/// Random normalized state with support up to the cutoff.
fn random_state(cutoff: u32) -> impl Strategy<Value = DualModeState> {
    let dim = basis(cutoff).len();
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map(
        "norm too small",
        move |parts| {
            let norm: f64 = parts.iter().map(|(re, im)| re * re + im * im).sum();
            if norm < 1e-3 {
                return None;
            }
            let inv = 1.0 / norm.sqrt();
            let keys = basis(cutoff);
            let state = DualModeState::from_parts(
                keys.iter()
                    .zip(parts.iter())
                    .map(|(&k, &(re, im))| (k, Complex64::new(re * inv, im * inv))),
            );
            Some(state)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beamsplitter_is_unitary(state in random_state(10)) {
        let out = apply_beamsplitter(&state);
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn beamsplitter_preserves_sector_weights(state in random_state(9)) {
        let out = apply_beamsplitter(&state);
        for s in 0..=9u32 {
            let w_in: f64 = state
                .entries()
                .filter(|((a, b), _)| a + b == s)
                .map(|(_, amp)| amp.norm_sqr())
                .sum();
            let w_out: f64 = out
                .entries()
                .filter(|((a, b), _)| a + b == s)
                .map(|(_, amp)| amp.norm_sqr())
                .sum();
            prop_assert!((w_in - w_out).abs() < 1e-10);
        }
    }

    #[test]
    fn double_pass_swaps_modes_with_phase(state in random_state(8)) {
        // two cascaded 50/50 splitters: |k,l> -> (-i)^{k+l} |l,k>
        let out = apply_beamsplitter(&apply_beamsplitter(&state));
        for ((n0, n1), amp) in state.entries() {
            let k = ((n0 + n1) % 4) as usize;
            let phase = [
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 1.0),
            ][k];
            let expect = amp * phase;
            prop_assert!((out.amplitude(n1, n0) - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn phase_preserves_norm_exactly(state in random_state(10), theta in -6.0f64..6.0) {
        let out = apply_phase(&state, theta, Mode::Lower);
        prop_assert!((out.norm_sqr() - state.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn bs_agrees_with_oracle_on_random_states(state in random_state(6)) {
        let (keys, u) = dense_bs_unitary(6);
        let out = apply_beamsplitter(&state);
        let vin: Vec<Complex64> = keys.iter().map(|&(a, b)| state.amplitude(a, b)).collect();
        for (row, &(m0, m1)) in keys.iter().enumerate() {
            let mut expect = Complex64::new(0.0, 0.0);
            for (col, v) in vin.iter().enumerate() {
                expect += u[(row, col)] * v;
            }
            prop_assert!((out.amplitude(m0, m1) - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn nbs_is_unitary_on_noon_manifold(
        weights in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
    ) {
        // random superposition of |s,0> and |0,s| kets up to s = 6
        let mut entries = Vec::new();
        let mut norm = 0.0;
        for (s, chunk) in weights.chunks(2).enumerate() {
            let a = Complex64::new(chunk[0].0, chunk[0].1);
            let b = Complex64::new(chunk[1].0, chunk[1].1);
            norm += a.norm_sqr() + if s > 0 { b.norm_sqr() } else { 0.0 };
            entries.push(((s as u32, 0), a));
            if s > 0 {
                entries.push(((0, s as u32), b));
            }
        }
        prop_assume!(norm > 1e-3);
        let inv = 1.0 / norm.sqrt();
        let state = DualModeState::from_parts(
            entries.into_iter().map(|(k, a)| (k, a * inv)),
        );
        let out = apply_nbs(&state).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        // applying it twice returns the input up to the sector sign structure:
        // the rotation is an involution on each sector pair
        let back = apply_nbs(&out).unwrap();
        let overlap = inner_product(&state, &back);
        prop_assert!((overlap.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coherent_state_respects_tail_bound(mean in 0.1f64..80.0) {
        let state = qil_core::make_state(
            &StateSpec::Coherent {
                alpha: Complex64::new(mean.sqrt(), 0.0),
                port: Mode::Upper,
            },
            1e-10,
        )
        .unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!(state.tail_mass() < 1e-10);
    }
}
