//! Shared oracles for the integration and acceptance suites. These stay
//! independent of the implementation paths they check: the beamsplitter
//! oracle is a dense matrix exponential over the truncated two-mode basis,
//! and the Legendre recurrence pins the twin-Fock null amplitude.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

/// All (n0, n1) with n0 + n1 <= cutoff, grouped in sector order.
pub fn basis(cutoff: u32) -> Vec<(u32, u32)> {
    let mut keys = Vec::new();
    for s in 0..=cutoff {
        for n0 in 0..=s {
            keys.push((n0, s - n0));
        }
    }
    keys
}

/// Dense oracle: exponentiate the full generator a0^dag a1 + a1^dag a0 on
/// the truncated basis through its eigendecomposition.
pub fn dense_bs_unitary(cutoff: u32) -> (Vec<(u32, u32)>, DMatrix<Complex64>) {
    let keys = basis(cutoff);
    let index: std::collections::HashMap<(u32, u32), usize> = keys
        .iter()
        .copied()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let dim = keys.len();
    let mut g = DMatrix::<f64>::zeros(dim, dim);
    for (i, &(n0, n1)) in keys.iter().enumerate() {
        if n1 >= 1 {
            let j = index[&(n0 + 1, n1 - 1)];
            g[(j, i)] += (((n0 + 1) * n1) as f64).sqrt();
        }
        if n0 >= 1 {
            let j = index[&(n0 - 1, n1 + 1)];
            g[(j, i)] += ((n0 * (n1 + 1)) as f64).sqrt();
        }
    }
    let eig = g.symmetric_eigen();
    let theta = std::f64::consts::FRAC_PI_4;
    let mut u = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += Complex64::from_polar(1.0, -theta * eig.eigenvalues[k])
                    * eig.eigenvectors[(i, k)]
                    * eig.eigenvectors[(j, k)];
            }
            u[(i, j)] = acc;
        }
    }
    (keys, u)
}

/// Legendre polynomial P_n(x) by the stable upward recurrence.
pub fn legendre(n: u32, x: f64) -> f64 {
    let mut p_prev = 1.0;
    if n == 0 {
        return p_prev;
    }
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    p
}
