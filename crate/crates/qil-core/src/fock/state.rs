//! Dual-mode bosonic states in the photon-number basis.
//!
//! A state is stored sector by sector: the total photon number s = n0 + n1
//! is conserved by every passive optical element used here, so amplitudes
//! are kept as one dense vector per sector, indexed by n0. This makes the
//! sector structure of the beamsplitter explicit and keeps parity
//! statements (e.g. even number differences for twin-Fock inputs) exact
//! rather than approximate.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{QilError, Result};

/// Largest tail tolerance accepted when truncating coherent ladders.
pub const MAX_TAIL_TOLERANCE: f64 = 1e-6;

/// Default truncation tolerance for coherent-state ladders.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Amplitude threshold above which support outside the NOON manifold is a
/// domain error for the nonlinear beamsplitter.
pub const NBS_DOMAIN_TOLERANCE: f64 = 1e-10;

/// One of the two optical modes (interferometer arms / polarizations).
///
/// `Upper` couples to qubit state |0>, `Lower` to |1>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Upper,
    Lower,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::Upper => 0,
            Mode::Lower => 1,
        }
    }

    /// Mode matching a qubit basis bit: bit 0 -> upper arm, bit 1 -> lower.
    pub fn from_bit(bit: u8) -> Mode {
        if bit == 0 {
            Mode::Upper
        } else {
            Mode::Lower
        }
    }
}

/// Input light field specification.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    /// Number state |n0, n1>.
    Fock { n0: u32, n1: u32 },
    /// Coherent state of amplitude `alpha` in one port, vacuum in the other.
    Coherent { alpha: Complex64, port: Mode },
    /// Twin-Fock state |N, N>.
    TwinFock { n: u32 },
    /// (|N,0> + e^{i phase}|0,N>)/sqrt(2).
    Noon { n: u32, phase: f64 },
    /// (|alpha>|0> + |0>|alpha>) normalized, branch overlap included.
    CoherentNoon { alpha: Complex64 },
}

/// Complex amplitude table over photon-number pairs (n0, n1), grouped by
/// total photon number. Normalized on construction; all operations here
/// preserve the norm (annihilation returns the removed weight explicitly).
#[derive(Debug, Clone)]
pub struct DualModeState {
    /// sector s -> amplitudes indexed by n0 (length s + 1)
    sectors: BTreeMap<u32, Vec<Complex64>>,
    cutoff: u32,
    tail_mass: f64,
}

impl DualModeState {
    pub(crate) fn from_sectors(
        mut sectors: BTreeMap<u32, Vec<Complex64>>,
        cutoff: u32,
        tail_mass: f64,
    ) -> DualModeState {
        sectors.retain(|_, v| v.iter().any(|a| a.norm_sqr() > 0.0));
        DualModeState {
            sectors,
            cutoff,
            tail_mass,
        }
    }

    /// Assemble a state from explicit ((n0, n1), amplitude) entries; zero
    /// entries are dropped and the cutoff is the largest occupied sector.
    /// The caller is responsible for normalization.
    pub fn from_parts<I>(entries: I) -> DualModeState
    where
        I: IntoIterator<Item = ((u32, u32), Complex64)>,
    {
        Self::from_entry_list(entries)
    }

    pub(crate) fn from_entry_list<I>(entries: I) -> DualModeState
    where
        I: IntoIterator<Item = ((u32, u32), Complex64)>,
    {
        let mut sectors: BTreeMap<u32, Vec<Complex64>> = BTreeMap::new();
        let mut cutoff = 0;
        for ((n0, n1), amp) in entries {
            let s = n0 + n1;
            cutoff = cutoff.max(s);
            let v = sectors
                .entry(s)
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); (s + 1) as usize]);
            v[n0 as usize] = amp;
        }
        DualModeState::from_sectors(sectors, cutoff, 0.0)
    }

    /// Basis state |n0, n1>.
    pub fn fock(n0: u32, n1: u32) -> DualModeState {
        let s = n0 + n1;
        let mut v = vec![Complex64::new(0.0, 0.0); (s + 1) as usize];
        v[n0 as usize] = Complex64::new(1.0, 0.0);
        let mut sectors = BTreeMap::new();
        sectors.insert(s, v);
        DualModeState {
            sectors,
            cutoff: s,
            tail_mass: 0.0,
        }
    }

    /// Maximum total photon number retained.
    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// Probability mass discarded when the state was truncated.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn amplitude(&self, n0: u32, n1: u32) -> Complex64 {
        match self.sectors.get(&(n0 + n1)) {
            Some(v) => v[n0 as usize],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Iterate over ((n0, n1), amplitude) for all retained entries.
    pub fn entries(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.sectors.iter().flat_map(|(&s, v)| {
            v.iter()
                .enumerate()
                .map(move |(n0, &a)| ((n0 as u32, s - n0 as u32), a))
        })
    }

    pub(crate) fn sectors(&self) -> &BTreeMap<u32, Vec<Complex64>> {
        &self.sectors
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sectors
            .values()
            .flat_map(|v| v.iter())
            .map(|a| a.norm_sqr())
            .sum()
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for v in self.sectors.values_mut() {
            for a in v.iter_mut() {
                *a *= factor;
            }
        }
    }

    /// Expectation value of the photon number in one mode.
    pub fn mean_photons(&self, mode: Mode) -> f64 {
        self.entries()
            .map(|((n0, n1), a)| {
                let n = if mode == Mode::Upper { n0 } else { n1 };
                n as f64 * a.norm_sqr()
            })
            .sum()
    }
}

/// <a|b> over the union of supports.
pub fn inner_product(a: &DualModeState, b: &DualModeState) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (s, va) in a.sectors.iter() {
        if let Some(vb) = b.sectors.get(s) {
            for (x, y) in va.iter().zip(vb.iter()) {
                acc += x.conj() * y;
            }
        }
    }
    acc
}

/// Multiply each amplitude by e^{-i theta n_mode}. Exactly norm-preserving.
pub fn apply_phase(state: &DualModeState, theta: f64, mode: Mode) -> DualModeState {
    let mut sectors = BTreeMap::new();
    for (&s, v) in state.sectors.iter() {
        let out: Vec<Complex64> = v
            .iter()
            .enumerate()
            .map(|(n0, &a)| {
                let n = if mode == Mode::Upper {
                    n0 as u32
                } else {
                    s - n0 as u32
                };
                a * Complex64::from_polar(1.0, -theta * n as f64)
            })
            .collect();
        sectors.insert(s, out);
    }
    DualModeState {
        sectors,
        cutoff: state.cutoff,
        tail_mass: state.tail_mass,
    }
}

/// Apply the annihilation operator for `mode`, renormalized. Returns the
/// state together with the removed weight <n_mode>; a mode containing no
/// photons is an error so the caller can branch on it.
pub fn apply_annihilation(
    state: &DualModeState,
    mode: Mode,
) -> Result<(DualModeState, f64)> {
    let weight = state.mean_photons(mode);
    if weight <= 1e-280 {
        return Err(QilError::ZeroAmplitude { mode: mode.index() });
    }
    let inv = 1.0 / weight.sqrt();
    let mut sectors = BTreeMap::new();
    for (&s, v) in state.sectors.iter() {
        if s == 0 {
            continue;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); s as usize];
        match mode {
            Mode::Upper => {
                // amplitude at (n0, n1) comes from (n0 + 1, n1) with sqrt(n0 + 1)
                for i in 0..s as usize {
                    out[i] = v[i + 1] * ((i + 1) as f64).sqrt() * inv;
                }
            }
            Mode::Lower => {
                for i in 0..s as usize {
                    out[i] = v[i] * ((s as usize - i) as f64).sqrt() * inv;
                }
            }
        }
        if out.iter().any(|a| a.norm_sqr() > 0.0) {
            sectors.insert(s - 1, out);
        }
    }
    let cutoff = state.cutoff.saturating_sub(1);
    Ok((
        DualModeState {
            sectors,
            cutoff,
            tail_mass: state.tail_mass,
        },
        weight,
    ))
}

/// Nonlinear beamsplitter: within each sector s >= 1 the extremal pair is
/// rotated as |s,0> -> (|s,0> + |0,s>)/sqrt(2), |0,s> -> (|s,0> - |0,s>)/sqrt(2);
/// the vacuum is fixed. Support on interior kets above `NBS_DOMAIN_TOLERANCE`
/// is a domain error (the operator is only defined on the NOON manifold).
pub fn apply_nbs(state: &DualModeState) -> Result<DualModeState> {
    for (&s, v) in state.sectors.iter() {
        for n0 in 1..s as usize {
            let mag = v[n0].norm();
            if mag > NBS_DOMAIN_TOLERANCE {
                return Err(QilError::OutsideNoonManifold {
                    n0: n0 as u32,
                    n1: s - n0 as u32,
                    amplitude: mag,
                });
            }
        }
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut sectors = BTreeMap::new();
    for (&s, v) in state.sectors.iter() {
        if s == 0 {
            sectors.insert(s, v.clone());
            continue;
        }
        let mut out = v.clone();
        let upper = v[s as usize]; // (s, 0)
        let lower = v[0]; // (0, s)
        out[s as usize] = (upper + lower) * inv_sqrt2;
        out[0] = (upper - lower) * inv_sqrt2;
        sectors.insert(s, out);
    }
    Ok(DualModeState {
        sectors,
        cutoff: state.cutoff,
        tail_mass: state.tail_mass,
    })
}

/// Poisson amplitude ladder of a coherent state, truncated so the discarded
/// probability mass stays below `tol`. Returns (first retained n, amplitudes
/// from that n upward, discarded mass). Built outward from the peak so no
/// intermediate under- or overflows occur even for large mean numbers.
fn coherent_ladder(alpha: Complex64, tol: f64) -> (u32, Vec<Complex64>, f64) {
    let mean = alpha.norm_sqr();
    if mean == 0.0 {
        return (0, vec![Complex64::new(1.0, 0.0)], 0.0);
    }
    let mag = alpha.norm();
    let peak = mean.floor() as usize;
    const REL_FLOOR: f64 = 1e-170;

    // relative magnitudes u_n, u_peak = 1
    let mut above: Vec<f64> = Vec::new();
    let mut u = 1.0f64;
    let mut n = peak;
    loop {
        u *= mag / ((n + 1) as f64).sqrt();
        n += 1;
        above.push(u);
        if u < REL_FLOOR {
            break;
        }
    }
    let mut below: Vec<f64> = Vec::new(); // peak-1, peak-2, ...
    let mut u = 1.0f64;
    let mut n = peak;
    while n > 0 {
        u *= (n as f64).sqrt() / mag;
        below.push(u);
        n -= 1;
        if u < REL_FLOOR {
            break;
        }
    }

    let lo = peak - below.len();
    let mut p: Vec<f64> = Vec::with_capacity(below.len() + 1 + above.len());
    p.extend(below.iter().rev().map(|u| u * u));
    p.push(1.0);
    p.extend(above.iter().map(|u| u * u));
    let z: f64 = p.iter().sum();

    // trim each tail to below tol/2
    let mut hi_cut = p.len();
    let mut hi_tail = 0.0;
    while hi_cut > 0 && hi_tail + p[hi_cut - 1] / z < tol / 2.0 {
        hi_tail += p[hi_cut - 1] / z;
        hi_cut -= 1;
    }
    let mut lo_cut = 0;
    let mut lo_tail = 0.0;
    while lo_cut < hi_cut && lo_tail + p[lo_cut] / z < tol / 2.0 {
        lo_tail += p[lo_cut] / z;
        lo_cut += 1;
    }
    let tail = hi_tail + lo_tail;

    let kept: f64 = p[lo_cut..hi_cut].iter().sum();
    let phase = alpha.arg();
    let amps: Vec<Complex64> = (lo_cut..hi_cut)
        .map(|i| {
            let nn = (lo + i) as f64;
            Complex64::from_polar((p[i] / kept).sqrt(), nn * phase)
        })
        .collect();
    ((lo + lo_cut) as u32, amps, tail)
}

/// Build a normalized state from its specification. For coherent kinds the
/// cutoff is the smallest total photon number whose discarded Poisson tail
/// stays below `tail_tolerance`.
pub fn make_state(spec: &StateSpec, tail_tolerance: f64) -> Result<DualModeState> {
    if !(tail_tolerance > 0.0 && tail_tolerance <= MAX_TAIL_TOLERANCE) {
        return Err(QilError::InvalidSpec(format!(
            "tail tolerance {tail_tolerance:e} outside (0, {MAX_TAIL_TOLERANCE:e}]"
        )));
    }
    match *spec {
        StateSpec::Fock { n0, n1 } => Ok(DualModeState::fock(n0, n1)),
        StateSpec::TwinFock { n } => Ok(DualModeState::fock(n, n)),
        StateSpec::Noon { n, phase } => {
            if !phase.is_finite() {
                return Err(QilError::InvalidSpec("non-finite NOON phase".into()));
            }
            if n == 0 {
                // degenerate: both branches are the vacuum
                let norm = (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, phase)).norm();
                if norm < 1e-12 {
                    return Err(QilError::InvalidSpec(
                        "NOON state with N=0 and phase pi has zero norm".into(),
                    ));
                }
                return Ok(DualModeState::fock(0, 0));
            }
            let mut v = vec![Complex64::new(0.0, 0.0); (n + 1) as usize];
            v[n as usize] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v[0] = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, phase);
            let mut sectors = BTreeMap::new();
            sectors.insert(n, v);
            Ok(DualModeState::from_sectors(sectors, n, 0.0))
        }
        StateSpec::Coherent { alpha, port } => {
            if !alpha.re.is_finite() || !alpha.im.is_finite() {
                return Err(QilError::InvalidSpec("non-finite coherent amplitude".into()));
            }
            let (lo, amps, tail) = coherent_ladder(alpha, tail_tolerance);
            let cutoff = lo + amps.len() as u32 - 1;
            let mut sectors = BTreeMap::new();
            for (i, &a) in amps.iter().enumerate() {
                let n = lo + i as u32;
                let mut v = vec![Complex64::new(0.0, 0.0); (n + 1) as usize];
                let idx = if port == Mode::Upper { n as usize } else { 0 };
                v[idx] = a;
                sectors.insert(n, v);
            }
            Ok(DualModeState::from_sectors(sectors, cutoff, tail))
        }
        StateSpec::CoherentNoon { alpha } => {
            if !alpha.re.is_finite() || !alpha.im.is_finite() {
                return Err(QilError::InvalidSpec("non-finite coherent amplitude".into()));
            }
            let (lo, amps, tail) = coherent_ladder(alpha, tail_tolerance);
            let cutoff = lo + amps.len() as u32 - 1;
            let mut sectors = BTreeMap::new();
            for (i, &a) in amps.iter().enumerate() {
                let n = lo + i as u32;
                let mut v = vec![Complex64::new(0.0, 0.0); (n + 1) as usize];
                if n == 0 {
                    // |0,0> appears in both branches
                    v[0] = a * 2.0;
                } else {
                    v[n as usize] = a;
                    v[0] = a;
                }
                sectors.insert(n, v);
            }
            let mut state = DualModeState::from_sectors(sectors, cutoff, tail);
            let norm = state.norm_sqr().sqrt();
            state.scale(1.0 / norm);
            Ok(state)
        }
    }
}
