//! Interferometer pipelines, measurement models and error rates.
//!
//! The Mach-Zehnder pipeline is beamsplitter, qubit-x interaction, qubit-y
//! interaction, beamsplitter; the NOON pipeline drops the first splitter
//! (the input is already a NOON state) and replaces the second with the
//! nonlinear beamsplitter. Three measurement schemes condition the qubits:
//! counting upper-port photons (coherent input), the photon number
//! difference (twin-Fock input), and photon presence in the lower port
//! (NOON input). A null result collapses the qubits onto the balanced
//! subspace up to a false-null contamination of sqrt(err); the three
//! schemes' false-null rates are epsilon, eta and kappa.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{QilError, Result};
use crate::fock::{
    apply_beamsplitter, apply_nbs, apply_phase, make_state, DualModeState, Mode, StateSpec,
};
use crate::qubit::{
    apply_qubit_interaction, make_joint, partial_trace_light, Branch, JointState, MixedEnsemble,
    QubitAmplitudes,
};

/// Input light kind, which also fixes the measurement model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Coherent input; photon count in the upper output port.
    Coherent,
    /// Twin-Fock input; photon number difference between the ports.
    TwinFock,
    /// NOON input; photon presence in the lower output port.
    Noon,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Coherent => "coherent",
            Scheme::TwinFock => "tf",
            Scheme::Noon => "noon",
        }
    }
}

/// Measurement result in the scheme's native value space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutcomeValue {
    PhotonCount(u32),
    NumberDifference(i64),
    LowerOccupied(bool),
}

impl OutcomeValue {
    /// A null result: zero photons, zero difference, or an empty lower port.
    pub fn is_null(self) -> bool {
        match self {
            OutcomeValue::PhotonCount(n) => n == 0,
            OutcomeValue::NumberDifference(d) => d == 0,
            OutcomeValue::LowerOccupied(occ) => !occ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    Balanced,
    Imbalanced,
}

/// One measurement outcome: its probability and the conditioned qubit state
/// (light measured out through the exact partial trace).
#[derive(Debug, Clone)]
pub struct OutcomeRecord {
    pub scheme: Scheme,
    pub value: OutcomeValue,
    pub probability: f64,
    pub posterior: MixedEnsemble,
    pub subspace: Subspace,
}

/// Full MZ pipeline on qubits (0, 1).
pub fn run_mz(joint: &JointState, theta: f64) -> Result<JointState> {
    run_mz_pair(joint, theta, 0, 1)
}

/// MZ pipeline with a selected qubit pair; other register qubits are
/// untouched spectators.
pub fn run_mz_pair(
    joint: &JointState,
    theta: f64,
    qubit_x: usize,
    qubit_y: usize,
) -> Result<JointState> {
    let split = joint.transform_lights(|l| Ok(apply_beamsplitter(l)))?;
    let after_x = apply_qubit_interaction(&split, qubit_x, theta)?;
    let after_y = apply_qubit_interaction(&after_x, qubit_y, theta)?;
    after_y.transform_lights(|l| Ok(apply_beamsplitter(l)))
}

/// NOON pipeline on qubits (0, 1).
pub fn run_noon(joint: &JointState, theta: f64) -> Result<JointState> {
    run_noon_pair(joint, theta, 0, 1)
}

/// NOON pipeline with a selected qubit pair: qubit interactions followed by
/// the nonlinear beamsplitter. The light must stay on the NOON manifold.
pub fn run_noon_pair(
    joint: &JointState,
    theta: f64,
    qubit_x: usize,
    qubit_y: usize,
) -> Result<JointState> {
    let after_x = apply_qubit_interaction(joint, qubit_x, theta)?;
    let after_y = apply_qubit_interaction(&after_x, qubit_y, theta)?;
    after_y.transform_lights(apply_nbs)
}

fn group_key(scheme: Scheme, n0: u32, n1: u32) -> i64 {
    match scheme {
        Scheme::Coherent => n0 as i64,
        Scheme::TwinFock => n0 as i64 - n1 as i64,
        Scheme::Noon => (n1 > 0) as i64,
    }
}

fn value_of(scheme: Scheme, key: i64) -> OutcomeValue {
    match scheme {
        Scheme::Coherent => OutcomeValue::PhotonCount(key as u32),
        Scheme::TwinFock => OutcomeValue::NumberDifference(key),
        Scheme::Noon => OutcomeValue::LowerOccupied(key != 0),
    }
}

type Groups = BTreeMap<i64, Vec<((u32, u32), Complex64)>>;

/// Probability floor below which an amplitude is rounding dust from an
/// exact zero (the splitter leaves ~1e-17 residue on extinguished kets)
/// rather than a physical outcome.
const MEASUREMENT_DUST: f64 = 1e-30;

fn light_groups(light: &DualModeState, scheme: Scheme) -> Groups {
    let mut groups: Groups = BTreeMap::new();
    for ((n0, n1), amp) in light.entries() {
        if amp.norm_sqr() > MEASUREMENT_DUST {
            groups
                .entry(group_key(scheme, n0, n1))
                .or_default()
                .push(((n0, n1), amp));
        }
    }
    groups
}

fn outcome_from_groups(
    joint: &JointState,
    grouped: &[(u32, Complex64, Arc<Groups>)],
    scheme: Scheme,
    key: i64,
) -> Option<OutcomeRecord> {
    let mut branches = BTreeMap::new();
    let mut probability = 0.0;
    for (branch_key, amp, groups) in grouped {
        let Some(entries) = groups.get(&key) else {
            continue;
        };
        let norm_sqr: f64 = entries.iter().map(|(_, a)| a.norm_sqr()).sum();
        if norm_sqr <= 0.0 {
            continue;
        }
        probability += amp.norm_sqr() * norm_sqr;
        let inv = 1.0 / norm_sqr.sqrt();
        let light = DualModeState::from_entry_list(
            entries.iter().map(|&((n0, n1), a)| ((n0, n1), a * inv)),
        );
        branches.insert(
            *branch_key,
            Branch {
                amp: amp * norm_sqr.sqrt(),
                light: Arc::new(light),
            },
        );
    }
    if branches.is_empty() {
        return None;
    }
    let inv = 1.0 / probability.sqrt();
    for b in branches.values_mut() {
        b.amp *= inv;
    }
    let posterior_joint = JointState::from_branches(joint.n_qubits(), branches);
    let value = value_of(scheme, key);
    Some(OutcomeRecord {
        scheme,
        value,
        probability,
        posterior: partial_trace_light(&posterior_joint),
        subspace: if value.is_null() {
            Subspace::Balanced
        } else {
            Subspace::Imbalanced
        },
    })
}

fn grouped_branches(joint: &JointState, scheme: Scheme) -> Vec<(u32, Complex64, Arc<Groups>)> {
    let mut cache: HashMap<usize, Arc<Groups>> = HashMap::new();
    joint
        .branches()
        .map(|(key, b)| {
            let ptr = Arc::as_ptr(&b.light) as usize;
            let groups = cache
                .entry(ptr)
                .or_insert_with(|| Arc::new(light_groups(&b.light, scheme)))
                .clone();
            (key, b.amp, groups)
        })
        .collect()
}

/// Exact outcome distribution of the scheme's measurement on a pipeline
/// output. Posteriors are conditioned by projection and renormalization,
/// with the unmeasured light register removed by the exact partial trace.
pub fn outcome_distribution(joint: &JointState, scheme: Scheme) -> Result<Vec<OutcomeRecord>> {
    let grouped = grouped_branches(joint, scheme);
    let mut keys: BTreeSet<i64> = BTreeSet::new();
    for (_, _, groups) in &grouped {
        keys.extend(groups.keys());
    }
    Ok(keys
        .into_iter()
        .filter_map(|key| outcome_from_groups(joint, &grouped, scheme, key))
        .collect())
}

/// Condition on one observed outcome. Conditioning on an outcome that
/// cannot occur is an error.
pub fn collapse(
    joint: &JointState,
    scheme: Scheme,
    observed: OutcomeValue,
) -> Result<OutcomeRecord> {
    let grouped = grouped_branches(joint, scheme);
    let key = match observed {
        OutcomeValue::PhotonCount(n) => n as i64,
        OutcomeValue::NumberDifference(d) => d,
        OutcomeValue::LowerOccupied(occ) => occ as i64,
    };
    outcome_from_groups(joint, &grouped, scheme, key)
        .ok_or(QilError::ZeroProbabilityOutcome { probability: 0.0 })
}

/// False-null probability of the coherent scheme: e^{-N theta^2}.
pub fn epsilon_closed(n_mean: f64, theta: f64) -> f64 {
    (-n_mean * theta * theta).exp()
}

/// False-null probability of the NOON scheme: cos^2(N theta).
pub fn kappa_closed(n: f64, theta: f64) -> f64 {
    (n * theta).cos().powi(2)
}

/// Exactly simulated coherent false-null probability: the full pipeline is
/// run with both qubits in |0> (a purely imbalanced pair) and the zero-count
/// probability read off the output distribution.
pub fn epsilon_simulated(n_mean: f64, theta: f64, tail_tolerance: f64) -> Result<f64> {
    let light = make_state(
        &StateSpec::Coherent {
            alpha: Complex64::new(n_mean.sqrt(), 0.0),
            port: Mode::Upper,
        },
        tail_tolerance,
    )?;
    let joint = make_joint(
        &light,
        &[QubitAmplitudes::basis(0), QubitAmplitudes::basis(0)],
    )?;
    let out = run_mz(&joint, theta)?;
    let records = outcome_distribution(&out, Scheme::Coherent)?;
    Ok(records
        .iter()
        .find(|r| r.value == OutcomeValue::PhotonCount(0))
        .map_or(0.0, |r| r.probability))
}

/// Exactly simulated NOON false-null probability.
pub fn kappa_simulated(n: u32, theta: f64) -> Result<f64> {
    let light = make_state(&StateSpec::Noon { n, phase: 0.0 }, 1e-12)?;
    let joint = make_joint(
        &light,
        &[QubitAmplitudes::basis(0), QubitAmplitudes::basis(0)],
    )?;
    let out = run_noon(&joint, theta)?;
    let records = outcome_distribution(&out, Scheme::Noon)?;
    Ok(records
        .iter()
        .find(|r| r.value == OutcomeValue::LowerOccupied(false))
        .map_or(0.0, |r| r.probability))
}

/// Output amplitudes xi_m of the twin-Fock pipeline for one imbalanced
/// branch: the coefficient of |N+m, N-m> in the output light.
#[derive(Debug, Clone)]
pub struct XiAmplitudes {
    n: u32,
    amps: Vec<Complex64>,
}

impl XiAmplitudes {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Amplitude at number difference 2m (zero outside |m| <= N).
    pub fn m(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() > self.n as u64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.amps[(m + self.n as i64) as usize]
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Twin-Fock pipeline evaluator. The first beamsplitter does not depend on
/// the interaction phase, so it is applied once and reused across theta
/// values (sweeps, bisections, fits).
pub struct TwinFockAnalyzer {
    n: u32,
    after_first_bs: DualModeState,
    /// squared amplitudes of the post-splitter column, for the O(d) signed
    /// null amplitude: xi_0(theta) = sum_k b_k^2 e^{-2 i theta k}
    column_squares: Vec<Complex64>,
}

impl TwinFockAnalyzer {
    pub fn new(n: u32) -> TwinFockAnalyzer {
        let after_first_bs = apply_beamsplitter(&DualModeState::fock(n, n));
        let s = 2 * n;
        let column_squares = (0..=s)
            .map(|k| {
                let a = after_first_bs.amplitude(k, s - k);
                a * a
            })
            .collect();
        TwinFockAnalyzer {
            n,
            after_first_bs,
            column_squares,
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Output amplitudes for the imbalanced branch with per-qubit phase
    /// `theta` (both qubits in the same state, total arm phase 2 theta).
    pub fn xi(&self, theta: f64) -> XiAmplitudes {
        let phased = apply_phase(&self.after_first_bs, 2.0 * theta, Mode::Upper);
        let out = apply_beamsplitter(&phased);
        let s = 2 * self.n;
        let amps = (0..=s).map(|n0| out.amplitude(n0, s - n0)).collect();
        XiAmplitudes { n: self.n, amps }
    }

    /// False-null probability eta = |xi_0|^2.
    pub fn eta(&self, theta: f64) -> f64 {
        self.null_amplitude(theta).norm_sqr()
    }

    /// xi_0(theta) without evolving the full output vector: the second
    /// splitter exp(+i pi/4 G) applied to the real ket |N,N> is the complex
    /// conjugate of the first splitter's column, so the diagonal matrix
    /// element reduces to an O(d) phase sum.
    pub fn null_amplitude(&self, theta: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &c) in self.column_squares.iter().enumerate() {
            acc += c * Complex64::from_polar(1.0, -2.0 * theta * k as f64);
        }
        acc
    }

    /// xi_0 with the branch global phase (-1)^N e^{-2 i N theta} removed;
    /// real up to roundoff, suitable for sign-change bracketing.
    pub fn signed_null_amplitude(&self, theta: f64) -> f64 {
        let g = Complex64::from_polar(
            if self.n % 2 == 0 { 1.0 } else { -1.0 },
            -2.0 * self.n as f64 * theta,
        );
        (self.null_amplitude(theta) * g.conj()).re
    }

    /// Single-loss false-null rate |xi_0 + i xi_1 sqrt(1 + 1/N)|^2: with one
    /// photon lost between the qubits, a null is redefined as |dn| = 1 and
    /// this is its probability on an imbalanced branch.
    pub fn eta_loss(&self, theta: f64) -> f64 {
        let xi = self.xi(theta);
        let scale = (1.0 + 1.0 / self.n as f64).sqrt();
        (xi.m(0) + Complex64::new(0.0, 1.0) * xi.m(1) * scale).norm_sqr()
    }
}

/// eta at a single (N, theta) point. Sweeps should reuse a
/// [`TwinFockAnalyzer`] instead.
pub fn eta(n: u32, theta: f64) -> f64 {
    TwinFockAnalyzer::new(n).eta(theta)
}

/// Single amplitude xi_m(N, m, theta); |m| > N is an error.
pub fn xi_m(n: u32, m: i64, theta: f64) -> Result<Complex64> {
    if m.unsigned_abs() > n as u64 {
        return Err(QilError::InvalidSpec(format!(
            "|m| = {} exceeds N = {n}",
            m.unsigned_abs()
        )));
    }
    Ok(TwinFockAnalyzer::new(n).xi(theta).m(m))
}

/// Closed-form single-loss false-null rate from exact xi amplitudes.
pub fn eta_loss_formula(n: u32, theta: f64) -> f64 {
    TwinFockAnalyzer::new(n).eta_loss(theta)
}

/// Fidelities after conditioning on the measurement record.
///
/// f_nul = Lambda / (Lambda + (1 - Lambda) err) is the null-outcome
/// fidelity; f_avg = 1 - (1 - Lambda) err averages over all outcomes, and
/// satisfies f_avg >= 1 - err for any qubit pair.
pub fn fidelities(lambda: f64, err: f64) -> (f64, f64) {
    let f_nul = if lambda == 0.0 && err == 0.0 {
        1.0
    } else {
        lambda / (lambda + (1.0 - lambda) * err)
    };
    let f_avg = 1.0 - (1.0 - lambda) * err;
    (f_nul, f_avg)
}

/// Root-finding target for [`find_first_zero`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroScheme {
    TwinFock,
    Noon,
}

/// Bisection tolerance on N * theta for the first-zero search.
pub const FIRST_ZERO_TOLERANCE: f64 = 1e-8;

/// Smallest theta > 0 where the scheme's false-null amplitude vanishes.
///
/// The twin-Fock zero is bracketed by scanning the dephased (signed) null
/// amplitude and bisecting; the NOON zero is pi/(2N) analytically, verified
/// numerically.
pub fn find_first_zero(n: u32, scheme: ZeroScheme) -> Result<f64> {
    match scheme {
        ZeroScheme::Noon => {
            let theta = std::f64::consts::FRAC_PI_2 / n as f64;
            debug_assert!((n as f64 * theta).cos().abs() < 1e-12);
            Ok(theta)
        }
        ZeroScheme::TwinFock => {
            let analyzer = TwinFockAnalyzer::new(n);
            let nf = n as f64;
            let s = |tau: f64| analyzer.signed_null_amplitude(tau / nf);
            let step = 0.05;
            let tau_cap = std::f64::consts::PI * nf;
            let mut lo = 1e-6;
            let mut s_lo = s(lo);
            let mut hi = step;
            loop {
                if hi > tau_cap {
                    return Err(QilError::NoSignChange {
                        searched_up_to: tau_cap,
                    });
                }
                let s_hi = s(hi);
                if s_lo == 0.0 {
                    return Ok(lo / nf);
                }
                if s_lo.signum() != s_hi.signum() {
                    break;
                }
                lo = hi;
                s_lo = s_hi;
                hi += step;
            }
            let mut s_lo = s(lo);
            while hi - lo > FIRST_ZERO_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                let s_mid = s(mid);
                if s_mid == 0.0 {
                    return Ok(mid / nf);
                }
                if s_mid.signum() == s_lo.signum() {
                    lo = mid;
                    s_lo = s_mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi) / nf)
        }
    }
}

/// False-null rate of the coherent-superposition NOON variant, both as the
/// small-angle closed form (1/2)(1 - e^{-theta^2 N / 2}) and as the exact
/// simulation of the truncated coherent superposition through the NOON
/// pipeline. The exact value follows (1/2)(1 - e^{-2 theta^2 N}) instead,
/// about four times the closed form near N theta = pi/2; both are reported.
#[derive(Debug, Clone, Copy)]
pub struct KappaPrimeReport {
    pub closed_form: f64,
    pub simulated: f64,
}

pub fn kappa_prime(n_mean: f64, theta: f64, tail_tolerance: f64) -> Result<KappaPrimeReport> {
    let closed_form = 0.5 * (1.0 - (-theta * theta * n_mean / 2.0).exp());
    let light = make_state(
        &StateSpec::CoherentNoon {
            alpha: Complex64::new(n_mean.sqrt(), 0.0),
        },
        tail_tolerance,
    )?;
    let joint = make_joint(
        &light,
        &[QubitAmplitudes::basis(0), QubitAmplitudes::basis(0)],
    )?;
    let out = run_noon(&joint, theta)?;
    let records = outcome_distribution(&out, Scheme::Noon)?;
    let simulated = records
        .iter()
        .find(|r| r.value == OutcomeValue::LowerOccupied(false))
        .map_or(0.0, |r| r.probability);
    Ok(KappaPrimeReport {
        closed_form,
        simulated,
    })
}

/// Overlap between the lower-port outputs of balanced and imbalanced
/// branches in the coherent scheme: exactly e^{-N (1 - cos theta)^2},
/// alongside the small-angle form 1 - N theta^4 / 8.
#[derive(Debug, Clone, Copy)]
pub struct LowerPortOverlap {
    pub exact: f64,
    pub small_angle_form: f64,
}

pub fn lower_port_overlap(n_mean: f64, theta: f64) -> LowerPortOverlap {
    LowerPortOverlap {
        exact: (-n_mean * (1.0 - theta.cos()).powi(2)).exp(),
        small_angle_form: 1.0 - n_mean * theta.powi(4) / 8.0,
    }
}
