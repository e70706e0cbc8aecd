//! Higher-level procedures built on the entangling primitive: state
//! teleportation, GHZ/cat-state creation and entanglement swapping.
//!
//! Every branch of a protocol succeeds: conditional corrections map each
//! measurement record onto the same target state. On a null record the
//! balanced pair {|01>, |10>} is folded onto {|00>, |11>} with a pi pulse
//! on the target qubit of the round; on a non-null record the
//! outcome-dependent relative phase is removed with a pi imprint. States
//! are carried as mixed ensembles so that exact (slightly mixed) coherent
//! posteriors flow through unchanged.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use num_complex::Complex64;

use crate::error::{QilError, Result};
use crate::fock::{make_state, Mode, StateSpec, DEFAULT_TAIL_TOLERANCE};
use crate::interferometer::{
    find_first_zero, outcome_distribution, run_mz_pair, run_noon_pair, OutcomeValue, Scheme,
    Subspace, ZeroScheme,
};
use crate::qubit::{
    extract_qubits, make_joint_register, qubit_fidelity, MixedEnsemble, QubitAmplitudes,
    QubitRegister,
};

/// Exact enumeration of every measurement branch, or a single seeded
/// sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Exact,
    Sampled { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub scheme: Scheme,
    pub n_photons: u32,
    /// Per-qubit interaction phase. `None` picks the scheme's zero-error
    /// operating point (first false-null zero); the coherent scheme has no
    /// such zero and requires an explicit phase.
    pub theta: Option<f64>,
    pub mode: RunMode,
    pub tail_tolerance: f64,
}

impl ProtocolConfig {
    pub fn exact(scheme: Scheme, n_photons: u32) -> ProtocolConfig {
        ProtocolConfig {
            scheme,
            n_photons,
            theta: None,
            mode: RunMode::Exact,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> ProtocolConfig {
        self.theta = Some(theta);
        self
    }

    pub fn sampled(mut self, seed: u64) -> ProtocolConfig {
        self.mode = RunMode::Sampled { seed };
        self
    }

    /// Interaction phase to run at.
    pub fn operating_theta(&self) -> Result<f64> {
        if let Some(theta) = self.theta {
            return Ok(theta);
        }
        match self.scheme {
            Scheme::TwinFock => find_first_zero(self.n_photons, ZeroScheme::TwinFock),
            Scheme::Noon => find_first_zero(self.n_photons, ZeroScheme::Noon),
            Scheme::Coherent => Err(QilError::InvalidSpec(
                "the coherent scheme has no zero-error phase; set theta explicitly".into(),
            )),
        }
    }

    fn light(&self) -> Result<crate::fock::DualModeState> {
        let spec = match self.scheme {
            Scheme::Coherent => StateSpec::Coherent {
                alpha: Complex64::new((self.n_photons as f64).sqrt(), 0.0),
                port: Mode::Upper,
            },
            Scheme::TwinFock => StateSpec::TwinFock { n: self.n_photons },
            Scheme::Noon => StateSpec::Noon {
                n: self.n_photons,
                phase: 0.0,
            },
        };
        make_state(&spec, self.tail_tolerance)
    }
}

/// One step of a protocol transcript. Replays are bit-for-bit: the same
/// seed reproduces the same entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptEntry {
    pub op: &'static str,
    pub qubits: Vec<usize>,
    pub outcome: Option<String>,
    pub probability: Option<f64>,
}

impl TranscriptEntry {
    fn op(op: &'static str, qubits: &[usize]) -> TranscriptEntry {
        TranscriptEntry {
            op,
            qubits: qubits.to_vec(),
            outcome: None,
            probability: None,
        }
    }

    fn outcome(
        op: &'static str,
        qubits: &[usize],
        outcome: String,
        probability: f64,
    ) -> TranscriptEntry {
        TranscriptEntry {
            op,
            qubits: qubits.to_vec(),
            outcome: Some(outcome),
            probability: Some(probability),
        }
    }
}

/// One fully-conditioned branch of a protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolBranch {
    pub probability: f64,
    pub fidelity: f64,
    pub final_state: MixedEnsemble,
    pub transcript: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub branches: Vec<ProtocolBranch>,
    /// Probability-weighted mean fidelity (exact mode) or the sampled
    /// branch's fidelity.
    pub mean_fidelity: f64,
    pub min_fidelity: f64,
}

/// Entangling-round outcome on a register.
#[derive(Debug, Clone)]
pub struct EntangleOutcome {
    pub value: OutcomeValue,
    pub probability: f64,
    pub posterior: MixedEnsemble,
    pub subspace: Subspace,
}

/// Run the configured pipeline and measurement on qubits `pair` of the
/// register (all other qubits are exact spectators) and return the full
/// outcome distribution with conditioned posteriors.
pub fn entangle_pair(
    register: &MixedEnsemble,
    pair: (usize, usize),
    config: &ProtocolConfig,
) -> Result<Vec<EntangleOutcome>> {
    let n = register.n_qubits();
    if pair.0 == pair.1 || pair.0 >= n || pair.1 >= n {
        return Err(QilError::InvalidSpec(format!(
            "invalid qubit pair ({}, {}) on {n} qubits",
            pair.0, pair.1
        )));
    }
    let theta = config.operating_theta()?;
    let light = config.light()?;
    let mut merged: std::collections::BTreeMap<OutcomeValue, (f64, Vec<(f64, QubitRegister)>)> =
        std::collections::BTreeMap::new();
    for (weight, member) in register.members() {
        let joint = make_joint_register(&light, member)?;
        let out = match config.scheme {
            Scheme::Coherent | Scheme::TwinFock => run_mz_pair(&joint, theta, pair.0, pair.1)?,
            Scheme::Noon => run_noon_pair(&joint, theta, pair.0, pair.1)?,
        };
        for record in outcome_distribution(&out, config.scheme)? {
            let slot = merged.entry(record.value).or_default();
            slot.0 += weight * record.probability;
            for (w, reg) in record.posterior.members() {
                slot.1
                    .push((weight * record.probability * w, reg.clone()));
            }
        }
    }
    Ok(merged
        .into_iter()
        .map(|(value, (probability, mut members))| {
            for (w, _) in members.iter_mut() {
                *w /= probability;
            }
            EntangleOutcome {
                value,
                probability,
                posterior: MixedEnsemble::new(members),
                subspace: if value.is_null() {
                    Subspace::Balanced
                } else {
                    Subspace::Imbalanced
                },
            }
        })
        .collect())
}

/// Computational-basis measurement outcome of one qubit.
#[derive(Debug, Clone)]
pub struct MeasureOutcome {
    pub bit: u8,
    pub probability: f64,
    pub posterior: MixedEnsemble,
}

/// Projective measurement of one qubit; both branches with probabilities.
pub fn measure_qubit(state: &MixedEnsemble, qubit: usize) -> Result<Vec<MeasureOutcome>> {
    let mut out = Vec::new();
    for bit in [0u8, 1u8] {
        let mut probability = 0.0;
        let mut members = Vec::new();
        for (w, reg) in state.members() {
            let projected = reg.project(qubit, bit)?;
            let p = projected.norm_sqr();
            if p > 1e-300 {
                probability += w * p;
                members.push((w * p, projected.normalized()));
            }
        }
        if probability > 1e-300 {
            for (w, _) in members.iter_mut() {
                *w /= probability;
            }
            out.push(MeasureOutcome {
                bit,
                probability,
                posterior: MixedEnsemble::new(members),
            });
        }
    }
    Ok(out)
}

/// The outcome-conditioned relative-phase fix: odd photon counts (coherent)
/// and odd half-differences (twin-Fock) flip the |11> component; under the
/// splitter conventions used here every occupied NOON record carries the
/// same fixed flip, independent of the count.
fn needs_phase_fix(scheme: Scheme, value: OutcomeValue) -> bool {
    match (scheme, value) {
        (Scheme::Coherent, OutcomeValue::PhotonCount(n)) => n % 2 == 1,
        (Scheme::TwinFock, OutcomeValue::NumberDifference(d)) => (d / 2).rem_euclid(2) == 1,
        (Scheme::Noon, OutcomeValue::LowerOccupied(occupied)) => occupied,
        _ => false,
    }
}

fn outcome_label(value: OutcomeValue) -> String {
    match value {
        OutcomeValue::PhotonCount(n) => format!("n={n}"),
        OutcomeValue::NumberDifference(d) => format!("dn={d}"),
        OutcomeValue::LowerOccupied(true) => "occupied".into(),
        OutcomeValue::LowerOccupied(false) => "null".into(),
    }
}

/// In-flight protocol branch.
#[derive(Debug, Clone)]
struct RunItem {
    probability: f64,
    state: MixedEnsemble,
    transcript: Vec<TranscriptEntry>,
}

struct Runner {
    rng: Option<ChaCha12Rng>,
}

impl Runner {
    fn new(mode: RunMode) -> Runner {
        Runner {
            rng: match mode {
                RunMode::Exact => None,
                RunMode::Sampled { seed } => Some(ChaCha12Rng::seed_from_u64(seed)),
            },
        }
    }

    /// Expand every item through a branching step; in sampled mode one
    /// continuation is drawn per item according to its probability.
    fn branch<F>(&mut self, items: Vec<RunItem>, f: F) -> Result<Vec<RunItem>>
    where
        F: Fn(&RunItem) -> Result<Vec<RunItem>>,
    {
        let mut out = Vec::new();
        for item in items {
            let mut continuations = f(&item)?;
            match self.rng.as_mut() {
                None => out.append(&mut continuations),
                Some(rng) => {
                    let total: f64 = continuations
                        .iter()
                        .map(|c| c.probability / item.probability)
                        .sum();
                    let mut draw = rng.gen::<f64>() * total;
                    let mut picked = continuations.len() - 1;
                    for (i, c) in continuations.iter().enumerate() {
                        draw -= c.probability / item.probability;
                        if draw <= 0.0 {
                            picked = i;
                            break;
                        }
                    }
                    out.push(continuations.swap_remove(picked));
                }
            }
        }
        Ok(out)
    }
}

/// One entangling round on `pair` with the conditional corrections folded
/// in: after this step every branch carries the same {|00>, |11>}
/// correlation (up to the scheme's intrinsic false-null error).
fn entangle_round(
    runner: &mut Runner,
    items: Vec<RunItem>,
    pair: (usize, usize),
    config: &ProtocolConfig,
) -> Result<Vec<RunItem>> {
    runner.branch(items, |item| {
        let outcomes = entangle_pair(&item.state, pair, config)?;
        outcomes
            .into_iter()
            .map(|o| {
                let mut transcript = item.transcript.clone();
                transcript.push(TranscriptEntry::outcome(
                    "entangle",
                    &[pair.0, pair.1],
                    outcome_label(o.value),
                    o.probability,
                ));
                let mut state = o.posterior;
                if o.value.is_null() {
                    state = state.map_members(|r| r.pi_pulse(pair.1))?;
                    transcript.push(TranscriptEntry::op("pi_pulse", &[pair.1]));
                } else if needs_phase_fix(config.scheme, o.value) {
                    state =
                        state.map_members(|r| r.phase_imprint(pair.0, 1, std::f64::consts::PI))?;
                    transcript.push(TranscriptEntry::op("pi_imprint", &[pair.0]));
                }
                Ok(RunItem {
                    probability: item.probability * o.probability,
                    state,
                    transcript,
                })
            })
            .collect()
    })
}

/// Disentangle `qubit` teleportation-style: a half-pi pulse, a basis
/// measurement, and the outcome-conditioned quarter-phase imprint on
/// `partner`.
fn disentangle(
    runner: &mut Runner,
    items: Vec<RunItem>,
    qubit: usize,
    partner: usize,
) -> Result<Vec<RunItem>> {
    let items = items
        .into_iter()
        .map(|mut item| {
            item.state = item.state.map_members(|r| r.half_pi_pulse(qubit))?;
            item.transcript
                .push(TranscriptEntry::op("half_pi_pulse", &[qubit]));
            Ok(item)
        })
        .collect::<Result<Vec<_>>>()?;
    runner.branch(items, |item| {
        measure_qubit(&item.state, qubit)?
            .into_iter()
            .map(|m| {
                let mut transcript = item.transcript.clone();
                transcript.push(TranscriptEntry::outcome(
                    "measure",
                    &[qubit],
                    format!("{}", m.bit),
                    m.probability,
                ));
                // measured |0>: quarter phase on |1> of the partner;
                // measured |1>: quarter phase on |0>
                let imprint_bit = 1 - m.bit;
                let state = m.posterior.map_members(|r| {
                    r.phase_imprint(partner, imprint_bit, std::f64::consts::FRAC_PI_2)
                })?;
                transcript.push(TranscriptEntry::op("quarter_imprint", &[partner]));
                Ok(RunItem {
                    probability: item.probability * m.probability,
                    state,
                    transcript,
                })
            })
            .collect()
    })
}

fn finish(
    items: Vec<RunItem>,
    keep: &[usize],
    ideal: &QubitRegister,
) -> Result<ProtocolResult> {
    let ideal_ens = MixedEnsemble::pure(ideal.clone());
    let mut branches = Vec::with_capacity(items.len());
    for item in items {
        let final_state = extract_qubits(&item.state, keep)?;
        let fidelity = qubit_fidelity(&final_state, &ideal_ens)?;
        branches.push(ProtocolBranch {
            probability: item.probability,
            fidelity,
            final_state,
            transcript: item.transcript,
        });
    }
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let mean_fidelity = branches
        .iter()
        .map(|b| b.probability * b.fidelity)
        .sum::<f64>()
        / total;
    let min_fidelity = branches
        .iter()
        .map(|b| b.fidelity)
        .fold(f64::INFINITY, f64::min);
    Ok(ProtocolResult {
        branches,
        mean_fidelity,
        min_fidelity,
    })
}

/// Teleport an unknown source state onto the target qubit.
///
/// The target starts in (|0> + |1>)/sqrt(2); after the entangling round and
/// its corrections the pair is chi_0|00> + chi_1|11>, and disentangling the
/// source leaves the target in the source state.
pub fn teleport(chi_source: &QubitAmplitudes, config: &ProtocolConfig) -> Result<ProtocolResult> {
    let mut runner = Runner::new(config.mode);
    let initial = QubitRegister::from_qubits(&[*chi_source, QubitAmplitudes::plus()]);
    let items = vec![RunItem {
        probability: 1.0,
        state: MixedEnsemble::pure(initial),
        transcript: Vec::new(),
    }];
    let items = entangle_round(&mut runner, items, (0, 1), config)?;
    let items = disentangle(&mut runner, items, 0, 1)?;
    let ideal = QubitRegister::from_qubits(&[*chi_source]);
    finish(items, &[1], &ideal)
}

/// Chain entangling rounds into an n-qubit cat state
/// (|0...0> + |1...1>)/sqrt(2).
pub fn ghz_chain(n_qubits: usize, config: &ProtocolConfig) -> Result<ProtocolResult> {
    if n_qubits < 2 {
        return Err(QilError::InvalidSpec(
            "a cat state needs at least two qubits".into(),
        ));
    }
    let mut runner = Runner::new(config.mode);
    let qubits = vec![QubitAmplitudes::plus(); n_qubits];
    let items = vec![RunItem {
        probability: 1.0,
        state: MixedEnsemble::pure(QubitRegister::from_qubits(&qubits)),
        transcript: Vec::new(),
    }];
    let mut items = items;
    for q in 0..n_qubits - 1 {
        items = entangle_round(&mut runner, items, (q, q + 1), config)?;
    }
    let dim = 1usize << n_qubits;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = Complex64::new(r, 0.0);
    amps[dim - 1] = Complex64::new(r, 0.0);
    let ideal = QubitRegister::new(n_qubits, amps)?;
    let keep: Vec<usize> = (0..n_qubits).collect();
    finish(items, &keep, &ideal)
}

/// Three-qubit GHZ state.
pub fn ghz3(config: &ProtocolConfig) -> Result<ProtocolResult> {
    ghz_chain(3, config)
}

/// Swap entanglement from the pair (x, y) onto (x, z): entangle (y, z) into
/// a GHZ-like state, then disentangle y as in teleportation.
pub fn swap_entanglement(
    c00: Complex64,
    c11: Complex64,
    config: &ProtocolConfig,
) -> Result<ProtocolResult> {
    let norm = (c00.norm_sqr() + c11.norm_sqr()).sqrt();
    if norm < 1e-150 {
        return Err(QilError::InvalidSpec(
            "entangled-pair coefficients are both zero".into(),
        ));
    }
    let (c00, c11) = (c00 / norm, c11 / norm);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // (c00 |00> + c11 |11>)_{xy} (|0> + |1>)_z / sqrt(2)
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[0b000] = c00 * r;
    amps[0b001] = c00 * r;
    amps[0b110] = c11 * r;
    amps[0b111] = c11 * r;
    let initial = QubitRegister::new(3, amps)?;
    let mut runner = Runner::new(config.mode);
    let items = vec![RunItem {
        probability: 1.0,
        state: MixedEnsemble::pure(initial),
        transcript: Vec::new(),
    }];
    let items = entangle_round(&mut runner, items, (1, 2), config)?;
    let items = disentangle(&mut runner, items, 1, 2)?;
    let mut ideal_amps = vec![Complex64::new(0.0, 0.0); 4];
    ideal_amps[0b00] = c00;
    ideal_amps[0b11] = c11;
    let ideal = QubitRegister::new(2, ideal_amps)?;
    finish(items, &[0, 2], &ideal)
}
