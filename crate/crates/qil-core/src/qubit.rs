//! Joint states of qubit registers coupled to the two-mode light field.
//!
//! Every qubit-photon interaction used here is diagonal in the qubit
//! computational basis, so a joint state is stored branch by branch: a map
//! from the n-bit basis string to a complex weight and a (shared) light
//! state. Single-qubit rotations, which re-mix branches, act on qubit-only
//! registers after the light has been measured out.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QilError, Result};
use crate::fock::{apply_phase, inner_product, DualModeState, Mode};

const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Single-qubit amplitudes (chi_0, chi_1), normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitAmplitudes {
    pub chi0: Complex64,
    pub chi1: Complex64,
}

impl QubitAmplitudes {
    pub fn new(chi0: Complex64, chi1: Complex64) -> Result<QubitAmplitudes> {
        let norm = chi0.norm_sqr() + chi1.norm_sqr();
        if (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(QilError::InvalidSpec(format!(
                "qubit amplitudes have norm^2 = {norm}, expected 1"
            )));
        }
        Ok(QubitAmplitudes { chi0, chi1 })
    }

    /// Normalize arbitrary (non-zero) amplitudes.
    pub fn normalized(chi0: Complex64, chi1: Complex64) -> Result<QubitAmplitudes> {
        let norm = (chi0.norm_sqr() + chi1.norm_sqr()).sqrt();
        if norm < 1e-150 {
            return Err(QilError::InvalidSpec("zero qubit amplitudes".into()));
        }
        Ok(QubitAmplitudes {
            chi0: chi0 / norm,
            chi1: chi1 / norm,
        })
    }

    /// (|0> + |1>)/sqrt(2), the usual preparation for entanglement rounds.
    pub fn plus() -> QubitAmplitudes {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        QubitAmplitudes { chi0: r, chi1: r }
    }

    pub fn basis(bit: u8) -> QubitAmplitudes {
        if bit == 0 {
            QubitAmplitudes {
                chi0: Complex64::new(1.0, 0.0),
                chi1: Complex64::new(0.0, 0.0),
            }
        } else {
            QubitAmplitudes {
                chi0: Complex64::new(0.0, 0.0),
                chi1: Complex64::new(1.0, 0.0),
            }
        }
    }
}

/// Weight of the balanced qubit-pair subspace {|01>, |10>} in the product
/// state of two qubits.
pub fn balanced_weight(x: &QubitAmplitudes, y: &QubitAmplitudes) -> f64 {
    (x.chi0 * y.chi1).norm_sqr() + (x.chi1 * y.chi0).norm_sqr()
}

/// Bit of qubit `q` in basis-string key `key` (qubit 0 is the leftmost bit).
#[inline]
pub fn bit_of(key: u32, q: usize, n_qubits: usize) -> u8 {
    ((key >> (n_qubits - 1 - q)) & 1) as u8
}

fn set_bit(key: u32, q: usize, n_qubits: usize, bit: u8) -> u32 {
    let pos = n_qubits - 1 - q;
    (key & !(1 << pos)) | ((bit as u32) << pos)
}

/// Render a branch key as its basis string, e.g. 0b01 over 2 qubits -> "01".
pub fn basis_label(key: u32, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if bit_of(key, q, n_qubits) == 0 { '0' } else { '1' })
        .collect()
}

/// Pure state of an n-qubit register, amplitudes indexed by basis key.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitRegister {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl QubitRegister {
    pub fn new(n_qubits: usize, amps: Vec<Complex64>) -> Result<QubitRegister> {
        if amps.len() != 1 << n_qubits {
            return Err(QilError::DimensionMismatch {
                left: amps.len(),
                right: 1 << n_qubits,
            });
        }
        Ok(QubitRegister { n_qubits, amps })
    }

    pub fn from_qubits(qubits: &[QubitAmplitudes]) -> QubitRegister {
        let n = qubits.len();
        let amps = (0..1u32 << n)
            .map(|key| {
                qubits.iter().enumerate().fold(
                    Complex64::new(1.0, 0.0),
                    |acc, (q, chi)| {
                        acc * if bit_of(key, q, n) == 0 {
                            chi.chi0
                        } else {
                            chi.chi1
                        }
                    },
                )
            })
            .collect();
        QubitRegister { n_qubits: n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, key: u32) -> Complex64 {
        self.amps[key as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> QubitRegister {
        let n = self.norm_sqr().sqrt();
        for a in self.amps.iter_mut() {
            *a /= n;
        }
        self
    }

    fn check_index(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(QilError::QubitIndexOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Swap the |0> and |1> amplitudes of one qubit (a pi pulse).
    pub fn pi_pulse(&self, q: usize) -> Result<QubitRegister> {
        self.check_index(q)?;
        let mut amps = self.amps.clone();
        for key in 0..self.amps.len() as u32 {
            if bit_of(key, q, self.n_qubits) == 0 {
                let other = set_bit(key, q, self.n_qubits, 1);
                amps.swap(key as usize, other as usize);
            }
        }
        Ok(QubitRegister {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    /// pi/2 pulse: |0> -> (|0> - i|1>)/sqrt(2), |1> -> (-i|0> + |1>)/sqrt(2).
    pub fn half_pi_pulse(&self, q: usize) -> Result<QubitRegister> {
        self.check_index(q)?;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mi = Complex64::new(0.0, -r);
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for key in 0..self.amps.len() as u32 {
            if bit_of(key, q, self.n_qubits) == 0 {
                let k0 = key as usize;
                let k1 = set_bit(key, q, self.n_qubits, 1) as usize;
                let (a0, a1) = (self.amps[k0], self.amps[k1]);
                amps[k0] = a0 * r + a1 * mi;
                amps[k1] = a0 * mi + a1 * r;
            }
        }
        Ok(QubitRegister {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    /// Multiply the components where qubit `q` is in `basis_bit` by e^{i phase}.
    pub fn phase_imprint(&self, q: usize, basis_bit: u8, phase: f64) -> Result<QubitRegister> {
        self.check_index(q)?;
        let factor = Complex64::from_polar(1.0, phase);
        let mut amps = self.amps.clone();
        for key in 0..self.amps.len() as u32 {
            if bit_of(key, q, self.n_qubits) == basis_bit {
                amps[key as usize] *= factor;
            }
        }
        Ok(QubitRegister {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    /// Probability of measuring qubit `q` in |1>.
    pub fn prob_one(&self, q: usize) -> Result<f64> {
        self.check_index(q)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(key, _)| bit_of(*key as u32, q, self.n_qubits) == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Project qubit `q` onto `bit` without renormalizing; the squared norm
    /// of the result is the outcome probability.
    pub fn project(&self, q: usize, bit: u8) -> Result<QubitRegister> {
        self.check_index(q)?;
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(key, &a)| {
                if bit_of(key as u32, q, self.n_qubits) == bit {
                    a
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(QubitRegister {
            n_qubits: self.n_qubits,
            amps,
        })
    }
}

pub fn register_inner(a: &QubitRegister, b: &QubitRegister) -> Result<Complex64> {
    if a.n_qubits != b.n_qubits {
        return Err(QilError::DimensionMismatch {
            left: a.n_qubits,
            right: b.n_qubits,
        });
    }
    Ok(a.amps
        .iter()
        .zip(b.amps.iter())
        .map(|(x, y)| x.conj() * y)
        .fold(Complex64::new(0.0, 0.0), |acc, v| acc + v))
}

/// Weighted mixture of pure qubit registers.
#[derive(Debug, Clone)]
pub struct MixedEnsemble {
    members: Vec<(f64, QubitRegister)>,
}

impl MixedEnsemble {
    pub fn new(members: Vec<(f64, QubitRegister)>) -> MixedEnsemble {
        MixedEnsemble { members }
    }

    pub fn pure(register: QubitRegister) -> MixedEnsemble {
        MixedEnsemble {
            members: vec![(1.0, register)],
        }
    }

    pub fn members(&self) -> &[(f64, QubitRegister)] {
        &self.members
    }

    pub fn n_qubits(&self) -> usize {
        self.members.first().map_or(0, |(_, r)| r.n_qubits)
    }

    pub fn total_weight(&self) -> f64 {
        self.members.iter().map(|(w, _)| w).sum()
    }

    /// Apply a pure-state map member by member.
    pub fn map_members<F>(&self, mut f: F) -> Result<MixedEnsemble>
    where
        F: FnMut(&QubitRegister) -> Result<QubitRegister>,
    {
        let members = self
            .members
            .iter()
            .map(|(w, r)| Ok((*w, f(r)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MixedEnsemble { members })
    }

    /// Density matrix of the qubits in `keep` (all others traced out),
    /// indexed by the compressed basis over `keep` in the given order.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DMatrix<Complex64>> {
        let n = self.n_qubits();
        for &q in keep {
            if q >= n {
                return Err(QilError::QubitIndexOutOfRange {
                    index: q,
                    n_qubits: n,
                });
            }
        }
        let k = keep.len();
        let dim = 1usize << k;
        let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        for (w, reg) in &self.members {
            for env in 0..1u32 << traced.len() {
                // amplitude vector over `keep` at fixed environment bits
                let mut sub = vec![Complex64::new(0.0, 0.0); dim];
                for (i, slot) in sub.iter_mut().enumerate() {
                    let mut key = 0u32;
                    for (j, &q) in keep.iter().enumerate() {
                        key = set_bit(key, q, n, ((i >> (k - 1 - j)) & 1) as u8);
                    }
                    for (j, &q) in traced.iter().enumerate() {
                        key = set_bit(key, q, n, ((env >> j) & 1) as u8);
                    }
                    *slot = reg.amp(key);
                }
                for i in 0..dim {
                    for j in 0..dim {
                        rho[(i, j)] += sub[i] * sub[j].conj() * *w;
                    }
                }
            }
        }
        Ok(rho)
    }
}

/// tr(rho rho') between two states given as ensembles of pure registers.
/// For a pure pair this is the squared overlap.
pub fn qubit_fidelity(a: &MixedEnsemble, b: &MixedEnsemble) -> Result<f64> {
    let mut acc = 0.0;
    for (wa, ra) in a.members() {
        for (wb, rb) in b.members() {
            acc += wa * wb * register_inner(ra, rb)?.norm_sqr();
        }
    }
    Ok(acc)
}

/// One branch of a joint qubit-light state.
#[derive(Debug, Clone)]
pub struct Branch {
    pub amp: Complex64,
    pub light: Arc<DualModeState>,
}

/// Entangled state of an n-qubit register and the two-mode field, keyed by
/// the qubit basis string. Branch weights obey sum |amp|^2 * |light|^2 = 1.
#[derive(Debug, Clone)]
pub struct JointState {
    n_qubits: usize,
    branches: BTreeMap<u32, Branch>,
}

impl JointState {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn branches(&self) -> impl Iterator<Item = (u32, &Branch)> {
        self.branches.iter().map(|(&k, b)| (k, b))
    }

    pub fn branch(&self, key: u32) -> Option<&Branch> {
        self.branches.get(&key)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches
            .values()
            .map(|b| b.amp.norm_sqr() * b.light.norm_sqr())
            .sum()
    }

    pub(crate) fn from_branches(
        n_qubits: usize,
        branches: BTreeMap<u32, Branch>,
    ) -> JointState {
        JointState { n_qubits, branches }
    }

    /// Rebuild with every branch light replaced through `f`; identical light
    /// states (shared pointers) are transformed once.
    pub fn transform_lights<F>(&self, mut f: F) -> Result<JointState>
    where
        F: FnMut(&DualModeState) -> Result<DualModeState>,
    {
        let mut cache: HashMap<usize, Arc<DualModeState>> = HashMap::new();
        let mut branches = BTreeMap::new();
        for (&key, b) in self.branches.iter() {
            let ptr = Arc::as_ptr(&b.light) as usize;
            let light = match cache.get(&ptr) {
                Some(l) => l.clone(),
                None => {
                    let l = Arc::new(f(&b.light)?);
                    cache.insert(ptr, l.clone());
                    l
                }
            };
            branches.insert(
                key,
                Branch {
                    amp: b.amp,
                    light,
                },
            );
        }
        Ok(JointState {
            n_qubits: self.n_qubits,
            branches,
        })
    }
}

/// Product state: every branch carries the same light state and the branch
/// amplitude is the product of the qubit amplitudes.
pub fn make_joint(light: &DualModeState, qubits: &[QubitAmplitudes]) -> Result<JointState> {
    if qubits.is_empty() {
        return Err(QilError::InvalidSpec("at least one qubit required".into()));
    }
    make_joint_register(light, &QubitRegister::from_qubits(qubits))
}

/// Product of an arbitrary (possibly entangled) register with the light.
pub fn make_joint_register(
    light: &DualModeState,
    register: &QubitRegister,
) -> Result<JointState> {
    let shared = Arc::new(light.clone());
    let mut branches = BTreeMap::new();
    for key in 0..register.amps().len() as u32 {
        let amp = register.amp(key);
        if amp.norm_sqr() > 0.0 {
            branches.insert(
                key,
                Branch {
                    amp,
                    light: shared.clone(),
                },
            );
        }
    }
    Ok(JointState {
        n_qubits: register.n_qubits(),
        branches,
    })
}

/// Conditional qubit-photon interaction: on every branch where qubit
/// `qubit_index` is in state b, each photon in mode b acquires phase
/// e^{-i theta}.
pub fn apply_qubit_interaction(
    joint: &JointState,
    qubit_index: usize,
    theta: f64,
) -> Result<JointState> {
    if qubit_index >= joint.n_qubits {
        return Err(QilError::QubitIndexOutOfRange {
            index: qubit_index,
            n_qubits: joint.n_qubits,
        });
    }
    let mut cache: HashMap<(usize, u8), Arc<DualModeState>> = HashMap::new();
    let mut branches = BTreeMap::new();
    for (&key, b) in joint.branches.iter() {
        let bit = bit_of(key, qubit_index, joint.n_qubits);
        let ptr = Arc::as_ptr(&b.light) as usize;
        let light = match cache.get(&(ptr, bit)) {
            Some(l) => l.clone(),
            None => {
                let l = Arc::new(apply_phase(&b.light, theta, Mode::from_bit(bit)));
                cache.insert((ptr, bit), l.clone());
                l
            }
        };
        branches.insert(key, Branch { amp: b.amp, light });
    }
    Ok(JointState {
        n_qubits: joint.n_qubits,
        branches,
    })
}

/// Eigen-ensemble of a Hermitian density matrix whose row/column index i
/// maps to register basis key `embed(i)`. Eigenvector phases are fixed
/// (largest component real positive) and members are ordered by descending
/// weight, ties broken by comparing amplitude vectors lexicographically.
fn eigen_ensemble<F>(rho: &DMatrix<Complex64>, n_qubits: usize, embed: F) -> MixedEnsemble
where
    F: Fn(usize) -> u32,
{
    let eig = rho.clone().symmetric_eigen();
    let dim = 1usize << n_qubits;
    let mut members: Vec<(f64, QubitRegister)> = Vec::new();
    for (col, &w) in eig.eigenvalues.iter().enumerate() {
        if w <= 1e-14 {
            continue;
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        for row in 0..rho.nrows() {
            amps[embed(row) as usize] = eig.eigenvectors[(row, col)];
        }
        let (best, _) = amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .unwrap();
        let rot = Complex64::from_polar(1.0, -amps[best].arg());
        for a in amps.iter_mut() {
            *a *= rot;
        }
        members.push((w, QubitRegister { n_qubits, amps }));
    }
    members.sort_by(|(wa, ra), (wb, rb)| {
        wb.total_cmp(wa).then_with(|| {
            for (x, y) in ra.amps.iter().zip(rb.amps.iter()) {
                let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    MixedEnsemble::new(members)
}

/// Exact reduced qubit state of a joint state, as an eigen-ensemble of pure
/// registers.
pub fn partial_trace_light(joint: &JointState) -> MixedEnsemble {
    let keys: Vec<u32> = joint.branches.keys().copied().collect();
    let m = keys.len();
    if m == 0 {
        return MixedEnsemble::new(vec![]);
    }
    // rho_{ij} = amp_i conj(amp_j) <L_j | L_i>
    let mut rho = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let bi = &joint.branches[&keys[i]];
            let bj = &joint.branches[&keys[j]];
            let overlap = inner_product(&bj.light, &bi.light);
            let v = bi.amp * bj.amp.conj() * overlap;
            rho[(i, j)] = v;
            rho[(j, i)] = v.conj();
        }
    }
    eigen_ensemble(&rho, joint.n_qubits, |row| keys[row])
}

/// Reduce an ensemble to the qubits in `keep` (in the given order), tracing
/// out the rest; the result is again an eigen-ensemble.
pub fn extract_qubits(ensemble: &MixedEnsemble, keep: &[usize]) -> Result<MixedEnsemble> {
    let rho = ensemble.reduced_density(keep)?;
    Ok(eigen_ensemble(&rho, keep.len(), |row| row as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_state, StateSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn balanced_weight_examples() {
        let plus = QubitAmplitudes::plus();
        assert!((balanced_weight(&plus, &plus) - 0.5).abs() < 1e-12);
        let zero = QubitAmplitudes::basis(0);
        let one = QubitAmplitudes::basis(1);
        assert_eq!(balanced_weight(&zero, &zero), 0.0);
        assert_eq!(balanced_weight(&zero, &one), 1.0);
    }

    #[test]
    fn product_construction() {
        let light = DualModeState::fock(1, 1);
        let j = make_joint(&light, &[QubitAmplitudes::plus(), QubitAmplitudes::plus()]).unwrap();
        assert_eq!(j.branches().count(), 4);
        for (_, b) in j.branches() {
            assert!((b.amp.norm_sqr() - 0.25).abs() < 1e-12);
        }
        assert!((j.norm_sqr() - 1.0).abs() < 1e-12);

        let j = make_joint(&light, &[QubitAmplitudes::basis(0)]).unwrap();
        assert_eq!(j.branches().count(), 1);
        assert!(j.branch(0b0).is_some());

        let three = [
            QubitAmplitudes::plus(),
            QubitAmplitudes::plus(),
            QubitAmplitudes::plus(),
        ];
        let j = make_joint(&light, &three).unwrap();
        assert_eq!(j.branches().count(), 8);
    }

    #[test]
    fn interaction_phases() {
        let light = DualModeState::fock(1, 0);
        let j = make_joint(&light, &[QubitAmplitudes::basis(0)]).unwrap();
        let theta = 0.37;
        let out = apply_qubit_interaction(&j, 0, theta).unwrap();
        let b = out.branch(0).unwrap();
        let expect = Complex64::from_polar(1.0, -theta);
        assert!((b.light.amplitude(1, 0) - expect).norm() < 1e-12);

        // theta = 0 is the identity
        let out = apply_qubit_interaction(&j, 0, 0.0).unwrap();
        assert!((out.branch(0).unwrap().light.amplitude(1, 0) - c(1.0, 0.0)).norm() < 1e-12);

        // index out of range
        assert!(apply_qubit_interaction(&j, 1, 0.1).is_err());
    }

    #[test]
    fn interactions_commute_and_compose() {
        let light = DualModeState::fock(2, 3);
        let qs = [QubitAmplitudes::plus(), QubitAmplitudes::plus()];
        let j = make_joint(&light, &qs).unwrap();
        let theta = 0.21;
        let xy = apply_qubit_interaction(&apply_qubit_interaction(&j, 0, theta).unwrap(), 1, theta)
            .unwrap();
        let yx = apply_qubit_interaction(&apply_qubit_interaction(&j, 1, theta).unwrap(), 0, theta)
            .unwrap();
        for (key, b) in xy.branches() {
            let other = yx.branch(key).unwrap();
            assert!((b.light.amplitude(2, 3) - other.light.amplitude(2, 3)).norm() < 1e-12);
        }
        // balanced branch 01 picks up the common phase e^{-i theta (n0 + n1)}
        let expect = Complex64::from_polar(0.5, -theta * 5.0);
        let got = xy.branch(0b01).unwrap();
        assert!((got.amp * got.light.amplitude(2, 3) - expect).norm() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let bell_plus = QubitRegister::new(
            2,
            vec![c(0.0, 0.0), c(0.7071067811865476, 0.0), c(0.7071067811865476, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let bell_minus = QubitRegister::new(
            2,
            vec![c(0.0, 0.0), c(0.7071067811865476, 0.0), c(-0.7071067811865476, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let a = MixedEnsemble::pure(bell_plus.clone());
        assert!((qubit_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let b = MixedEnsemble::pure(bell_minus);
        assert!(qubit_fidelity(&a, &b).unwrap() < 1e-12);

        // maximally mixed on two qubits: tr(rho^2) = 1/4
        let mixed = MixedEnsemble::new(
            (0..4u32)
                .map(|k| {
                    let mut amps = vec![c(0.0, 0.0); 4];
                    amps[k as usize] = c(1.0, 0.0);
                    (0.25, QubitRegister::new(2, amps).unwrap())
                })
                .collect(),
        );
        assert!((qubit_fidelity(&mixed, &mixed).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn trace_of_product_state_is_pure() {
        let light = make_state(&StateSpec::TwinFock { n: 2 }, 1e-12).unwrap();
        let j = make_joint(&light, &[QubitAmplitudes::plus(), QubitAmplitudes::plus()]).unwrap();
        let ens = partial_trace_light(&j);
        assert_eq!(ens.members().len(), 1);
        let (w, reg) = &ens.members()[0];
        assert!((w - 1.0).abs() < 1e-10);
        for key in 0..4u32 {
            assert!((reg.amp(key).norm_sqr() - 0.25).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_with_orthogonal_lights_is_classical() {
        let l0 = Arc::new(DualModeState::fock(1, 0));
        let l1 = Arc::new(DualModeState::fock(0, 1));
        let mut branches = BTreeMap::new();
        branches.insert(
            0b0,
            Branch {
                amp: c(0.6, 0.0),
                light: l0,
            },
        );
        branches.insert(
            0b1,
            Branch {
                amp: c(0.8, 0.0),
                light: l1,
            },
        );
        let j = JointState::from_branches(1, branches);
        let ens = partial_trace_light(&j);
        assert_eq!(ens.members().len(), 2);
        assert!((ens.members()[0].0 - 0.64).abs() < 1e-10);
        assert!((ens.members()[1].0 - 0.36).abs() < 1e-10);
        assert!((ens.total_weight() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trace_coherent_branches_keeps_overlap_coherence() {
        // branches carrying |alpha cos t> vs |alpha>: off-diagonal coherence
        // magnitude is the overlap e^{-N (1 - cos t)^2 / 2}
        let n = 1000.0f64;
        let theta = 0.05f64;
        let alpha = c(n.sqrt(), 0.0);
        let la = Arc::new(
            make_state(
                &StateSpec::Coherent {
                    alpha,
                    port: Mode::Upper,
                },
                1e-12,
            )
            .unwrap(),
        );
        let lb = Arc::new(
            make_state(
                &StateSpec::Coherent {
                    alpha: alpha * theta.cos(),
                    port: Mode::Upper,
                },
                1e-12,
            )
            .unwrap(),
        );
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut branches = BTreeMap::new();
        branches.insert(
            0b0,
            Branch {
                amp: c(r, 0.0),
                light: la,
            },
        );
        branches.insert(
            0b1,
            Branch {
                amp: c(r, 0.0),
                light: lb,
            },
        );
        let j = JointState::from_branches(1, branches);
        let rho = partial_trace_qubit_density(&j);
        let expect = (-n * (1.0 - theta.cos()).powi(2) / 2.0).exp() / 2.0;
        assert!(
            (rho[(0, 1)].norm() - expect).abs() < 1e-9,
            "{} vs {}",
            rho[(0, 1)].norm(),
            expect
        );
    }

    fn partial_trace_qubit_density(j: &JointState) -> DMatrix<Complex64> {
        let ens = partial_trace_light(j);
        let keep: Vec<usize> = (0..j.n_qubits()).collect();
        ens.reduced_density(&keep).unwrap()
    }

    #[test]
    fn register_pulses() {
        let src = QubitRegister::from_qubits(&[QubitAmplitudes::basis(0)]);
        // pi twice is the identity
        let back = src.pi_pulse(0).unwrap().pi_pulse(0).unwrap();
        assert_eq!(back.amp(0), c(1.0, 0.0));
        // half-pi on |0> -> (|0> - i|1>)/sqrt(2)
        let rot = src.half_pi_pulse(0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((rot.amp(0) - c(r, 0.0)).norm() < 1e-12);
        assert!((rot.amp(1) - c(0.0, -r)).norm() < 1e-12);
        // phase imprint of pi on |1> flips the sign
        let reg = QubitRegister::from_qubits(&[QubitAmplitudes::plus()]);
        let out = reg.phase_imprint(0, 1, std::f64::consts::PI).unwrap();
        assert!((out.amp(0) - c(r, 0.0)).norm() < 1e-12);
        assert!((out.amp(1) - c(-r, 0.0)).norm() < 1e-12);
    }
}
