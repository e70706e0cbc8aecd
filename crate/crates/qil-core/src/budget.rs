//! Scalar engineering budgets: the single-atom phase shift, spontaneous
//! emission, cavity-pass requirements, photon-loss channels and their
//! fidelity costs, and phase-sensitivity windows.
//!
//! Two phase/detuning relations coexist on purpose. `theta_from_physics`
//! is the exact formula theta = (3/8 pi)(lambda/W)^2 (Gamma/Delta). The
//! closed-form budgets use the rounded inversion Gamma/Delta =
//! 8 (W/lambda)^2 theta (dropping a factor pi/3 ~ 1.047), which is what
//! the quoted operating numbers (P_sp N = 206 at the twin-Fock zero,
//! 1 - 350/N for NOON) are built from. The budgets reproduce those quoted
//! numbers; the exact relation stays available for parameter conversion.

use std::cell::Cell;

use crate::error::{QilError, Result};
use crate::fock::{
    apply_annihilation, apply_beamsplitter, apply_phase, DualModeState, Mode,
};
use crate::interferometer::{find_first_zero, TwinFockAnalyzer, ZeroScheme};
use crate::qubit::{
    apply_qubit_interaction, make_joint, JointState, MixedEnsemble, QubitAmplitudes,
    QubitRegister,
};

/// Nominal large-N location of the first twin-Fock null zero in units of
/// N theta. The exact zero drifts with N (1.2018 at N = 10^3, 1.1964 at
/// N = 100); this constant pins the closed-form budget numbers such as
/// P_sp = 206/N at W/lambda = 3.
pub const TF_FIRST_ZERO_NOMINAL: f64 = 1.196;

/// Nominal coefficient of the single-loss false-null envelope 0.33/(N theta).
pub const ETA_LOSS_ENVELOPE_COEFF: f64 = 0.33;

/// Nominal quadratic coefficient of eta around its first zero, in units of
/// (N theta)^2. The exact fit at N = 10^3 comes out near 1.07.
pub const ETA_QUADRATIC_COEFF_NOMINAL: f64 = 1.3;

/// Nominal window half-width coefficients, in units of theta_1^{3/2}.
pub const TF_WINDOW_COEFF: f64 = 9.5;
pub const NOON_WINDOW_COEFF: f64 = 8.1;

/// Historically quoted cavity-pass count at (eps, W/lambda) = (0.01, 3).
/// The formula -16 (W/lambda)^2 ln(eps)/eps gives 6.63e4, a factor of ten
/// lower; both values are surfaced, neither silently corrected.
pub const CAVITY_PASSES_QUOTED: f64 = 6.6e5;

/// Detuning ratios above this trip the off-resonance warning.
pub const OFF_RESONANT_LIMIT: f64 = 0.1;

/// Exact single-atom phase shift theta = (3/8 pi)(lambda/W)^2 (Gamma/Delta).
pub fn theta_from_physics(waist_ratio: f64, detuning_ratio: f64) -> f64 {
    3.0 / (8.0 * std::f64::consts::PI) / (waist_ratio * waist_ratio) * detuning_ratio
}

/// Rounded inversion Gamma/Delta = 8 (W/lambda)^2 theta used by the
/// closed-form budgets (the exact relation carries an extra pi/3).
pub fn detuning_for_theta_nominal(waist_ratio: f64, theta: f64) -> f64 {
    8.0 * waist_ratio * waist_ratio * theta
}

/// The experiment's knobs: beam waist over wavelength, detuning ratio,
/// per-pass phase shift, photon number (mean or exact) and cavity passes.
#[derive(Debug, Clone, Copy)]
pub struct PhysicalParams {
    pub waist_ratio: f64,
    pub detuning_ratio: f64,
    pub theta: f64,
    pub n_photons: f64,
    pub cavity_passes: f64,
    /// Set when the detuning ratio is too large for the far-off-resonance
    /// treatment to be trustworthy.
    pub off_resonant_warning: bool,
}

impl PhysicalParams {
    /// Derive theta from the physical knobs through the exact phase formula.
    pub fn from_physics(
        waist_ratio: f64,
        detuning_ratio: f64,
        n_photons: f64,
        cavity_passes: f64,
    ) -> Result<PhysicalParams> {
        if waist_ratio <= 0.0 || detuning_ratio <= 0.0 || n_photons < 0.0 || cavity_passes < 1.0 {
            return Err(QilError::InvalidSpec(
                "waist ratio and detuning must be positive, N >= 0, M >= 1".into(),
            ));
        }
        Ok(PhysicalParams {
            waist_ratio,
            detuning_ratio,
            theta: theta_from_physics(waist_ratio, detuning_ratio),
            n_photons,
            cavity_passes,
            off_resonant_warning: detuning_ratio >= OFF_RESONANT_LIMIT,
        })
    }

    /// Twin-Fock operating point N M theta = x_1 with the nominal zero and
    /// the rounded detuning inversion.
    pub fn tf_operating_point(n_photons: f64, waist_ratio: f64, cavity_passes: f64) -> PhysicalParams {
        let theta = TF_FIRST_ZERO_NOMINAL / (n_photons * cavity_passes);
        let detuning_ratio = detuning_for_theta_nominal(waist_ratio, theta);
        PhysicalParams {
            waist_ratio,
            detuning_ratio,
            theta,
            n_photons,
            cavity_passes,
            off_resonant_warning: detuning_ratio >= OFF_RESONANT_LIMIT,
        }
    }

    /// NOON operating point N theta = pi/2.
    pub fn noon_operating_point(n_photons: f64, waist_ratio: f64) -> PhysicalParams {
        let theta = std::f64::consts::FRAC_PI_2 / n_photons;
        let detuning_ratio = detuning_for_theta_nominal(waist_ratio, theta);
        PhysicalParams {
            waist_ratio,
            detuning_ratio,
            theta,
            n_photons,
            cavity_passes: 1.0,
            off_resonant_warning: detuning_ratio >= OFF_RESONANT_LIMIT,
        }
    }
}

/// Spontaneous-emission failure probability for the qubit pair,
/// P_sp = 2 N M theta Gamma/Delta. Values above one flag an invalid regime.
pub fn p_spontaneous(params: &PhysicalParams) -> Result<f64> {
    let p = 2.0
        * params.n_photons
        * params.cavity_passes
        * params.theta
        * params.detuning_ratio;
    if p > 1.0 {
        return Err(QilError::RegimeViolation {
            what: "p_spontaneous",
            value: p,
        });
    }
    Ok(p)
}

/// Cavity-pass budget for the coherent scheme.
#[derive(Debug, Clone, Copy)]
pub struct CavityBudget {
    /// M = -16 (W/lambda)^2 ln(eps) / eps
    pub m_formula: f64,
    /// Quoted reference value, surfaced at the canonical (0.01, 3) inputs.
    pub m_quoted: Option<f64>,
    /// Mean photons counted at the null threshold, -ln(eps).
    pub mean_null_photons: f64,
}

/// Passes needed so that both the sensitivity error and the spontaneous
/// emission probability reach `eps_target`.
pub fn cavity_passes_for_targets(eps_target: f64, waist_ratio: f64) -> Result<CavityBudget> {
    if !(eps_target > 0.0 && eps_target < 1.0) {
        return Err(QilError::InvalidSpec(format!(
            "epsilon target {eps_target} outside (0, 1)"
        )));
    }
    let m_formula = -16.0 * waist_ratio * waist_ratio * eps_target.ln() / eps_target;
    let canonical = (eps_target - 0.01).abs() < 1e-12 && (waist_ratio - 3.0).abs() < 1e-12;
    Ok(CavityBudget {
        m_formula,
        m_quoted: canonical.then_some(CAVITY_PASSES_QUOTED),
        mean_null_photons: -eps_target.ln(),
    })
}

/// Lost-photon counting statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossDistribution {
    Poisson,
    GaussianApprox,
}

/// Where the photons are lost; only the stretch between the two qubits is
/// modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossLocation {
    BetweenQubits,
}

#[derive(Debug, Clone, Copy)]
pub struct LossModel {
    /// Mean photons lost per arm.
    pub mean_lost: f64,
    pub location: LossLocation,
    pub distribution: LossDistribution,
}

impl LossModel {
    pub fn new(mean_lost: f64, distribution: LossDistribution) -> Result<LossModel> {
        if !(mean_lost >= 0.0 && mean_lost.is_finite()) {
            return Err(QilError::InvalidSpec(format!(
                "mean lost photons {mean_lost} must be finite and >= 0"
            )));
        }
        Ok(LossModel {
            mean_lost,
            location: LossLocation::BetweenQubits,
            distribution,
        })
    }

    /// Normalized weights over lost-photon counts k = 0, 1, ... with grid
    /// tail below `tail`.
    pub fn count_weights(&self, tail: f64) -> Vec<f64> {
        let kbar = self.mean_lost;
        if kbar == 0.0 {
            return vec![1.0];
        }
        let hi = (kbar + 10.0 * kbar.sqrt() + 25.0).ceil() as usize;
        let mut w: Vec<f64> = match self.distribution {
            LossDistribution::Poisson => {
                let mut w = Vec::with_capacity(hi + 1);
                // built from the peak to dodge underflow at large kbar
                let peak = kbar.floor();
                let mut log_w = vec![0.0f64; hi + 1];
                for k in (0..peak as usize).rev() {
                    log_w[k] = log_w[k + 1] + ((k + 1) as f64).ln() - kbar.ln();
                }
                for k in (peak as usize + 1)..=hi {
                    log_w[k] = log_w[k - 1] + kbar.ln() - (k as f64).ln();
                }
                let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for lw in log_w {
                    w.push((lw - max).exp());
                }
                w
            }
            LossDistribution::GaussianApprox => (0..=hi)
                .map(|k| (-(k as f64 - kbar).powi(2) / (2.0 * kbar)).exp())
                .collect(),
        };
        let z: f64 = w.iter().sum();
        for x in w.iter_mut() {
            *x /= z;
        }
        // trim the upper tail below the requested mass
        let mut cut = w.len();
        let mut dropped = 0.0;
        while cut > 1 && dropped + w[cut - 1] < tail {
            dropped += w[cut - 1];
            cut -= 1;
        }
        w.truncate(cut);
        let z: f64 = w.iter().sum();
        for x in w.iter_mut() {
            *x /= z;
        }
        w
    }
}

/// Total-variation distance between the Poisson law and its Gaussian
/// approximation at the same mean.
pub fn gaussian_poisson_tv(mean_lost: f64) -> Result<f64> {
    let p = LossModel::new(mean_lost, LossDistribution::Poisson)?.count_weights(1e-12);
    let g = LossModel::new(mean_lost, LossDistribution::GaussianApprox)?.count_weights(1e-12);
    let len = p.len().max(g.len());
    let mut tv = 0.0;
    for i in 0..len {
        let a = p.get(i).copied().unwrap_or(0.0);
        let b = g.get(i).copied().unwrap_or(0.0);
        tv += (a - b).abs();
    }
    Ok(tv / 2.0)
}

/// (P_q)^count: a phase e^{i count theta} on the component of qubit
/// `qubit` that sits in the arm's matching state.
pub fn phase_kick(
    register: &QubitRegister,
    qubit: usize,
    arm: Mode,
    theta: f64,
    count: u32,
) -> Result<QubitRegister> {
    register.phase_imprint(qubit, arm.index() as u8, theta * count as f64)
}

/// Random photon loss in the coherent scheme, applied to the final
/// two-qubit state (light factored out): a mixture over (k, k') photons
/// lost from the upper and lower arms, each member carrying the phase
/// kicks (P_0)^k (P_1)^{k'} on the second qubit.
pub fn apply_loss_coherent(
    posterior: &QubitRegister,
    theta: f64,
    loss: &LossModel,
    n_mean: f64,
) -> Result<MixedEnsemble> {
    if posterior.n_qubits() != 2 {
        return Err(QilError::DimensionMismatch {
            left: posterior.n_qubits(),
            right: 2,
        });
    }
    if loss.mean_lost > n_mean {
        return Err(QilError::InvalidSpec(format!(
            "mean lost photons {} exceeds photon number {n_mean}",
            loss.mean_lost
        )));
    }
    let weights = loss.count_weights(1e-10);
    let mut members = Vec::with_capacity(weights.len() * weights.len());
    for (k, wk) in weights.iter().enumerate() {
        let kicked_upper = phase_kick(posterior, 1, Mode::Upper, theta, k as u32)?;
        for (kp, wkp) in weights.iter().enumerate() {
            let member = phase_kick(&kicked_upper, 1, Mode::Lower, theta, kp as u32)?;
            members.push((wk * wkp, member));
        }
    }
    Ok(MixedEnsemble::new(members))
}

/// Mean loss count giving a target post-loss fidelity at false-null rate
/// eps: kbar = N ln(2 f - 1) / ln(eps). Defined for f in (1/2, 1].
pub fn kbar_for_fidelity(f_loss_target: f64, eps: f64, n_mean: f64) -> Result<f64> {
    if !(f_loss_target > 0.5 && f_loss_target <= 1.0) {
        return Err(QilError::InvalidSpec(format!(
            "loss fidelity target {f_loss_target} outside (1/2, 1]"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(QilError::InvalidSpec(format!(
            "epsilon {eps} outside (0, 1)"
        )));
    }
    Ok(n_mean * (2.0 * f_loss_target - 1.0).ln() / eps.ln())
}

/// Exact twin-Fock pipeline with one photon lost from `arm` between the
/// qubits. Returns the normalized post-loss joint state and the relative
/// loss weight (the arm's photon expectation at the loss point).
pub fn apply_loss_tf(
    n: u32,
    theta: f64,
    qubits: &[QubitAmplitudes; 2],
    arm: Mode,
) -> Result<(JointState, f64)> {
    let light = DualModeState::fock(n, n);
    let joint = make_joint(&light, qubits)?;
    let split = joint.transform_lights(|l| Ok(apply_beamsplitter(l)))?;
    let after_x = apply_qubit_interaction(&split, 0, theta)?;
    let weight = Cell::new(0.0f64);
    let lossy = after_x.transform_lights(|l| {
        let (state, w) = apply_annihilation(l, arm)?;
        weight.set(w);
        Ok(state)
    })?;
    let after_y = apply_qubit_interaction(&lossy, 1, theta)?;
    let out = after_y.transform_lights(|l| Ok(apply_beamsplitter(l)))?;
    Ok((out, weight.get()))
}

/// Loss from an unobserved arm: a mixture over the two arms weighted by
/// their photon expectations (equal for a twin-Fock input).
pub fn apply_loss_tf_traced(
    n: u32,
    theta: f64,
    qubits: &[QubitAmplitudes; 2],
) -> Result<Vec<(f64, JointState)>> {
    let (upper, w_upper) = apply_loss_tf(n, theta, qubits, Mode::Upper)?;
    let (lower, w_lower) = apply_loss_tf(n, theta, qubits, Mode::Lower)?;
    let total = w_upper + w_lower;
    Ok(vec![(w_upper / total, upper), (w_lower / total, lower)])
}

/// Simulated single-loss false-null probability on an imbalanced branch:
/// null redefined as |dn| = 1. The cross-check for the eta_loss formula.
pub fn eta_loss_simulated(n: u32, theta: f64) -> Result<f64> {
    let mid = apply_phase(
        &apply_beamsplitter(&DualModeState::fock(n, n)),
        theta,
        Mode::Upper,
    );
    let mut acc = 0.0;
    let mut total_weight = 0.0;
    for arm in [Mode::Upper, Mode::Lower] {
        let (lost, w) = apply_annihilation(&mid, arm)?;
        let out = apply_beamsplitter(&apply_phase(&lost, theta, Mode::Upper));
        let p: f64 = out
            .entries()
            .filter(|((n0, n1), _)| (*n0 as i64 - *n1 as i64).abs() == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        acc += w * p;
        total_weight += w;
    }
    Ok(acc / total_weight)
}

/// A lost photon collapses the NOON state to an equal classical mixture of
/// the two all-one-arm states |N-1, 0> and |0, N-1>.
pub fn apply_loss_noon(n: u32) -> Result<Vec<(f64, DualModeState)>> {
    if n == 0 {
        return Err(QilError::InvalidSpec(
            "NOON loss model needs at least one photon".into(),
        ));
    }
    Ok(vec![
        (0.5, DualModeState::fock(n - 1, 0)),
        (0.5, DualModeState::fock(0, n - 1)),
    ])
}

/// Phase window around the first false-null zero.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityWindow {
    /// Exact first zero of the false-null amplitude.
    pub theta_center: f64,
    /// Window from the fitted quadratic at the requested error budget.
    pub theta_min: f64,
    pub theta_max: f64,
    /// Nominal window theta_1 -/+ c theta_1^{3/2}.
    pub nominal_theta_min: f64,
    pub nominal_theta_max: f64,
    /// Least-squares coefficient of err ~ c (N theta - N theta*)^2.
    pub quad_coeff_fit: f64,
    pub quad_coeff_nominal: f64,
    /// Allowed |N theta - N theta*| at the error budget, from the fit.
    pub delta_bound: f64,
}

/// Quadratic-expansion sensitivity window. The coefficient is re-fitted
/// from the exact error rate over |N theta - N theta*| <= 0.1 and reported
/// next to the nominal value.
pub fn sensitivity_window(
    n: u32,
    scheme: ZeroScheme,
    fidelity_target: f64,
) -> Result<SensitivityWindow> {
    if !(fidelity_target > 0.0 && fidelity_target < 1.0) {
        return Err(QilError::InvalidSpec(format!(
            "fidelity target {fidelity_target} outside (0, 1)"
        )));
    }
    let theta_star = find_first_zero(n, scheme)?;
    let nf = n as f64;
    let err_at = |theta: f64| -> f64 {
        match scheme {
            ZeroScheme::TwinFock => TwinFockAnalyzer::new(n).eta(theta),
            ZeroScheme::Noon => (nf * theta).cos().powi(2),
        }
    };
    // least-squares c = sum(err d^2) / sum(d^4) over a symmetric grid
    let analyzer = match scheme {
        ZeroScheme::TwinFock => Some(TwinFockAnalyzer::new(n)),
        ZeroScheme::Noon => None,
    };
    let mut num = 0.0;
    let mut den = 0.0;
    let half_points = 20;
    for i in 1..=half_points {
        let delta = 0.1 * i as f64 / half_points as f64;
        for sign in [-1.0, 1.0] {
            let theta = theta_star + sign * delta / nf;
            if theta <= 0.0 {
                continue;
            }
            let err = match &analyzer {
                Some(a) => a.eta(theta),
                None => err_at(theta),
            };
            num += err * delta * delta;
            den += delta.powi(4);
        }
    }
    let quad_coeff_fit = num / den;
    let err_budget = 1.0 - fidelity_target;
    let delta_bound = (err_budget / quad_coeff_fit).sqrt();
    let nominal_coeff = match scheme {
        ZeroScheme::TwinFock => TF_WINDOW_COEFF,
        ZeroScheme::Noon => NOON_WINDOW_COEFF,
    };
    let nominal_half = nominal_coeff * theta_star.powf(1.5);
    Ok(SensitivityWindow {
        theta_center: theta_star,
        theta_min: theta_star - delta_bound / nf,
        theta_max: theta_star + delta_bound / nf,
        nominal_theta_min: theta_star - nominal_half,
        nominal_theta_max: theta_star + nominal_half,
        quad_coeff_fit,
        quad_coeff_nominal: match scheme {
            ZeroScheme::TwinFock => ETA_QUADRATIC_COEFF_NOMINAL,
            ZeroScheme::Noon => 1.0,
        },
        delta_bound,
    })
}

/// Closed-form fidelity scaling laws at the schemes' operating points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetScheme {
    CoherentCavity,
    TwinFock,
    TwinFockOneLoss,
    Noon,
}

impl BudgetScheme {
    pub fn name(self) -> &'static str {
        match self {
            BudgetScheme::CoherentCavity => "coherent_cavity",
            BudgetScheme::TwinFock => "tf",
            BudgetScheme::TwinFockOneLoss => "tf_one_loss",
            BudgetScheme::Noon => "noon",
        }
    }
}

/// Coefficient of the 1/(NM) fidelity deficit for the twin-Fock budget:
/// 16 x_1^2 (W/lambda)^2, = 206 at W/lambda = 3.
pub fn tf_deficit_coefficient(waist_ratio: f64) -> f64 {
    16.0 * TF_FIRST_ZERO_NOMINAL * TF_FIRST_ZERO_NOMINAL * waist_ratio * waist_ratio
}

/// Coefficient of the 1/(NM)^{1/3} deficit once a single loss must be
/// tolerated: (16 (W/lambda)^2)^{1/3} (0.33)^{2/3}, = 2.50 at W/lambda = 3.
pub fn tf_one_loss_coefficient(waist_ratio: f64) -> f64 {
    (16.0 * waist_ratio * waist_ratio).cbrt() * ETA_LOSS_ENVELOPE_COEFF.powf(2.0 / 3.0)
}

/// Coefficient of the 1/N deficit for the NOON budget:
/// 16 (pi/2)^2 (W/lambda)^2, = 355 at W/lambda = 3.
pub fn noon_deficit_coefficient(waist_ratio: f64) -> f64 {
    16.0 * std::f64::consts::FRAC_PI_2 * std::f64::consts::FRAC_PI_2 * waist_ratio * waist_ratio
}

/// Fidelity ceiling of a scheme at photon number N and M cavity passes.
/// A ceiling below zero flags an invalid regime.
pub fn fidelity_limit(
    scheme: BudgetScheme,
    n_photons: f64,
    cavity_passes: f64,
    waist_ratio: f64,
) -> Result<f64> {
    let nm = n_photons * cavity_passes;
    let f = match scheme {
        BudgetScheme::TwinFock => 1.0 - tf_deficit_coefficient(waist_ratio) / nm,
        BudgetScheme::TwinFockOneLoss => 1.0 - tf_one_loss_coefficient(waist_ratio) / nm.cbrt(),
        BudgetScheme::Noon => 1.0 - noon_deficit_coefficient(waist_ratio) / nm,
        BudgetScheme::CoherentCavity => {
            // invert M = -16 (W/lambda)^2 ln(eps)/eps, monotone on (0, 1)
            let target = cavity_passes;
            let g = |eps: f64| -16.0 * waist_ratio * waist_ratio * eps.ln() / eps - target;
            let mut lo = 1e-15;
            let mut hi = 1.0 - 1e-12;
            if g(lo) < 0.0 {
                return Err(QilError::RegimeViolation {
                    what: "cavity_passes",
                    value: target,
                });
            }
            if g(hi) > 0.0 {
                // fewer passes than even eps ~ 1 requires
                return Ok(0.0);
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            1.0 - 0.5 * (lo + hi)
        }
    };
    if f < 0.0 {
        return Err(QilError::RegimeViolation {
            what: "fidelity_limit",
            value: f,
        });
    }
    Ok(f)
}

/// Photon number needed to reach `fidelity_target` under a scheme's budget.
pub fn required_photons(
    scheme: BudgetScheme,
    fidelity_target: f64,
    cavity_passes: f64,
    waist_ratio: f64,
) -> Result<f64> {
    if !(fidelity_target > 0.0 && fidelity_target < 1.0) {
        return Err(QilError::InvalidSpec(format!(
            "fidelity target {fidelity_target} outside (0, 1)"
        )));
    }
    let deficit = 1.0 - fidelity_target;
    Ok(match scheme {
        BudgetScheme::TwinFock => tf_deficit_coefficient(waist_ratio) / deficit / cavity_passes,
        BudgetScheme::TwinFockOneLoss => {
            (tf_one_loss_coefficient(waist_ratio) / deficit).powi(3) / cavity_passes
        }
        BudgetScheme::Noon => noon_deficit_coefficient(waist_ratio) / deficit / cavity_passes,
        BudgetScheme::CoherentCavity => {
            return Err(QilError::InvalidSpec(
                "the coherent-cavity budget fixes M, not N".into(),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{outcome_distribution, OutcomeValue, Scheme};
    use crate::qubit::qubit_fidelity;

    #[test]
    fn theta_formula() {
        let theta = theta_from_physics(3.0, 0.1);
        assert!((theta - 1.326291e-3).abs() < 1e-8);
        // doubling the waist quarters theta
        assert!((theta_from_physics(6.0, 0.1) - theta / 4.0).abs() < 1e-12);
        assert_eq!(theta_from_physics(3.0, 0.0), 0.0);
    }

    #[test]
    fn spontaneous_emission_budget() {
        let p = PhysicalParams::tf_operating_point(1.0, 3.0, 1.0);
        // the operating point itself violates P_sp <= 1 at N M = 1
        assert!(p_spontaneous(&p).is_err());

        let p = PhysicalParams::tf_operating_point(1000.0, 3.0, 1.0);
        let psp = p_spontaneous(&p).unwrap();
        assert!((psp * 1000.0 - 205.97990) < 1e-4, "{}", psp * 1000.0);

        // N = 0 means no photons, no scattering
        let p = PhysicalParams::from_physics(3.0, 0.01, 0.0, 1.0).unwrap();
        assert_eq!(p_spontaneous(&p).unwrap(), 0.0);
    }

    #[test]
    fn off_resonant_warning_flag() {
        assert!(!PhysicalParams::from_physics(3.0, 0.05, 10.0, 1.0)
            .unwrap()
            .off_resonant_warning);
        assert!(PhysicalParams::from_physics(3.0, 0.2, 10.0, 1.0)
            .unwrap()
            .off_resonant_warning);
    }

    #[test]
    fn cavity_budget() {
        let b = cavity_passes_for_targets(0.01, 3.0).unwrap();
        assert!((b.m_formula - 66314.45).abs() < 0.5);
        assert_eq!(b.m_quoted, Some(CAVITY_PASSES_QUOTED));
        assert!((b.mean_null_photons - 4.60517).abs() < 1e-4);
        // eps -> 1: no sensitivity requirement, M -> 0
        let b = cavity_passes_for_targets(0.999999, 3.0).unwrap();
        assert!(b.m_formula < 1e-3);
        assert_eq!(b.m_quoted, None);
    }

    #[test]
    fn fidelity_limits() {
        let f = fidelity_limit(BudgetScheme::TwinFock, 2e4, 1.0, 3.0).unwrap();
        assert!((f - 0.99).abs() < 3e-4, "{f}");
        let f = fidelity_limit(BudgetScheme::TwinFock, 1.0, 2e4, 3.0).unwrap();
        assert!((f - 0.99).abs() < 3e-4);
        let n = required_photons(BudgetScheme::TwinFockOneLoss, 0.99, 1.0, 3.0).unwrap();
        assert!(n > 1.5e7 && n < 1.9e7, "{n}");
        let n = required_photons(BudgetScheme::Noon, 0.999, 1.0, 3.0).unwrap();
        assert!((n - 3.553e5).abs() < 1e3, "{n}");
        // coherent-cavity: the canonical pass count gives back f = 0.99
        let f = fidelity_limit(BudgetScheme::CoherentCavity, 1.0, 66314.45, 3.0).unwrap();
        assert!((f - 0.99).abs() < 1e-4, "{f}");
    }

    #[test]
    fn kbar_formula() {
        assert_eq!(kbar_for_fidelity(1.0, 0.01, 1000.0).unwrap(), 0.0);
        let kbar = kbar_for_fidelity(0.99, 0.01, 1000.0).unwrap();
        assert!((kbar - 4.38696).abs() < 1e-4);
        assert!(kbar_for_fidelity(0.5, 0.01, 1000.0).is_err());
    }

    #[test]
    fn coherent_loss_members() {
        let reg = QubitRegister::from_qubits(&[QubitAmplitudes::plus(), QubitAmplitudes::plus()]);
        let loss = LossModel::new(0.0, LossDistribution::Poisson).unwrap();
        let ens = apply_loss_coherent(&reg, 0.05, &loss, 100.0).unwrap();
        assert_eq!(ens.members().len(), 1);
        let f = qubit_fidelity(&MixedEnsemble::pure(reg.clone()), &ens).unwrap();
        assert!((f - 1.0).abs() < 1e-12);

        // a single upper-arm loss is exactly one phase kick on qubit y
        let kicked = phase_kick(&reg, 1, Mode::Upper, 0.3, 1).unwrap();
        let direct = reg.phase_imprint(1, 0, 0.3).unwrap();
        assert_eq!(kicked, direct);
    }

    #[test]
    fn coherent_loss_fidelity_quarter_percent() {
        // kbar = N ln(0.98)/ln(0.01): about one photon lost in every 250
        let n_mean = 1000.0;
        let eps = 0.01f64;
        let theta = (-eps.ln() / n_mean).sqrt();
        let kbar = kbar_for_fidelity(0.99, eps, n_mean).unwrap();
        assert!((kbar / n_mean - 0.0044).abs() < 2e-4);
        let reg = QubitRegister::from_qubits(&[QubitAmplitudes::plus(), QubitAmplitudes::plus()]);
        let loss = LossModel::new(kbar, LossDistribution::Poisson).unwrap();
        let ens = apply_loss_coherent(&reg, theta, &loss, n_mean).unwrap();
        let f = qubit_fidelity(&MixedEnsemble::pure(reg), &ens).unwrap();
        assert!((f - 0.99).abs() < 0.005, "{f}");
    }

    #[test]
    fn tf_loss_parity_and_herald() {
        let qubits = [QubitAmplitudes::basis(0), QubitAmplitudes::basis(0)];
        let (out, w) = apply_loss_tf(3, 0.2, &qubits, Mode::Upper).unwrap();
        assert!((w - 3.0).abs() < 1e-10);
        // all support on odd number differences
        for (_, b) in out.branches() {
            for ((n0, n1), a) in b.light.entries() {
                if a.norm_sqr() > 0.0 {
                    assert_eq!((n0 as i64 - n1 as i64).rem_euclid(2), 1);
                }
            }
        }
        // N = 1: a loss leaves a single photon, heralding the failure
        let (out, _) = apply_loss_tf(1, 0.2, &qubits, Mode::Lower).unwrap();
        for (_, b) in out.branches() {
            for ((n0, n1), a) in b.light.entries() {
                if a.norm_sqr() > 0.0 {
                    assert_eq!(n0 + n1, 1);
                }
            }
        }
    }

    #[test]
    fn tf_loss_traced_matches_formula() {
        let n = 30;
        let theta = 1.19 / n as f64;
        let sim = eta_loss_simulated(n, theta).unwrap();
        let formula = TwinFockAnalyzer::new(n).eta_loss(theta);
        assert!((sim - formula).abs() < 1e-10, "{sim} vs {formula}");

        // the joint-state route agrees
        let qubits = [QubitAmplitudes::basis(0), QubitAmplitudes::basis(0)];
        let mix = apply_loss_tf_traced(n, theta, &qubits).unwrap();
        let mut p = 0.0;
        for (w, joint) in &mix {
            for rec in outcome_distribution(joint, Scheme::TwinFock).unwrap() {
                if let OutcomeValue::NumberDifference(d) = rec.value {
                    if d.abs() == 1 {
                        p += w * rec.probability;
                    }
                }
            }
        }
        assert!((p - formula).abs() < 1e-10, "{p} vs {formula}");
    }

    #[test]
    fn noon_loss_is_theta_blind() {
        let members = apply_loss_noon(4).unwrap();
        assert_eq!(members.len(), 2);
        // run each member through the NOON pipeline at several phases: the
        // presence outcome never depends on theta
        for theta in [0.0, 0.1, 0.5, 1.2] {
            let mut p_empty = 0.0;
            for (w, light) in &members {
                let joint = make_joint(
                    light,
                    &[QubitAmplitudes::basis(0), QubitAmplitudes::basis(0)],
                )
                .unwrap();
                let out = crate::interferometer::run_noon(&joint, theta).unwrap();
                for rec in outcome_distribution(&out, Scheme::Noon).unwrap() {
                    if rec.value == OutcomeValue::LowerOccupied(false) {
                        p_empty += w * rec.probability;
                    }
                }
            }
            assert!((p_empty - 0.5).abs() < 1e-10, "theta {theta}: {p_empty}");
        }
        assert!(apply_loss_noon(0).is_err());
    }

    #[test]
    fn gaussian_vs_poisson_distance() {
        let tv = gaussian_poisson_tv(4.39).unwrap();
        assert!(tv > 0.0 && tv < 0.1, "{tv}");
    }

    #[test]
    fn window_examples() {
        let w = sensitivity_window(200, ZeroScheme::TwinFock, 0.999).unwrap();
        assert!(w.theta_min < w.theta_center && w.theta_center < w.theta_max);
        // the fitted curvature sits near 1.07 in (N theta)^2 units
        assert!(
            w.quad_coeff_fit > 0.9 && w.quad_coeff_fit < 1.2,
            "{}",
            w.quad_coeff_fit
        );
        let w = sensitivity_window(50, ZeroScheme::Noon, 0.999).unwrap();
        // cos^2 curvature in (N theta)^2 units is 1 up to quartic terms
        assert!((w.quad_coeff_fit - 1.0).abs() < 0.01);
        let nominal_half = NOON_WINDOW_COEFF * w.theta_center.powf(1.5);
        assert!((w.nominal_theta_max - w.theta_center - nominal_half).abs() < 1e-15);
    }

    #[test]
    fn budget_tradeoff_consistency() {
        // solving eta_loss envelope = P_sp numerically reproduces the
        // closed-form one-loss coefficient within 1%
        let wr = 3.0f64;
        let n = 1e7f64;
        let solve = |n: f64| -> f64 {
            let mut lo = 1e-3f64;
            let mut hi = 1e3f64;
            let g = |tau: f64| {
                ETA_LOSS_ENVELOPE_COEFF / tau - 16.0 * wr * wr * tau * tau / n
            };
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tau = 0.5 * (lo + hi);
            16.0 * wr * wr * tau * tau / n
        };
        let p_sp = solve(n);
        let closed = tf_one_loss_coefficient(wr) / n.cbrt();
        assert!((p_sp / closed - 1.0).abs() < 0.01, "{p_sp} vs {closed}");
    }
}
