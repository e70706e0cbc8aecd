//! `qil` command-line driver: deterministic CSV/JSON emission for
//! error-rate sweeps, budget tables, entangling rounds and protocol runs.
//!
//! Configuration comes from plain key=value files plus flag overrides
//! (flags win). All floating-point output carries 17 significant digits so
//! identical configs and seeds produce byte-identical files. Exit codes:
//! 0 success, 2 configuration error, 3 parameter-regime violation.

pub mod config;
pub mod jsonfmt;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use qil_core::budget::{
    self, cavity_passes_for_targets, fidelity_limit, noon_deficit_coefficient, required_photons,
    tf_deficit_coefficient, tf_one_loss_coefficient, BudgetScheme, ETA_LOSS_ENVELOPE_COEFF,
    TF_FIRST_ZERO_NOMINAL,
};
use qil_core::interferometer::lower_port_overlap;
use qil_core::protocols::{
    entangle_pair, ghz_chain, swap_entanglement, teleport, EntangleOutcome, ProtocolConfig,
    ProtocolResult, RunMode, TranscriptEntry,
};
use qil_core::{
    balanced_weight, fidelities, find_first_zero, MixedEnsemble, OutcomeValue, QubitAmplitudes,
    QubitRegister, Scheme, TwinFockAnalyzer, ZeroScheme,
};

use config::{parse_chi, parse_grid, KeyValues};
use jsonfmt::{float, Json};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Regime(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Regime(msg) => write!(f, "regime violation: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Regime(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "qil",
    about = "Interferometric entanglement generation: exact Fock-space sweeps, budgets and protocols"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Error-rate curves over an N*theta grid, emitted as CSV.
    Sweep(SweepArgs),
    /// Scalar budget table for one scheme, emitted as JSON.
    Budget(BudgetArgs),
    /// One entangling round: exact outcome distribution or a sampled
    /// outcome with its posterior, emitted as JSON.
    Entangle(EntangleArgs),
    /// Teleportation, GHZ/cat chains and entanglement swapping.
    Protocol(ProtocolArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// key=value configuration file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// coherent | tf | noon (budget also accepts tf_one_loss, coherent_cavity)
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub n_photons: Option<String>,
    #[arg(long)]
    pub cavity_passes: Option<String>,
    #[arg(long)]
    pub waist_ratio: Option<String>,
    #[arg(long)]
    pub detuning_ratio: Option<String>,
    /// per-qubit interaction phase (mutually exclusive with the
    /// waist/detuning pair)
    #[arg(long)]
    pub theta: Option<String>,
    /// N*theta grid: start:end:count or a comma list
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// exact | sampled
    #[arg(long)]
    pub mode: Option<String>,
    /// output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv | json (each command has a fixed native format)
    #[arg(long)]
    pub format: Option<String>,
}

impl CommonArgs {
    fn merged(&self) -> Result<KeyValues, CliError> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::from_file(path)?,
            None => KeyValues::default(),
        };
        kv.set_override("scheme", self.scheme.clone());
        kv.set_override("n_photons", self.n_photons.clone());
        kv.set_override("cavity_passes", self.cavity_passes.clone());
        kv.set_override("waist_ratio", self.waist_ratio.clone());
        kv.set_override("detuning_ratio", self.detuning_ratio.clone());
        kv.set_override("theta", self.theta.clone());
        kv.set_override("grid", self.grid.clone());
        kv.set_override("seed", self.seed.clone());
        kv.set_override("mode", self.mode.clone());
        kv.set_override(
            "format",
            self.format.clone(),
        );
        Ok(kv)
    }
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// subset of epsilon,eta,kappa,eta_loss (canonical order kept)
    #[arg(long)]
    pub quantities: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct BudgetArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// false-null target for the coherent cavity budget
    #[arg(long)]
    pub eps_target: Option<String>,
    /// fidelity target: adds the required photon number to the table
    #[arg(long)]
    pub fidelity_target: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct EntangleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// first qubit state, re0,im0,re1,im1 (defaults to (|0>+|1>)/sqrt 2)
    #[arg(long)]
    pub chi_x: Option<String>,
    #[arg(long)]
    pub chi_y: Option<String>,
    #[arg(long)]
    pub tail_tolerance: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Teleport,
    Ghz,
    Swap,
}

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    /// which protocol to run
    #[arg(value_enum)]
    pub kind: ProtocolKind,
    #[command(flatten)]
    pub common: CommonArgs,
    /// source state for teleportation
    #[arg(long)]
    pub chi_source: Option<String>,
    /// chain length for the cat state
    #[arg(long)]
    pub ghz_qubits: Option<String>,
    /// entangled-pair coefficients for swapping
    #[arg(long)]
    pub c00: Option<String>,
    #[arg(long)]
    pub c11: Option<String>,
    /// number of seeded sampled trials (batch mode)
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub tail_tolerance: Option<String>,
}

pub struct CmdOutput {
    pub bytes: Vec<u8>,
    pub out: Option<PathBuf>,
    pub exit: i32,
}

/// Bound the rayon worker count by QIL_THREADS if set.
pub fn configure_threads() {
    if let Ok(raw) = std::env::var("QIL_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

pub fn execute(cli: Cli) -> Result<CmdOutput, CliError> {
    match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Budget(args) => cmd_budget(args),
        Command::Entangle(args) => cmd_entangle(args),
        Command::Protocol(args) => cmd_protocol(args),
    }
}

fn check_format(kv: &KeyValues, native: &str) -> Result<(), CliError> {
    if let Some(fmt) = kv.get("format") {
        if fmt != native {
            return Err(CliError::Config(format!(
                "this command emits {native}, not `{fmt}`"
            )));
        }
    }
    Ok(())
}

fn parse_scheme(raw: &str) -> Result<Scheme, CliError> {
    match raw {
        "coherent" => Ok(Scheme::Coherent),
        "tf" => Ok(Scheme::TwinFock),
        "noon" => Ok(Scheme::Noon),
        _ => Err(CliError::Config(format!(
            "scheme `{raw}`: expected coherent, tf or noon"
        ))),
    }
}

/// The mutually exclusive theta specification: an explicit phase, or the
/// physical (waist_ratio, detuning_ratio) pair.
fn resolved_theta(kv: &KeyValues) -> Result<Option<f64>, CliError> {
    let theta: Option<f64> = kv.parse("theta")?;
    let detuning: Option<f64> = kv.parse("detuning_ratio")?;
    match (theta, detuning) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "theta and detuning_ratio are mutually exclusive".into(),
        )),
        (Some(t), None) => Ok(Some(t)),
        (None, Some(d)) => {
            let waist: f64 = kv.require("waist_ratio")?;
            Ok(Some(budget::theta_from_physics(waist, d)))
        }
        (None, None) => Ok(None),
    }
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantity {
    Epsilon,
    Eta,
    Kappa,
    EtaLoss,
}

impl Quantity {
    const CANONICAL: [Quantity; 4] = [
        Quantity::Epsilon,
        Quantity::Eta,
        Quantity::Kappa,
        Quantity::EtaLoss,
    ];

    fn name(self) -> &'static str {
        match self {
            Quantity::Epsilon => "epsilon",
            Quantity::Eta => "eta",
            Quantity::Kappa => "kappa",
            Quantity::EtaLoss => "eta_loss",
        }
    }
}

fn parse_quantities(raw: Option<&str>) -> Result<Vec<Quantity>, CliError> {
    let Some(raw) = raw else {
        return Ok(Quantity::CANONICAL.to_vec());
    };
    let mut requested = Vec::new();
    for part in raw.split(',') {
        let q = match part.trim() {
            "epsilon" => Quantity::Epsilon,
            "eta" => Quantity::Eta,
            "kappa" => Quantity::Kappa,
            "eta_loss" => Quantity::EtaLoss,
            other => {
                return Err(CliError::Config(format!(
                    "quantity `{other}`: expected epsilon, eta, kappa or eta_loss"
                )))
            }
        };
        if !requested.contains(&q) {
            requested.push(q);
        }
    }
    // canonical column order regardless of request order
    Ok(Quantity::CANONICAL
        .into_iter()
        .filter(|q| requested.contains(q))
        .collect())
}

fn cmd_sweep(args: SweepArgs) -> Result<CmdOutput, CliError> {
    let mut kv = args.common.merged()?;
    kv.set_override("quantities", args.quantities.clone());
    check_format(&kv, "csv")?;
    let n: u32 = kv.require("n_photons")?;
    if n == 0 {
        return Err(CliError::Config("n_photons must be positive".into()));
    }
    let grid = parse_grid(
        kv.get("grid")
            .ok_or_else(|| CliError::Config("missing required key `grid`".into()))?,
    )?;
    let quantities = parse_quantities(kv.get("quantities"))?;

    let needs_tf = quantities
        .iter()
        .any(|q| matches!(q, Quantity::Eta | Quantity::EtaLoss));
    let analyzer = if needs_tf {
        Some(TwinFockAnalyzer::new(n))
    } else {
        None
    };
    let nf = n as f64;
    let rows: Vec<String> = grid
        .par_iter()
        .map(|&tau| {
            let theta = tau / nf;
            let mut cells = vec![n.to_string(), float(theta), float(tau)];
            for q in &quantities {
                let value = match q {
                    Quantity::Epsilon => qil_core::epsilon_closed(nf, theta),
                    Quantity::Eta => analyzer.as_ref().unwrap().eta(theta),
                    Quantity::Kappa => qil_core::kappa_closed(nf, theta),
                    Quantity::EtaLoss => analyzer.as_ref().unwrap().eta_loss(theta),
                };
                cells.push(float(value));
            }
            cells.join(",")
        })
        .collect();

    let mut out = String::from("N,theta,N_theta");
    for q in &quantities {
        out.push(',');
        out.push_str(q.name());
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    Ok(CmdOutput {
        bytes: out.into_bytes(),
        out: args.common.out,
        exit: 0,
    })
}

// --------------------------------------------------------------- budget

fn parse_budget_scheme(raw: &str) -> Result<BudgetScheme, CliError> {
    match raw {
        "coherent" | "coherent_cavity" => Ok(BudgetScheme::CoherentCavity),
        "tf" => Ok(BudgetScheme::TwinFock),
        "tf_one_loss" => Ok(BudgetScheme::TwinFockOneLoss),
        "noon" => Ok(BudgetScheme::Noon),
        _ => Err(CliError::Config(format!(
            "budget scheme `{raw}`: expected coherent, tf, tf_one_loss or noon"
        ))),
    }
}

fn cmd_budget(args: BudgetArgs) -> Result<CmdOutput, CliError> {
    let mut kv = args.common.merged()?;
    kv.set_override("eps_target", args.eps_target.clone());
    kv.set_override("fidelity_target", args.fidelity_target.clone());
    check_format(&kv, "json")?;

    let scheme = parse_budget_scheme(
        kv.get("scheme")
            .ok_or_else(|| CliError::Config("missing required key `scheme`".into()))?,
    )?;
    let waist_ratio: f64 = kv.parse("waist_ratio")?.unwrap_or(3.0);
    let cavity_passes: f64 = kv.parse("cavity_passes")?.unwrap_or(1.0);
    let n_photons: Option<f64> = kv.parse("n_photons")?;
    let eps_target: Option<f64> = kv.parse("eps_target")?;
    let fidelity_target: Option<f64> = kv.parse("fidelity_target")?;
    if waist_ratio <= 0.0 || cavity_passes < 1.0 {
        return Err(CliError::Config(
            "waist_ratio must be positive and cavity_passes >= 1".into(),
        ));
    }

    let mut fields: Vec<(&'static str, Json)> = vec![
        ("scheme", Json::Str(scheme.name().into())),
        (
            "n_photons",
            n_photons.map_or(Json::Null, Json::Num),
        ),
        ("cavity_passes", Json::Num(cavity_passes)),
        ("waist_ratio", Json::Num(waist_ratio)),
    ];
    let mut violation = false;

    let nm = n_photons.map(|n| n * cavity_passes);
    match scheme {
        BudgetScheme::TwinFock | BudgetScheme::Noon | BudgetScheme::TwinFockOneLoss => {
            let (theta_star, p_sp) = match (scheme, nm) {
                (BudgetScheme::TwinFock, Some(nm)) => (
                    Some(TF_FIRST_ZERO_NOMINAL / nm),
                    Some(tf_deficit_coefficient(waist_ratio) / nm),
                ),
                (BudgetScheme::Noon, Some(nm)) => (
                    Some(std::f64::consts::FRAC_PI_2 / nm),
                    Some(noon_deficit_coefficient(waist_ratio) / nm),
                ),
                (BudgetScheme::TwinFockOneLoss, Some(nm)) => {
                    let tau = (ETA_LOSS_ENVELOPE_COEFF * nm
                        / (16.0 * waist_ratio * waist_ratio))
                        .cbrt();
                    (
                        Some(tau / nm),
                        Some(tf_one_loss_coefficient(waist_ratio) / nm.cbrt()),
                    )
                }
                _ => (None, None),
            };
            if let Some(p) = p_sp {
                violation |= p > 1.0;
            }
            fields.push(("theta_star", theta_star.map_or(Json::Null, Json::Num)));
            fields.push(("p_sp", p_sp.map_or(Json::Null, Json::Num)));
            // the operating point sits on a zero of the false-null rate,
            // except in the one-loss budget where err equals P_sp
            let err = match scheme {
                BudgetScheme::TwinFockOneLoss => p_sp.map_or(Json::Null, Json::Num),
                _ => Json::Num(0.0),
            };
            fields.push(("err", err));
            let f_limit = nm.map(|n| fidelity_limit(scheme, n, 1.0, waist_ratio));
            match f_limit {
                Some(Ok(f)) => fields.push(("f_limit", Json::Num(f))),
                Some(Err(_)) => {
                    violation = true;
                    fields.push(("f_limit", Json::Null));
                }
                None => fields.push(("f_limit", Json::Null)),
            }
        }
        BudgetScheme::CoherentCavity => {
            let eps = eps_target;
            fields.push(("eps_target", eps.map_or(Json::Null, Json::Num)));
            if let Some(eps) = eps {
                let b = cavity_passes_for_targets(eps, waist_ratio)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                fields.push(("m_formula", Json::Num(b.m_formula)));
                fields.push((
                    "m_quoted",
                    b.m_quoted.map_or(Json::Null, Json::Num),
                ));
                fields.push(("mean_null_photons", Json::Num(b.mean_null_photons)));
                fields.push(("err", Json::Num(eps)));
                fields.push(("f_limit", Json::Num(1.0 - eps)));
                if let Some(n) = n_photons {
                    // theta at the sensitivity condition N M theta^2 = -ln eps
                    let theta = (-eps.ln() / (n * b.m_formula)).sqrt();
                    let overlap = lower_port_overlap(n, theta);
                    fields.push(("lower_port_overlap_exact", Json::Num(overlap.exact)));
                    fields.push((
                        "lower_port_overlap_small_angle",
                        Json::Num(overlap.small_angle_form),
                    ));
                }
            } else {
                let f = fidelity_limit(scheme, 1.0, cavity_passes, waist_ratio);
                match f {
                    Ok(f) => {
                        fields.push(("err", Json::Num(1.0 - f)));
                        fields.push(("f_limit", Json::Num(f)));
                    }
                    Err(_) => {
                        violation = true;
                        fields.push(("err", Json::Null));
                        fields.push(("f_limit", Json::Null));
                    }
                }
            }
        }
    }

    if let Some(target) = fidelity_target {
        match required_photons(scheme, target, cavity_passes, waist_ratio) {
            Ok(n) => fields.push(("n_required", Json::Num(n))),
            Err(_) => fields.push(("n_required", Json::Null)),
        }
    }
    fields.push(("regime_violation", Json::Bool(violation)));

    Ok(CmdOutput {
        bytes: Json::Obj(fields).render().into_bytes(),
        out: args.common.out,
        exit: if violation { 3 } else { 0 },
    })
}

// ------------------------------------------------------------- entangle

fn outcome_value_json(value: OutcomeValue) -> Json {
    match value {
        OutcomeValue::PhotonCount(n) => Json::Obj(vec![("photon_count", Json::Int(n as i64))]),
        OutcomeValue::NumberDifference(d) => {
            Json::Obj(vec![("number_difference", Json::Int(d))])
        }
        OutcomeValue::LowerOccupied(b) => Json::Obj(vec![("lower_occupied", Json::Bool(b))]),
    }
}

fn ensemble_json(ensemble: &MixedEnsemble) -> Json {
    Json::Arr(
        ensemble
            .members()
            .iter()
            .map(|(w, reg)| {
                Json::Obj(vec![
                    ("weight", Json::Num(*w)),
                    (
                        "amplitudes",
                        Json::Arr(
                            reg.amps()
                                .iter()
                                .map(|a| Json::Arr(vec![Json::Num(a.re), Json::Num(a.im)]))
                                .collect(),
                        ),
                    ),
                ])
            })
            .collect(),
    )
}

fn entangle_outcome_json(o: &EntangleOutcome) -> Json {
    Json::Obj(vec![
        ("outcome", outcome_value_json(o.value)),
        (
            "subspace",
            Json::Str(
                match o.subspace {
                    qil_core::Subspace::Balanced => "balanced",
                    qil_core::Subspace::Imbalanced => "imbalanced",
                }
                .into(),
            ),
        ),
        ("probability", Json::Num(o.probability)),
        ("posterior", ensemble_json(&o.posterior)),
    ])
}

/// Exact intrinsic false-null rate of a scheme at (N, theta): the null
/// probability of a purely imbalanced input pair.
fn simulated_err(config: &ProtocolConfig) -> Result<f64, CliError> {
    let basis = MixedEnsemble::pure(QubitRegister::from_qubits(&[
        QubitAmplitudes::basis(0),
        QubitAmplitudes::basis(0),
    ]));
    let outcomes =
        entangle_pair(&basis, (0, 1), config).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(outcomes
        .iter()
        .filter(|o| o.value.is_null())
        .map(|o| o.probability)
        .sum())
}

fn protocol_theta(kv: &KeyValues, scheme: Scheme, n: u32) -> Result<f64, CliError> {
    match resolved_theta(kv)? {
        Some(theta) => Ok(theta),
        None => match scheme {
            Scheme::TwinFock => find_first_zero(n, ZeroScheme::TwinFock)
                .map_err(|e| CliError::Config(e.to_string())),
            Scheme::Noon => {
                find_first_zero(n, ZeroScheme::Noon).map_err(|e| CliError::Config(e.to_string()))
            }
            Scheme::Coherent => Err(CliError::Config(
                "the coherent scheme needs an explicit theta (or the waist/detuning pair)".into(),
            )),
        },
    }
}

/// Mode and seed, enforcing "seed iff sampled".
fn run_mode(kv: &KeyValues) -> Result<(RunMode, Option<u64>), CliError> {
    let seed: Option<u64> = kv.parse("seed")?;
    match kv.get("mode").unwrap_or("exact") {
        "exact" => {
            if seed.is_some() {
                return Err(CliError::Config("seed is only valid with mode=sampled".into()));
            }
            Ok((RunMode::Exact, None))
        }
        "sampled" => {
            let seed =
                seed.ok_or_else(|| CliError::Config("mode=sampled requires a seed".into()))?;
            Ok((RunMode::Sampled { seed }, Some(seed)))
        }
        other => Err(CliError::Config(format!(
            "mode `{other}`: expected exact or sampled"
        ))),
    }
}

fn cmd_entangle(args: EntangleArgs) -> Result<CmdOutput, CliError> {
    let mut kv = args.common.merged()?;
    kv.set_override("chi_x", args.chi_x.clone());
    kv.set_override("chi_y", args.chi_y.clone());
    kv.set_override("tail_tolerance", args.tail_tolerance.clone());
    check_format(&kv, "json")?;

    let scheme = parse_scheme(
        kv.get("scheme")
            .ok_or_else(|| CliError::Config("missing required key `scheme`".into()))?,
    )?;
    let n: u32 = kv.require("n_photons")?;
    let theta = protocol_theta(&kv, scheme, n)?;
    let (mode, seed) = run_mode(&kv)?;
    let tail: f64 = kv.parse("tail_tolerance")?.unwrap_or(1e-12);
    let chi_x = match kv.get("chi_x") {
        Some(raw) => parse_chi(raw)?,
        None => QubitAmplitudes::plus(),
    };
    let chi_y = match kv.get("chi_y") {
        Some(raw) => parse_chi(raw)?,
        None => QubitAmplitudes::plus(),
    };

    let mut config = ProtocolConfig::exact(scheme, n).with_theta(theta);
    config.tail_tolerance = tail;
    let register = MixedEnsemble::pure(QubitRegister::from_qubits(&[chi_x, chi_y]));
    let outcomes =
        entangle_pair(&register, (0, 1), &config).map_err(|e| CliError::Config(e.to_string()))?;
    let lambda = balanced_weight(&chi_x, &chi_y);
    let err = simulated_err(&config)?;
    let (f_nul, f_avg) = fidelities(lambda, err);

    let mut fields: Vec<(&'static str, Json)> = vec![
        ("scheme", Json::Str(scheme.name().into())),
        ("n_photons", Json::Int(n as i64)),
        ("theta", Json::Num(theta)),
        ("lambda", Json::Num(lambda)),
        ("err", Json::Num(err)),
        ("f_nul", Json::Num(f_nul)),
        ("f_avg", Json::Num(f_avg)),
    ];
    match mode {
        RunMode::Exact => {
            fields.push(("mode", Json::Str("exact".into())));
            fields.push((
                "outcomes",
                Json::Arr(outcomes.iter().map(entangle_outcome_json).collect()),
            ));
        }
        RunMode::Sampled { .. } => {
            let seed = seed.unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let total: f64 = outcomes.iter().map(|o| o.probability).sum();
            let mut draw = rng.gen::<f64>() * total;
            let mut picked = outcomes.len() - 1;
            for (i, o) in outcomes.iter().enumerate() {
                draw -= o.probability;
                if draw <= 0.0 {
                    picked = i;
                    break;
                }
            }
            fields.push(("mode", Json::Str("sampled".into())));
            fields.push(("seed", Json::Int(seed as i64)));
            fields.push(("outcome", entangle_outcome_json(&outcomes[picked])));
        }
    }
    Ok(CmdOutput {
        bytes: Json::Obj(fields).render().into_bytes(),
        out: args.common.out,
        exit: 0,
    })
}

// ------------------------------------------------------------- protocol

fn transcript_json(entries: &[TranscriptEntry]) -> Json {
    Json::Arr(
        entries
            .iter()
            .map(|e| {
                let mut fields: Vec<(&'static str, Json)> = vec![
                    ("op", Json::Str(e.op.into())),
                    (
                        "qubits",
                        Json::Arr(e.qubits.iter().map(|&q| Json::Int(q as i64)).collect()),
                    ),
                ];
                if let Some(outcome) = &e.outcome {
                    fields.push(("outcome", Json::Str(outcome.clone())));
                }
                if let Some(p) = e.probability {
                    fields.push(("probability", Json::Num(p)));
                }
                Json::Obj(fields)
            })
            .collect(),
    )
}

fn result_json(result: &ProtocolResult) -> Vec<(&'static str, Json)> {
    vec![
        ("mean_fidelity", Json::Num(result.mean_fidelity)),
        ("min_fidelity", Json::Num(result.min_fidelity)),
        (
            "branches",
            Json::Arr(
                result
                    .branches
                    .iter()
                    .map(|b| {
                        Json::Obj(vec![
                            ("probability", Json::Num(b.probability)),
                            ("fidelity", Json::Num(b.fidelity)),
                            ("transcript", transcript_json(&b.transcript)),
                            ("final_state", ensemble_json(&b.final_state)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ]
}

fn cmd_protocol(args: ProtocolArgs) -> Result<CmdOutput, CliError> {
    let mut kv = args.common.merged()?;
    kv.set_override("chi_source", args.chi_source.clone());
    kv.set_override("ghz_qubits", args.ghz_qubits.clone());
    kv.set_override("c00", args.c00.clone());
    kv.set_override("c11", args.c11.clone());
    kv.set_override("trials", args.trials.clone());
    kv.set_override("tail_tolerance", args.tail_tolerance.clone());
    check_format(&kv, "json")?;

    let scheme = parse_scheme(kv.get("scheme").unwrap_or("noon"))?;
    let n: u32 = kv.require("n_photons")?;
    let theta = protocol_theta(&kv, scheme, n)?;
    let (mode, seed) = run_mode(&kv)?;
    let tail: f64 = kv.parse("tail_tolerance")?.unwrap_or(1e-12);
    let trials: Option<u64> = kv.parse("trials")?;

    let mut config = ProtocolConfig::exact(scheme, n).with_theta(theta);
    config.tail_tolerance = tail;

    let kind_name = match args.kind {
        ProtocolKind::Teleport => "teleport",
        ProtocolKind::Ghz => "ghz",
        ProtocolKind::Swap => "swap",
    };
    let run_once = |config: &ProtocolConfig| -> Result<ProtocolResult, CliError> {
        match args.kind {
            ProtocolKind::Teleport => {
                let chi = match kv.get("chi_source") {
                    Some(raw) => parse_chi(raw)?,
                    None => QubitAmplitudes::plus(),
                };
                teleport(&chi, config).map_err(|e| CliError::Config(e.to_string()))
            }
            ProtocolKind::Ghz => {
                let n_qubits: usize = kv.parse("ghz_qubits")?.unwrap_or(3);
                ghz_chain(n_qubits, config).map_err(|e| CliError::Config(e.to_string()))
            }
            ProtocolKind::Swap => {
                let c00 = match kv.get("c00") {
                    Some(raw) => parse_complex(raw)?,
                    None => Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                };
                let c11 = match kv.get("c11") {
                    Some(raw) => parse_complex(raw)?,
                    None => Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                };
                swap_entanglement(c00, c11, config).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    };

    let mut fields: Vec<(&'static str, Json)> = vec![
        ("protocol", Json::Str(kind_name.into())),
        ("scheme", Json::Str(scheme.name().into())),
        ("n_photons", Json::Int(n as i64)),
        ("theta", Json::Num(theta)),
    ];

    match (mode, trials) {
        (RunMode::Exact, None) => {
            fields.push(("mode", Json::Str("exact".into())));
            let result = run_once(&config)?;
            fields.extend(result_json(&result));
        }
        (RunMode::Exact, Some(_)) => {
            return Err(CliError::Config(
                "trials requires mode=sampled with a seed".into(),
            ));
        }
        (RunMode::Sampled { seed: s }, None) => {
            fields.push(("mode", Json::Str("sampled".into())));
            fields.push(("seed", Json::Int(s as i64)));
            config.mode = RunMode::Sampled { seed: s };
            let result = run_once(&config)?;
            fields.extend(result_json(&result));
        }
        (RunMode::Sampled { .. }, Some(trials)) => {
            // batch Monte-Carlo: trial i runs with seed base + i
            let base = seed.unwrap();
            let mut fidelities_acc = Vec::with_capacity(trials as usize);
            for i in 0..trials {
                config.mode = RunMode::Sampled { seed: base + i };
                let result = run_once(&config)?;
                fidelities_acc.push(result.branches[0].fidelity);
            }
            let mean = fidelities_acc.iter().sum::<f64>() / fidelities_acc.len() as f64;
            let min = fidelities_acc.iter().cloned().fold(f64::INFINITY, f64::min);
            fields.push(("mode", Json::Str("sampled".into())));
            fields.push(("base_seed", Json::Int(base as i64)));
            fields.push(("trials", Json::Int(trials as i64)));
            fields.push(("mean_fidelity", Json::Num(mean)));
            fields.push(("min_fidelity", Json::Num(min)));
            fields.push((
                "trial_fidelities",
                Json::Arr(fidelities_acc.into_iter().map(Json::Num).collect()),
            ));
        }
    }
    Ok(CmdOutput {
        bytes: Json::Obj(fields).render().into_bytes(),
        out: args.common.out,
        exit: 0,
    })
}

fn parse_complex(raw: &str) -> Result<Complex64, CliError> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("complex value `{s}`")))
        })
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(CliError::Config(format!(
            "complex value `{raw}`: expected re or re,im"
        ))),
    }
}

/// Parse, run and write; returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    configure_threads();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version print and exit 0; real parse errors are config errors
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(output) => {
            let write_result = match &output.out {
                Some(path) => std::fs::write(path, &output.bytes)
                    .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
                None => {
                    use std::io::Write;
                    std::io::stdout()
                        .write_all(&output.bytes)
                        .map_err(|e| CliError::Io(e.to_string()))
                }
            };
            match write_result {
                Ok(()) => output.exit,
                Err(e) => {
                    eprintln!("{e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
