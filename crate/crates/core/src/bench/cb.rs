//! Cycle benchmarking adapted to global fluorescence detection: the measured
//! quantity is the population of the ideal final state |↑↑⟩.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{resample_count, std_dev};
use crate::error::{Error, Result};
use crate::gates::{rx, ry};
use crate::noise::BrightHistogram;
use crate::quantum::{Ion, Mat2, TwoQubitState};
use crate::rng::task_rng;
use crate::transpile::{lower, minimize_transports, Circuit, GateOp, SimMode, Simulator};

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;
const SEPARABILITY_TOL: f64 = 1e-9;
const RECOVERY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// R_P(π/2) preparing the input eigenstate from |↑⟩; none for I.
    pub fn input_rotation(self, qubit: Ion) -> Option<GateOp> {
        let theta = FRAC_PI_2;
        match self {
            Pauli::I => None,
            Pauli::X => Some(GateOp::Rx { theta, qubit }),
            Pauli::Y => Some(GateOp::Ry { theta, qubit }),
            Pauli::Z => Some(GateOp::Rz { theta, qubit }),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::I => "I",
            Pauli::X => "x",
            Pauli::Y => "y",
            Pauli::Z => "z",
        })
    }
}

/// Input bases: all (P₁, P₂) except (I, I).
pub fn basis_set() -> Vec<(Pauli, Pauli)> {
    Pauli::ALL
        .iter()
        .flat_map(|&a| Pauli::ALL.iter().map(move |&b| (a, b)))
        .filter(|&pair| pair != (Pauli::I, Pauli::I))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dressing {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "-y")]
    MinusY,
    #[serde(rename = "z")]
    Z,
    #[serde(rename = "-z")]
    MinusZ,
    I,
}

impl Dressing {
    pub const ALL: [Dressing; 7] = [
        Dressing::X,
        Dressing::MinusX,
        Dressing::Y,
        Dressing::MinusY,
        Dressing::Z,
        Dressing::MinusZ,
        Dressing::I,
    ];

    /// R_ζ(π). A negated axis is the same pulse with φ advanced by π; I emits nothing.
    pub fn gate(self, qubit: Ion) -> Option<GateOp> {
        match self {
            Dressing::X => Some(GateOp::Rx { theta: PI, qubit }),
            Dressing::MinusX => Some(GateOp::Rphi { theta: PI, phi: PI, qubit }),
            Dressing::Y => Some(GateOp::Ry { theta: PI, qubit }),
            Dressing::MinusY => Some(GateOp::Rphi {
                theta: PI,
                phi: FRAC_PI_2 + PI,
                qubit,
            }),
            Dressing::Z => Some(GateOp::Rz { theta: PI, qubit }),
            Dressing::MinusZ => Some(GateOp::Rz { theta: -PI, qubit }),
            Dressing::I => None,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Dressing::ALL[rng.random_range(0..Dressing::ALL.len())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CbConfig {
    #[serde(default = "default_m1")]
    pub m1: usize,
    #[serde(default = "default_m2")]
    pub m2: usize,
    /// Dressing randomizations per basis.
    #[serde(default = "default_l")]
    pub l: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_m1() -> usize {
    4
}

fn default_m2() -> usize {
    8
}

fn default_l() -> usize {
    1
}

impl Default for CbConfig {
    fn default() -> Self {
        CbConfig {
            m1: default_m1(),
            m2: default_m2(),
            l: default_l(),
            seed: 0,
        }
    }
}

impl CbConfig {
    /// Every violated constraint as (field, message).
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (name, m) in [("m1", self.m1), ("m2", self.m2)] {
            if m % 4 != 0 {
                out.push((
                    name.to_string(),
                    format!("entangling-gate counts are fixed to multiples of 4 so that MS^m = I, got {m}"),
                ));
            }
        }
        if self.m1 >= self.m2 {
            out.push(("m2".into(), format!("must exceed m1 ({} >= {})", self.m1, self.m2)));
        }
        if self.l == 0 {
            out.push(("l".into(), "at least one randomization per basis is required".into()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().first() {
            None => Ok(()),
            Some((field, msg)) => Err(Error::InvalidConfig(format!("{field}: {msg}"))),
        }
    }

    pub fn depths(&self) -> [usize; 2] {
        [self.m1, self.m2]
    }

    pub fn circuit_count(&self) -> usize {
        basis_set().len() * 2 * self.l
    }
}

/// A generated benchmarking circuit. `l` counts from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbCircuit {
    pub p1: Pauli,
    pub p2: Pauli,
    pub m: usize,
    pub l: usize,
    pub dressings: Vec<[Dressing; 2]>,
    pub recovery: [Option<GateOp>; 2],
    pub circuit: Circuit,
}

/// Basis rotations, then `m` cycles of (dressing pair, MS), then recovery.
pub fn generate_cb_circuits<R: Rng + ?Sized>(config: &CbConfig, rng: &mut R) -> Result<Vec<CbCircuit>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.circuit_count());
    for (p1, p2) in basis_set() {
        for m in config.depths() {
            for l in 1..=config.l {
                let mut circuit = Circuit::default();
                for (p, ion) in [(p1, Ion::One), (p2, Ion::Two)] {
                    circuit.ops.extend(p.input_rotation(ion));
                }
                let mut dressings = Vec::with_capacity(m);
                for _ in 0..m {
                    let pair = [Dressing::random(rng), Dressing::random(rng)];
                    circuit.ops.extend(pair[0].gate(Ion::One));
                    circuit.ops.extend(pair[1].gate(Ion::Two));
                    circuit.push(GateOp::Ms);
                    dressings.push(pair);
                }
                let recovery = compute_recovery_rotations(&circuit)?;
                circuit.ops.extend(recovery.iter().flatten());
                out.push(CbCircuit {
                    p1,
                    p2,
                    m,
                    l,
                    dressings,
                    recovery,
                    circuit,
                });
            }
        }
    }
    Ok(out)
}

fn recovery_candidates(qubit: Ion) -> [Option<GateOp>; 6] {
    [
        None,
        Some(GateOp::Rx { theta: PI, qubit }),
        Some(GateOp::Rx { theta: FRAC_PI_2, qubit }),
        Some(GateOp::Rx { theta: -FRAC_PI_2, qubit }),
        Some(GateOp::Ry { theta: FRAC_PI_2, qubit }),
        Some(GateOp::Ry { theta: -FRAC_PI_2, qubit }),
    ]
}

fn single_matrix(op: &GateOp) -> Mat2 {
    match *op {
        GateOp::Rx { theta, .. } => rx(theta),
        GateOp::Ry { theta, .. } => ry(theta),
        _ => unreachable!("recovery alphabet holds x and y rotations only"),
    }
}

/// Per-ion rotations taking the ideal output of `circuit` to |↑↑⟩. The
/// alphabet is the identity, R_x(π) and R_{x,y}(±π/2).
pub fn compute_recovery_rotations(circuit: &Circuit) -> Result<[Option<GateOp>; 2]> {
    circuit.validate()?;
    let ms = circuit.ms_count();
    if ms % 2 != 0 {
        return Err(Error::OddEntanglerCount(ms));
    }
    let state = TwoQubitState::up_up().apply(&circuit.ideal_unitary())?;
    let mut out = [None, None];
    for ion in Ion::BOTH {
        let purity = state.marginal_purity(ion);
        if purity < 1.0 - SEPARABILITY_TOL {
            return Err(Error::NotSeparable { purity });
        }
        let rho = state.reduced_density(ion);
        let found = recovery_candidates(ion).into_iter().find(|candidate| {
            let rotated = match candidate {
                Some(op) => {
                    let u = single_matrix(op);
                    u * rho * u.adjoint()
                }
                None => rho,
            };
            (rotated[(0, 0)] - rotated[(1, 1)]).re >= 1.0 - RECOVERY_TOL
        });
        match found {
            Some(op) => out[ion.index()] = op,
            None => {
                let b = state.reduced_bloch(ion);
                return Err(Error::UnreachableMarginal {
                    ion: ion.number(),
                    x: b.x,
                    y: b.y,
                    z: b.z,
                });
            }
        }
    }
    Ok(out)
}

/// One measured f_{P,m,l}: the two-ion-bright fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbRecord {
    #[serde(rename = "P1")]
    pub p1: Pauli,
    #[serde(rename = "P2")]
    pub p2: Pauli,
    pub m: usize,
    pub l: usize,
    pub f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<BrightHistogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisTerm {
    #[serde(rename = "P1")]
    pub p1: Pauli,
    #[serde(rename = "P2")]
    pub p2: Pauli,
    /// (Σ_l f_{m₂} / Σ_l f_{m₁})^{1/(m₂−m₁)}.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeFidelity {
    pub f: f64,
    pub terms: Vec<BasisTerm>,
    /// Bases dropped because Σ_l f_{m₁} vanished.
    pub excluded: Vec<(Pauli, Pauli)>,
}

/// Sum in ascending value order, so relabelling l leaves the result bit-identical.
fn ordered_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// F = mean over bases of (Σ_l f_{P,m₂,l} / Σ_l f_{P,m₁,l})^{1/(m₂−m₁)}.
/// Bases with a vanishing m₁ sum are excluded and the mean runs over the rest.
pub fn estimate_composite_fidelity(records: &[CbRecord], config: &CbConfig) -> Result<CompositeFidelity> {
    config.validate()?;
    let mut table: BTreeMap<(Pauli, Pauli, usize, usize), f64> = BTreeMap::new();
    for r in records {
        if !(0.0..=1.0).contains(&r.f) {
            return Err(Error::InvalidState(format!(
                "f({}{}, m={}, l={}) = {} lies outside [0, 1]",
                r.p1, r.p2, r.m, r.l, r.f
            )));
        }
        if table.insert((r.p1, r.p2, r.m, r.l), r.f).is_some() {
            return Err(Error::InvalidConfig(format!(
                "duplicate record for basis {}{}, m = {}, l = {}",
                r.p1, r.p2, r.m, r.l
            )));
        }
    }
    let exponent = 1.0 / (config.m2 - config.m1) as f64;
    let mut terms = Vec::new();
    let mut excluded = Vec::new();
    for (p1, p2) in basis_set() {
        let mut sums = [0.0; 2];
        for (slot, m) in config.depths().into_iter().enumerate() {
            let mut values = Vec::with_capacity(config.l);
            for l in 1..=config.l {
                match table.get(&(p1, p2, m, l)) {
                    Some(&f) => values.push(f),
                    None => {
                        return Err(Error::MissingResult {
                            basis: format!("{p1}{p2}"),
                            m,
                            l,
                        })
                    }
                }
            }
            sums[slot] = ordered_sum(values);
        }
        if sums[0] == 0.0 {
            log::warn!("basis {p1}{p2}: no m1 population, term excluded");
            excluded.push((p1, p2));
            continue;
        }
        terms.push(BasisTerm {
            p1,
            p2,
            value: (sums[1] / sums[0]).powf(exponent),
        });
    }
    if terms.is_empty() {
        return Err(Error::DegenerateEstimate);
    }
    let f = terms.iter().map(|t| t.value).sum::<f64>() / terms.len() as f64;
    Ok(CompositeFidelity { f, terms, excluded })
}

/// Standard deviation of F over parametric resamples of every histogram.
/// None when any record lacks shot counts.
pub fn bootstrap_sigma<R: Rng + ?Sized>(
    records: &[CbRecord],
    config: &CbConfig,
    resamples: usize,
    rng: &mut R,
) -> Option<f64> {
    if records.iter().any(|r| r.histogram.is_none_or(|h| h.shots == 0)) {
        return None;
    }
    let mut estimates = Vec::with_capacity(resamples);
    let mut resampled = records.to_vec();
    for _ in 0..resamples {
        for (out, r) in resampled.iter_mut().zip(records) {
            let h = r.histogram.expect("checked above");
            out.f = resample_count(h.n2, h.shots, rng) as f64 / h.shots as f64;
        }
        if let Ok(est) = estimate_composite_fidelity(&resampled, config) {
            estimates.push(est.f);
        }
    }
    Some(std_dev(&estimates))
}

/// Lowers (at the calibrated phase offset), minimizes transports and executes
/// every circuit. Sampled circuit i draws from stream i + 1 of `seed`.
pub fn measure_circuits(circuits: &[CbCircuit], sim: &Simulator, mode: SimMode, seed: u64) -> Result<Vec<CbRecord>> {
    circuits
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let program = minimize_transports(&lower(&c.circuit, sim.noise.phi_offset_rad)?);
            let (f, histogram) = match mode {
                SimMode::Exact => (sim.exact(&program)?.two, None),
                SimMode::Sampled { shots } => {
                    let mut rng = task_rng(seed, i as u64 + 1);
                    let h = sim.sample(&program, shots, &mut rng)?;
                    let f = if shots == 0 { 0.0 } else { h.n2 as f64 / shots as f64 };
                    (f, Some(h))
                }
            };
            Ok(CbRecord {
                p1: c.p1,
                p2: c.p2,
                m: c.m,
                l: c.l,
                f: f.clamp(0.0, 1.0),
                histogram,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbRun {
    pub config: CbConfig,
    pub records: Vec<CbRecord>,
    pub estimate: CompositeFidelity,
    /// Bootstrap σ of F; absent in exact mode.
    pub sigma: Option<f64>,
}

/// generate → lower → minimize transports → simulate → estimate.
/// Generation uses stream 0 of `config.seed`, the bootstrap the last stream.
pub fn run_cycle_benchmark(
    config: &CbConfig,
    sim: &Simulator,
    mode: SimMode,
    bootstrap_resamples: usize,
) -> Result<CbRun> {
    let circuits = generate_cb_circuits(config, &mut task_rng(config.seed, 0))?;
    let records = measure_circuits(&circuits, sim, mode, config.seed)?;
    let estimate = estimate_composite_fidelity(&records, config)?;
    let sigma = bootstrap_sigma(
        &records,
        config,
        bootstrap_resamples,
        &mut task_rng(config.seed, u64::MAX),
    );
    Ok(CbRun {
        config: *config,
        records,
        estimate,
        sigma,
    })
}
