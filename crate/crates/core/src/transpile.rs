//! Gate-level circuits, their lowering to native pulse programs, and
//! execution of those programs on the noisy register.
//!
//! Every single-ion pulse requires the crystal to sit in that ion's
//! addressing configuration, and every MS gate requires the gate
//! configuration. Switching costs a transport (~100 μs).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{ms_gate, r_phi, rx, ry, rz, rz_sequence, MsGateParams, SqGateParams};
use crate::noise::{
    apply_spam_and_detect, exact_bright_probs, noisy_ms, noisy_sq_pulse, BrightHistogram, BrightProbs, NoiseConfig,
};
use crate::quantum::{embed_unchecked, identity4, Ion, Mat4, TwoQubitState};
use crate::rng::task_rng;

pub const TRANSPORT_DURATION_S: f64 = 100e-6;

/// Rabi rates of the two addressing configurations, rad/s.
pub const DEFAULT_RABI_RATES: [f64; 2] = [2.0 * PI * 11.15e3, 2.0 * PI * 5.49e3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateOp {
    Rx { theta: f64, qubit: Ion },
    Ry { theta: f64, qubit: Ion },
    Rz { theta: f64, qubit: Ion },
    Rphi { theta: f64, phi: f64, qubit: Ion },
    Ms,
    Barrier,
}

impl GateOp {
    pub fn qubit(&self) -> Option<Ion> {
        match *self {
            GateOp::Rx { qubit, .. } | GateOp::Ry { qubit, .. } | GateOp::Rz { qubit, .. } | GateOp::Rphi { qubit, .. } => {
                Some(qubit)
            }
            GateOp::Ms | GateOp::Barrier => None,
        }
    }

    fn angles_finite(&self) -> bool {
        match *self {
            GateOp::Rx { theta, .. } | GateOp::Ry { theta, .. } | GateOp::Rz { theta, .. } => theta.is_finite(),
            GateOp::Rphi { theta, phi, .. } => theta.is_finite() && phi.is_finite(),
            GateOp::Ms | GateOp::Barrier => true,
        }
    }

    pub fn ideal_unitary(&self) -> Mat4 {
        match *self {
            GateOp::Rx { theta, qubit } => embed_unchecked(&rx(theta), qubit),
            GateOp::Ry { theta, qubit } => embed_unchecked(&ry(theta), qubit),
            GateOp::Rz { theta, qubit } => embed_unchecked(&rz(theta), qubit),
            GateOp::Rphi { theta, phi, qubit } => embed_unchecked(&r_phi(theta, phi), qubit),
            GateOp::Ms => ms_gate(&MsGateParams::default()),
            GateOp::Barrier => identity4(),
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateOp::Rx { theta, qubit } => write!(f, "RX {qubit} {theta}"),
            GateOp::Ry { theta, qubit } => write!(f, "RY {qubit} {theta}"),
            GateOp::Rz { theta, qubit } => write!(f, "RZ {qubit} {theta}"),
            GateOp::Rphi { theta, phi, qubit } => write!(f, "RPHI {qubit} {theta} {phi}"),
            GateOp::Ms => f.write_str("MS"),
            GateOp::Barrier => f.write_str("BARRIER"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(ops: Vec<GateOp>) -> Self {
        Circuit { ops }
    }

    pub fn push(&mut self, op: GateOp) {
        self.ops.push(op);
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ms_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, GateOp::Ms)).count()
    }

    pub fn validate(&self) -> Result<()> {
        match self.ops.iter().position(|op| !op.angles_finite()) {
            Some(index) => Err(Error::NonFiniteAngle { index }),
            None => Ok(()),
        }
    }

    /// Product of the ideal gate unitaries, first op applied first.
    pub fn ideal_unitary(&self) -> Mat4 {
        self.ops.iter().fold(identity4(), |acc, op| op.ideal_unitary() * acc)
    }

    pub fn to_text(&self) -> String {
        self.ops.iter().map(|op| format!("{op}\n")).collect()
    }
}

fn parse_qubit(token: &str, line: usize) -> Result<Ion> {
    match token.to_ascii_lowercase().as_str() {
        "q1" => Ok(Ion::One),
        "q2" => Ok(Ion::Two),
        _ => Err(Error::Parse {
            line,
            message: format!("expected qubit `q1` or `q2`, found `{token}`"),
        }),
    }
}

fn parse_angle(token: &str, line: usize) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("expected a finite angle, found `{token}`"),
        }),
    }
}

impl FromStr for Circuit {
    type Err = Error;

    /// One gate per line: `RX q1 3.14159`, `RY q2 1.5708`, `RZ q1 0.7`,
    /// `RPHI q1 <theta> <phi>`, `MS`, `BARRIER`. Blank lines and `#` comments are skipped.
    fn from_str(text: &str) -> Result<Self> {
        let mut ops = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let name = tokens[0].to_ascii_uppercase();
            let expected_args = match name.as_str() {
                "RX" | "RY" | "RZ" => 2,
                "RPHI" => 3,
                "MS" | "BARRIER" => 0,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown gate `{other}`"),
                    })
                }
            };
            if tokens.len() - 1 != expected_args {
                return Err(Error::Parse {
                    line,
                    message: format!("{name} takes {expected_args} argument(s), found {}", tokens.len() - 1),
                });
            }
            let op = match name.as_str() {
                "RX" => GateOp::Rx {
                    qubit: parse_qubit(tokens[1], line)?,
                    theta: parse_angle(tokens[2], line)?,
                },
                "RY" => GateOp::Ry {
                    qubit: parse_qubit(tokens[1], line)?,
                    theta: parse_angle(tokens[2], line)?,
                },
                "RZ" => GateOp::Rz {
                    qubit: parse_qubit(tokens[1], line)?,
                    theta: parse_angle(tokens[2], line)?,
                },
                "RPHI" => GateOp::Rphi {
                    qubit: parse_qubit(tokens[1], line)?,
                    theta: parse_angle(tokens[2], line)?,
                    phi: parse_angle(tokens[3], line)?,
                },
                "MS" => GateOp::Ms,
                _ => GateOp::Barrier,
            };
            ops.push(op);
        }
        Ok(Circuit { ops })
    }
}

/// Crystal configuration a transport moves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Configuration {
    Ion1,
    Ion2,
    Gate,
}

impl Configuration {
    pub fn addressing(ion: Ion) -> Self {
        match ion {
            Ion::One => Configuration::Ion1,
            Ion::Two => Configuration::Ion2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum NativeOp {
    SqPulse { ion: Ion, theta_rad: f64, phi_dds_rad: f64 },
    MsPulse,
    Transport { target: Configuration },
    Barrier,
}

impl NativeOp {
    fn required_configuration(&self) -> Option<Configuration> {
        match *self {
            NativeOp::SqPulse { ion, .. } => Some(Configuration::addressing(ion)),
            NativeOp::MsPulse => Some(Configuration::Gate),
            NativeOp::Transport { .. } | NativeOp::Barrier => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NativeProgram {
    pub ops: Vec<NativeOp>,
}

impl NativeProgram {
    pub fn transport_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, NativeOp::Transport { .. }))
            .count()
    }

    pub fn pulse_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, NativeOp::SqPulse { .. }))
            .count()
    }

    /// Checks that each pulse runs in the configuration it needs.
    pub fn validate(&self) -> Result<()> {
        let mut current = None;
        for (i, op) in self.ops.iter().enumerate() {
            match *op {
                NativeOp::Transport { target } => current = Some(target),
                NativeOp::SqPulse {
                    theta_rad, phi_dds_rad, ..
                } if !(theta_rad.is_finite() && phi_dds_rad.is_finite()) => {
                    return Err(Error::NonFiniteAngle { index: i });
                }
                _ => {}
            }
            if let Some(needed) = op.required_configuration() {
                if current != Some(needed) {
                    return Err(Error::InvalidConfig(format!(
                        "op {i} needs configuration {needed:?} but crystal is in {current:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ideal unitary with pulses played at physical phase φ_DDS + `phi_offset`.
    pub fn ideal_unitary(&self, phi_offset: f64) -> Mat4 {
        self.ops.iter().fold(identity4(), |acc, op| match *op {
            NativeOp::SqPulse {
                ion,
                theta_rad,
                phi_dds_rad,
            } => embed_unchecked(&r_phi(theta_rad, phi_dds_rad + phi_offset), ion) * acc,
            NativeOp::MsPulse => ms_gate(&MsGateParams::default()) * acc,
            NativeOp::Transport { .. } | NativeOp::Barrier => acc,
        })
    }

    /// Wall-clock length of the schedule in seconds.
    pub fn duration_s(&self, rabi_rates: [f64; 2], ms: &MsGateParams) -> f64 {
        self.ops
            .iter()
            .map(|op| match *op {
                NativeOp::SqPulse { ion, theta_rad, .. } => theta_rad.abs() / rabi_rates[ion.index()],
                NativeOp::MsPulse => ms.duration_s,
                NativeOp::Transport { .. } => TRANSPORT_DURATION_S,
                NativeOp::Barrier => 0.0,
            })
            .sum()
    }
}

/// Re-inserts transports in front of every op whose configuration differs from
/// the current one. Existing transports are dropped.
fn with_transports(ops: impl IntoIterator<Item = NativeOp>) -> NativeProgram {
    let mut out = Vec::new();
    let mut current = None;
    for op in ops {
        if matches!(op, NativeOp::Transport { .. }) {
            continue;
        }
        if let Some(needed) = op.required_configuration() {
            if current != Some(needed) {
                out.push(NativeOp::Transport { target: needed });
                current = Some(needed);
            }
        }
        out.push(op);
    }
    NativeProgram { ops: out }
}

fn sq(ion: Ion, theta: f64, phi_logical: f64, phi_offset: f64) -> NativeOp {
    NativeOp::SqPulse {
        ion,
        theta_rad: theta,
        phi_dds_rad: phi_logical - phi_offset,
    }
}

/// Lowers a circuit to native pulses. Rz becomes the three-pulse basis-change
/// sequence; pulse phases are shifted by −`phi_offset` so the physical axis
/// (φ_DDS + φ_offset) equals the logical one.
pub fn lower(circuit: &Circuit, phi_offset: f64) -> Result<NativeProgram> {
    circuit.validate()?;
    if !phi_offset.is_finite() {
        return Err(Error::InvalidConfig("phase offset must be finite".into()));
    }
    let mut ops = Vec::with_capacity(circuit.len() * 2);
    for op in &circuit.ops {
        match *op {
            GateOp::Rx { theta, qubit } => ops.push(sq(qubit, theta, 0.0, phi_offset)),
            GateOp::Ry { theta, qubit } => ops.push(sq(qubit, theta, FRAC_PI_2, phi_offset)),
            GateOp::Rphi { theta, phi, qubit } => ops.push(sq(qubit, theta, phi, phi_offset)),
            GateOp::Rz { theta, qubit } => {
                ops.extend(rz_sequence(theta).iter().map(|r| sq(qubit, r.theta, r.phi, phi_offset)));
            }
            GateOp::Ms => ops.push(NativeOp::MsPulse),
            GateOp::Barrier => ops.push(NativeOp::Barrier),
        }
    }
    Ok(with_transports(ops))
}

/// Groups single-ion pulses by ion inside every block delimited by MS pulses
/// and barriers. Pulses on different ions commute, so only their interleaving
/// changes; the per-ion order is kept. Which ion of a mixed block goes first
/// is chosen by dynamic programming over all blocks, since the ion a block
/// ends on can save a transport in the block after a barrier. Among equally
/// short programs, the ion already addressed goes first, otherwise the ion of
/// the block's first pulse.
pub fn minimize_transports(program: &NativeProgram) -> NativeProgram {
    // Blocks of pulses, each followed by its delimiter (None after the last).
    let mut blocks: Vec<(Vec<NativeOp>, Option<NativeOp>)> = vec![(Vec::new(), None)];
    for op in &program.ops {
        match *op {
            NativeOp::SqPulse { .. } => blocks.last_mut().expect("non-empty").0.push(*op),
            NativeOp::Transport { .. } => {}
            NativeOp::MsPulse | NativeOp::Barrier => {
                blocks.last_mut().expect("non-empty").1 = Some(*op);
                blocks.push((Vec::new(), None));
            }
        }
    }
    let ion_of = |op: &NativeOp| match op {
        NativeOp::SqPulse { ion, .. } => *ion,
        _ => unreachable!("blocks only hold single-ion pulses"),
    };

    // States are configurations before a block: None / Ion1 / Ion2 / Gate.
    const STATES: [Option<Configuration>; 4] = [
        None,
        Some(Configuration::Ion1),
        Some(Configuration::Ion2),
        Some(Configuration::Gate),
    ];
    let slot = |c: Option<Configuration>| STATES.iter().position(|s| *s == c).expect("known state");
    // Transports spent on a block and its delimiter, and the configuration after.
    let step = |state: Option<Configuration>, (pulses, delimiter): &(Vec<NativeOp>, Option<NativeOp>), first: Option<Ion>| {
        let mut conf = state;
        let mut moves = 0;
        if let Some(first) = first {
            for ion in [first, first.other()] {
                let needed = Some(Configuration::addressing(ion));
                if pulses.iter().any(|op| ion_of(op) == ion) && conf != needed {
                    moves += 1;
                    conf = needed;
                }
            }
        }
        if matches!(delimiter, Some(NativeOp::MsPulse)) {
            moves += usize::from(conf != Some(Configuration::Gate));
            conf = Some(Configuration::Gate);
        }
        (moves, conf)
    };
    // First-ion choices, preferred one first.
    let options = |state: Option<Configuration>, pulses: &[NativeOp]| -> Vec<Option<Ion>> {
        let present = |ion: Ion| pulses.iter().any(|op| ion_of(op) == ion);
        let preferred = match state {
            Some(Configuration::Ion1) if present(Ion::One) => Some(Ion::One),
            Some(Configuration::Ion2) if present(Ion::Two) => Some(Ion::Two),
            _ => pulses.first().map(ion_of),
        };
        match preferred {
            Some(ion) if present(ion.other()) => vec![Some(ion), Some(ion.other())],
            other => vec![other],
        }
    };

    // togo[b][s]: fewest transports from block b onwards, entering in state s.
    let mut togo = vec![[0usize; 4]; blocks.len() + 1];
    for b in (0..blocks.len()).rev() {
        for (i, &state) in STATES.iter().enumerate() {
            togo[b][i] = options(state, &blocks[b].0)
                .into_iter()
                .map(|first| {
                    let (moves, end) = step(state, &blocks[b], first);
                    moves + togo[b + 1][slot(end)]
                })
                .min()
                .expect("at least one option");
        }
    }
    let mut state = None;
    let mut firsts = Vec::with_capacity(blocks.len());
    for (b, block) in blocks.iter().enumerate() {
        let target = togo[b][slot(state)];
        let (first, end) = options(state, &block.0)
            .into_iter()
            .map(|first| (first, step(state, block, first)))
            .find(|(_, (moves, end))| moves + togo[b + 1][slot(*end)] == target)
            .map(|(first, (_, end))| (first, end))
            .expect("an optimal option exists");
        firsts.push(first);
        state = end;
    }

    let mut reordered = Vec::with_capacity(program.ops.len());
    for ((pulses, delimiter), first) in blocks.into_iter().zip(firsts) {
        if let Some(first) = first {
            let (mut head, tail): (Vec<NativeOp>, Vec<NativeOp>) = pulses.into_iter().partition(|op| ion_of(op) == first);
            head.extend(tail);
            reordered.extend(head);
        }
        reordered.extend(delimiter);
    }
    with_transports(reordered)
}

/// Executes native programs on the noisy register, starting from |↑↑⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulator {
    pub noise: NoiseConfig,
    pub rabi_rates: [f64; 2],
    /// Probability of a z flip on each ion per transport.
    #[serde(default)]
    pub transport_dephasing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Exact,
    Sampled { shots: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimOutcome {
    Exact(BrightProbs),
    Sampled(BrightHistogram),
}

impl Simulator {
    pub fn new(noise: NoiseConfig, rabi_rates: [f64; 2]) -> Result<Self> {
        let sim = Simulator {
            noise,
            rabi_rates,
            transport_dephasing: 0.0,
        };
        sim.validate()?;
        Ok(sim)
    }

    pub fn ideal() -> Self {
        Simulator {
            noise: NoiseConfig::ideal(),
            rabi_rates: DEFAULT_RABI_RATES,
            transport_dephasing: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.rabi_rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "Rabi rates must be positive, got {:?}",
                self.rabi_rates
            )));
        }
        if !(0.0..=1.0).contains(&self.transport_dephasing) {
            return Err(Error::InvalidConfig(format!(
                "transport dephasing must lie in [0, 1], got {}",
                self.transport_dephasing
            )));
        }
        Ok(())
    }

    pub fn pulse_unitary(&self, ion: Ion, theta: f64, phi_dds: f64) -> Mat4 {
        let params = SqGateParams {
            theta,
            phi: phi_dds + self.noise.phi_offset_rad,
            rabi_rate: self.rabi_rates[ion.index()],
        };
        noisy_sq_pulse(ion, &params, &self.noise)
    }

    pub fn evolve(&self, start: TwoQubitState, program: &NativeProgram) -> Result<TwoQubitState> {
        self.validate()?;
        program.validate()?;
        let mut state = start;
        for op in &program.ops {
            state = match *op {
                NativeOp::SqPulse {
                    ion,
                    theta_rad,
                    phi_dds_rad,
                } => state.apply_unchecked(&self.pulse_unitary(ion, theta_rad, phi_dds_rad)),
                NativeOp::MsPulse => noisy_ms(&state, &self.noise),
                NativeOp::Transport { .. } => Ion::BOTH
                    .iter()
                    .fold(state, |s, &ion| s.dephase(ion, self.transport_dephasing)),
                NativeOp::Barrier => state,
            };
        }
        Ok(state)
    }

    pub fn final_state(&self, program: &NativeProgram) -> Result<TwoQubitState> {
        self.evolve(TwoQubitState::up_up(), program)
    }

    pub fn exact(&self, program: &NativeProgram) -> Result<BrightProbs> {
        Ok(exact_bright_probs(&self.final_state(program)?, &self.noise))
    }

    pub fn sample<R: Rng + ?Sized>(&self, program: &NativeProgram, shots: u64, rng: &mut R) -> Result<BrightHistogram> {
        let state = self.final_state(program)?;
        Ok(apply_spam_and_detect(&state, &self.noise, shots, rng))
    }

    /// Runs in the requested mode; sampling draws from the stream seeded by `noise.seed`.
    pub fn simulate(&self, program: &NativeProgram, mode: SimMode) -> Result<SimOutcome> {
        match mode {
            SimMode::Exact => Ok(SimOutcome::Exact(self.exact(program)?)),
            SimMode::Sampled { shots } => {
                let mut rng = task_rng(self.noise.seed, 0);
                Ok(SimOutcome::Sampled(self.sample(program, shots, &mut rng)?))
            }
        }
    }
}
