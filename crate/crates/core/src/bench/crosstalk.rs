//! Cross-talk bounding with random π-pulse sequences on one addressed ion.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{binomial_sigma, std_dev};
use crate::error::{Error, Result};
use crate::noise::{exact_bright_probs, ion_bright_probability};
use crate::quantum::Ion;
use crate::rng::task_rng;
use crate::transpile::{lower, Circuit, GateOp, SimMode, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrosstalkMode {
    /// Both ions trapped; F̂ is the two-ion-bright fraction.
    #[default]
    TwoIon,
    /// Only the addressed ion is observed; F̂ is its bright fraction.
    SingleIon,
}

/// `n` π pulses on `addressed`, each about a uniformly random equatorial axis.
pub fn generate_crosstalk_sequence<R: Rng + ?Sized>(n: usize, addressed: Ion, rng: &mut R) -> Result<Circuit> {
    if n % 2 != 0 {
        return Err(Error::OddPulseCount(n));
    }
    Ok(Circuit::new(
        (0..n)
            .map(|_| GateOp::Rphi {
                theta: PI,
                phi: rng.random_range(0.0..2.0 * PI),
                qubit: addressed,
            })
            .collect(),
    ))
}

/// Spectator Rabi rate whose per-π-pulse rotation ε yields an effective
/// cross-talk `c`: averaging over random axes gives ⟨z_N⟩ = cos^N ε, and
/// cos ε = e^{−2C}.
pub fn spectator_rate_for_c(c: f64, addressed_rabi_rate: f64) -> f64 {
    (-2.0 * c).exp().acos() * addressed_rabi_rate / PI
}

/// Inverse of [`spectator_rate_for_c`].
pub fn effective_c(spectator_rate: f64, addressed_rabi_rate: f64) -> f64 {
    -(spectator_rate * PI / addressed_rabi_rate).cos().ln() / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosstalkConfig {
    pub n_values: Vec<usize>,
    #[serde(default = "default_sequences")]
    pub sequences_per_n: usize,
    #[serde(default = "default_addressed")]
    pub addressed: Ion,
    #[serde(default)]
    pub mode: CrosstalkMode,
}

fn default_sequences() -> usize {
    20
}

fn default_addressed() -> Ion {
    Ion::One
}

impl CrosstalkConfig {
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (i, n) in self.n_values.iter().enumerate() {
            if n % 2 != 0 {
                out.push((format!("n_values[{i}]"), format!("pulse counts must be even, got {n}")));
            }
        }
        if self.n_values.is_empty() {
            out.push(("n_values".into(), "at least one pulse count is required".into()));
        }
        if self.sequences_per_n == 0 {
            out.push(("sequences_per_n".into(), "must be at least 1".into()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().first() {
            None => Ok(()),
            Some((field, msg)) => Err(Error::InvalidConfig(format!("{field}: {msg}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkPoint {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "F")]
    pub f: f64,
    pub sigma: f64,
}

/// Survival estimate per pulse count, averaged over random sequences.
///
/// σ is the standard error across sequences, which carries both shot noise
/// and the sequence-to-sequence spread; in sampled mode it is floored at the
/// pooled binomial σ. Sequence s at grid index i uses streams 2(iS+s) for the
/// axes and 2(iS+s)+1 for detection.
pub fn run_crosstalk_experiment(
    config: &CrosstalkConfig,
    sim: &Simulator,
    mode: SimMode,
    seed: u64,
) -> Result<Vec<CrosstalkPoint>> {
    config.validate()?;
    sim.validate()?;
    let per_n = config.sequences_per_n;
    let tasks: Vec<(usize, usize)> = (0..config.n_values.len())
        .flat_map(|i| (0..per_n).map(move |s| (i, s)))
        .collect();
    let outcomes: Vec<(f64, u64, u64)> = tasks
        .par_iter()
        .map(|&(i, s)| {
            let task = (i * per_n + s) as u64;
            let circuit = generate_crosstalk_sequence(config.n_values[i], config.addressed, &mut task_rng(seed, 2 * task))?;
            let program = lower(&circuit, sim.noise.phi_offset_rad)?;
            let state = sim.final_state(&program)?;
            let p = match config.mode {
                CrosstalkMode::TwoIon => exact_bright_probs(&state, &sim.noise).two,
                CrosstalkMode::SingleIon => ion_bright_probability(&state, config.addressed, &sim.noise),
            }
            .clamp(0.0, 1.0);
            Ok(match mode {
                SimMode::Exact => (p, 0, 0),
                SimMode::Sampled { shots } => {
                    let mut rng = task_rng(seed, 2 * task + 1);
                    let k = Binomial::new(shots, p).expect("p lies in [0, 1]").sample(&mut rng);
                    let f = if shots == 0 { 0.0 } else { k as f64 / shots as f64 };
                    (f, k, shots)
                }
            })
        })
        .collect::<Result<_>>()?;

    Ok(config
        .n_values
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let chunk = &outcomes[i * per_n..(i + 1) * per_n];
            let values: Vec<f64> = chunk.iter().map(|o| o.0).collect();
            let f = values.iter().sum::<f64>() / per_n as f64;
            let spread = if per_n > 1 { std_dev(&values) / (per_n as f64).sqrt() } else { 0.0 };
            let sigma = match mode {
                SimMode::Exact => spread,
                SimMode::Sampled { .. } => {
                    let k: u64 = chunk.iter().map(|o| o.1).sum();
                    let total: u64 = chunk.iter().map(|o| o.2).sum();
                    spread.max(binomial_sigma(k, total))
                }
            };
            CrosstalkPoint { n, f, sigma }
        })
        .collect())
}
