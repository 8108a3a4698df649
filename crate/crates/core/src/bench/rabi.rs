//! Single-ion Rabi flopping seen through global fluorescence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::binomial_sigma;
use crate::error::{Error, Result};
use crate::noise::NoiseConfig;
use crate::quantum::Ion;
use crate::rng::task_rng;
use crate::transpile::{Configuration, NativeOp, NativeProgram, SimMode, Simulator, DEFAULT_RABI_RATES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiPoint {
    pub t_s: f64,
    pub p2bright: f64,
    pub p1bright: f64,
    pub p0bright: f64,
    /// Binomial σ of `p2bright`; NaN in exact mode.
    pub p2_sigma: f64,
}

/// Drives `addressed` from |↑↑⟩ for each duration in `t_grid`.
/// Point i samples from stream i of `seed`.
pub fn rabi_flop_experiment(
    t_grid: &[f64],
    addressed: Ion,
    rabi_rate: f64,
    noise: &NoiseConfig,
    mode: SimMode,
    seed: u64,
) -> Result<Vec<RabiPoint>> {
    if !(rabi_rate > 0.0) || !rabi_rate.is_finite() {
        return Err(Error::InvalidConfig(format!("Rabi rate must be positive, got {rabi_rate}")));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidConfig(format!("pulse durations must be finite and non-negative, got {t}")));
    }
    let mut rates = DEFAULT_RABI_RATES;
    rates[addressed.index()] = rabi_rate;
    let sim = Simulator::new(noise.clone(), rates)?;
    t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let program = NativeProgram {
                ops: vec![
                    NativeOp::Transport {
                        target: Configuration::addressing(addressed),
                    },
                    NativeOp::SqPulse {
                        ion: addressed,
                        theta_rad: rabi_rate * t,
                        phi_dds_rad: -noise.phi_offset_rad,
                    },
                ],
            };
            match mode {
                SimMode::Exact => {
                    let p = sim.exact(&program)?;
                    Ok(RabiPoint {
                        t_s: t,
                        p2bright: p.two,
                        p1bright: p.one,
                        p0bright: p.zero,
                        p2_sigma: f64::NAN,
                    })
                }
                SimMode::Sampled { shots } => {
                    let h = sim.sample(&program, shots, &mut task_rng(seed, i as u64))?;
                    let f = h
                        .frequencies()
                        .ok_or_else(|| Error::InvalidConfig("Rabi scan needs at least one shot".into()))?;
                    Ok(RabiPoint {
                        t_s: t,
                        p2bright: f.two,
                        p1bright: f.one,
                        p0bright: f.zero,
                        p2_sigma: binomial_sigma(h.n2, shots),
                    })
                }
            }
        })
        .collect()
}

/// Indices of interior local maxima (strictly above the left neighbour, not
/// below the right one).
pub fn local_maxima(series: &[f64]) -> Vec<usize> {
    (1..series.len().saturating_sub(1))
        .filter(|&i| series[i] > series[i - 1] && series[i] >= series[i + 1])
        .collect()
}
