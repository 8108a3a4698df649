//! Phase-offset calibration between the single-qubit drive and the MS frame.
//!
//! The probe state is (R_φ(π/2)⊗I)(I⊗R_φ(π/2))·MS|↑↑⟩. Its parity is
//! −sin 2(φ_DDS + φ_offset), crossing zero with negative slope at
//! φ_DDS = −φ_offset. The offset is therefore only defined modulo π.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{resample_count, std_dev};
use crate::error::{Error, Result};
use crate::fit::{find_zero_crossing, Slope, ZeroCrossing, MIN_CROSSING_WINDOW};
use crate::noise::BrightHistogram;
use crate::quantum::{Ion, TwoQubitState};
use crate::rng::task_rng;
use crate::transpile::{Configuration, NativeOp, NativeProgram, SimMode, Simulator};

/// p↑↑ + p↓↓ − p↑↓ − p↓↑ of the state itself, without detection errors.
pub fn parity(state: &TwoQubitState) -> f64 {
    let p = state.populations();
    p[0] + p[3] - p[1] - p[2]
}

/// Native program preparing the parity probe at drive phase `phi_dds`.
pub fn parity_probe(phi_dds: f64) -> NativeProgram {
    let pulse = |ion| NativeOp::SqPulse {
        ion,
        theta_rad: FRAC_PI_2,
        phi_dds_rad: phi_dds,
    };
    NativeProgram {
        ops: vec![
            NativeOp::Transport {
                target: Configuration::Gate,
            },
            NativeOp::MsPulse,
            NativeOp::Transport {
                target: Configuration::Ion2,
            },
            pulse(Ion::Two),
            NativeOp::Transport {
                target: Configuration::Ion1,
            },
            pulse(Ion::One),
        ],
    }
}

/// `points` equally spaced phases covering [−π/2, π/2).
pub fn phase_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| -FRAC_PI_2 + PI * i as f64 / points as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityPoint {
    pub phi_dds_rad: f64,
    pub parity: f64,
    /// NaN in exact mode.
    pub sigma: f64,
    #[serde(skip)]
    pub histogram: Option<BrightHistogram>,
}

fn parity_sigma(even: u64, shots: u64) -> f64 {
    let q = (even as f64 + 1.0) / (shots as f64 + 2.0);
    2.0 * (q * (1.0 - q) / shots as f64).sqrt()
}

/// Detector-level parity over the grid. Grid point i samples from stream i.
pub fn parity_scan(grid: &[f64], sim: &Simulator, mode: SimMode, seed: u64) -> Result<Vec<ParityPoint>> {
    sim.validate()?;
    grid.par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            let program = parity_probe(phi);
            match mode {
                SimMode::Exact => Ok(ParityPoint {
                    phi_dds_rad: phi,
                    parity: sim.exact(&program)?.parity(),
                    sigma: f64::NAN,
                    histogram: None,
                }),
                SimMode::Sampled { shots } => {
                    if shots == 0 {
                        return Err(Error::InvalidConfig("parity scan needs at least one shot".into()));
                    }
                    let h = sim.sample(&program, shots, &mut task_rng(seed, i as u64))?;
                    let even = h.n0 + h.n2;
                    Ok(ParityPoint {
                        phi_dds_rad: phi,
                        parity: 2.0 * even as f64 / shots as f64 - 1.0,
                        sigma: parity_sigma(even, shots),
                        histogram: Some(h),
                    })
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCalibration {
    /// −(negative-slope crossing), rad.
    pub phi_offset_rad: f64,
    /// From the local line-fit covariance.
    pub sigma_fit_rad: f64,
    /// Spread over parametric resamples of the shot histograms.
    pub sigma_bootstrap_rad: Option<f64>,
    pub crossing: ZeroCrossing,
    pub scan: Vec<ParityPoint>,
}

fn crossing_of(scan: &[ParityPoint], weighted: bool) -> Result<ZeroCrossing> {
    let x: Vec<f64> = scan.iter().map(|p| p.phi_dds_rad).collect();
    let y: Vec<f64> = scan.iter().map(|p| p.parity).collect();
    let sigma: Option<Vec<f64>> = weighted.then(|| scan.iter().map(|p| p.sigma).collect());
    find_zero_crossing(&x, &y, sigma.as_deref(), Slope::Negative, MIN_CROSSING_WINDOW)
}

/// Scans the probe parity over `grid` with the simulator's injected offset
/// and reads the offset off the negative-slope zero crossing.
pub fn calibrate_phase_offset(
    grid: &[f64],
    sim: &Simulator,
    mode: SimMode,
    seed: u64,
    bootstrap_resamples: usize,
) -> Result<PhaseCalibration> {
    let n = grid.len();
    if n < MIN_CROSSING_WINDOW {
        return Err(Error::InvalidConfig(format!(
            "phase grid needs at least {MIN_CROSSING_WINDOW} points, got {n}"
        )));
    }
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let coverage = (hi - lo) * n as f64 / (n - 1) as f64;
    if !(coverage >= PI * (1.0 - 1e-9)) {
        return Err(Error::InvalidConfig(format!(
            "phase grid must span one parity period (π rad), covers {coverage}"
        )));
    }
    let scan = parity_scan(grid, sim, mode, seed)?;
    let weighted = matches!(mode, SimMode::Sampled { .. });
    let crossing = crossing_of(&scan, weighted)?;

    let sigma_bootstrap_rad = match mode {
        SimMode::Exact => None,
        SimMode::Sampled { .. } if bootstrap_resamples == 0 => None,
        SimMode::Sampled { .. } => {
            let mut rng = task_rng(seed, u64::MAX);
            let mut resampled = scan.clone();
            let mut roots = Vec::with_capacity(bootstrap_resamples);
            for _ in 0..bootstrap_resamples {
                for (out, p) in resampled.iter_mut().zip(&scan) {
                    let h = p.histogram.expect("sampled points carry histograms");
                    let even = resample_count(h.n0 + h.n2, h.shots, &mut rng);
                    out.parity = 2.0 * even as f64 / h.shots as f64 - 1.0;
                    out.sigma = parity_sigma(even, h.shots);
                }
                if let Ok(c) = crossing_of(&resampled, true) {
                    roots.push(c.x0);
                }
            }
            Some(std_dev(&roots))
        }
    };
    Ok(PhaseCalibration {
        phi_offset_rad: -crossing.x0,
        sigma_fit_rad: crossing.sigma,
        sigma_bootstrap_rad,
        crossing,
        scan,
    })
}
