//! Closed-form native gates of the register and micromotion-sideband physics.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{identity2, identity4, kron, sigma_x, sigma_y, sigma_z, Mat2, Mat4, C64, I};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Rotation by `theta` about the equatorial axis at azimuth `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub theta: f64,
    pub phi: f64,
}

impl Rotation {
    pub fn x(theta: f64) -> Self {
        Rotation { theta, phi: 0.0 }
    }

    pub fn y(theta: f64) -> Self {
        Rotation { theta, phi: FRAC_PI_2 }
    }

    pub fn matrix(&self) -> Mat2 {
        r_phi(self.theta, self.phi)
    }
}

/// A resonant single-ion pulse: rotation angle, axis azimuth and the Rabi rate
/// that sets its duration t = |θ|/Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqGateParams {
    pub theta: f64,
    pub phi: f64,
    pub rabi_rate: f64,
}

impl SqGateParams {
    pub fn new(theta: f64, phi: f64, rabi_rate: f64) -> Result<Self> {
        if !(rabi_rate > 0.0) || !rabi_rate.is_finite() {
            return Err(Error::InvalidConfig(format!("Rabi rate must be positive, got {rabi_rate}")));
        }
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::NonFiniteAngle { index: 0 });
        }
        Ok(SqGateParams { theta, phi, rabi_rate })
    }

    /// Pulse of length `t` at Rabi rate Ω, i.e. θ = Ω·t.
    pub fn from_duration(rabi_rate: f64, duration: f64, phi: f64) -> Result<Self> {
        if duration < 0.0 {
            return Err(Error::InvalidConfig(format!("pulse duration must be non-negative, got {duration}")));
        }
        Self::new(rabi_rate * duration, phi, rabi_rate)
    }

    pub fn pi_time(&self) -> f64 {
        PI / self.rabi_rate
    }

    pub fn duration(&self) -> f64 {
        self.theta.abs() / self.rabi_rate
    }
}

/// Mølmer–Sørensen gate parameters. Duration and detuning are schedule metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsGateParams {
    pub duration_s: f64,
    pub detuning_rad_per_s: f64,
    pub phase_red_rad: f64,
    pub phase_blue_rad: f64,
}

impl Default for MsGateParams {
    fn default() -> Self {
        MsGateParams {
            duration_s: 1150e-6,
            detuning_rad_per_s: 2.0 * PI * 1.82e3,
            phase_red_rad: 0.0,
            phase_blue_rad: 0.0,
        }
    }
}

impl MsGateParams {
    pub fn mean_phase(&self) -> f64 {
        0.5 * (self.phase_red_rad + self.phase_blue_rad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicromotionParams {
    /// B′, T/m.
    pub gradient_t_per_m: f64,
    /// |r_MM|, m.
    pub amplitude_m: f64,
    /// μ, J/T.
    pub matrix_element_j_per_t: f64,
}

impl MicromotionParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gradient_t_per_m", self.gradient_t_per_m),
            ("amplitude_m", self.amplitude_m),
            ("matrix_element_j_per_t", self.matrix_element_j_per_t),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// R_φ(θ) = exp(−i(θ/2)(cos φ σx + sin φ σy)).
pub fn r_phi(theta: f64, phi: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let off = C64::from_polar(s, -phi) * -I;
    // [[c, −i s e^{−iφ}], [−i s e^{iφ}, c]]
    Mat2::new(C64::new(c, 0.0), off, C64::from_polar(s, phi) * -I, C64::new(c, 0.0))
}

pub fn rx(theta: f64) -> Mat2 {
    r_phi(theta, 0.0)
}

pub fn ry(theta: f64) -> Mat2 {
    r_phi(theta, FRAC_PI_2)
}

/// exp(−i(θ/2)σz).
pub fn rz(theta: f64) -> Mat2 {
    let h = theta / 2.0;
    Mat2::new(C64::from_polar(1.0, -h), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from_polar(1.0, h))
}

/// Propagator of a detuned drive: exp(−i(t/2)(Ω cos φ σx + Ω sin φ σy + Δ σz)).
pub fn generalized_rabi(omega: f64, delta: f64, phi: f64, t: f64) -> Mat2 {
    let gen = (omega * omega + delta * delta).sqrt();
    if gen == 0.0 || t == 0.0 {
        return identity2();
    }
    let (s, c) = (gen * t / 2.0).sin_cos();
    let (nx, ny, nz) = (omega * phi.cos() / gen, omega * phi.sin() / gen, delta / gen);
    let n_sigma = sigma_x() * C64::new(nx, 0.0) + sigma_y() * C64::new(ny, 0.0) + sigma_z() * C64::new(nz, 0.0);
    identity2() * C64::new(c, 0.0) - n_sigma * (I * s)
}

/// Probability of leaving |↑⟩ under a detuned drive.
pub fn detuned_flip_probability(omega: f64, delta: f64, t: f64) -> f64 {
    let gen2 = omega * omega + delta * delta;
    if gen2 == 0.0 {
        return 0.0;
    }
    omega * omega / gen2 * (gen2.sqrt() * t / 2.0).sin().powi(2)
}

/// Stroboscopic MS propagator U = exp(−i Σ_jk Φ_jk σ^(j) σ^(k)) with
/// σ^(j) = ½(σx cos φ̄ − σy sin φ̄) on ion j, Φ_jj = +π/2 and Φ_{j≠k} = −π/2.
///
/// With s = σx cos φ̄ − σy sin φ̄ (s² = I) the generator collapses to
/// (π/2)(¼ + ¼)·I − (π/2)(¼ + ¼)·s⊗s = (π/4)·I − (π/4)·s⊗s, so
/// U = e^{−iπ/4}·exp(+i(π/4) s⊗s) = e^{−iπ/4}(I + i s⊗s)/√2.
/// At φ̄ = 0 this is R_xx(−π/2) = e^{−iπ/4}·e^{+i(π/4)σx⊗σx}: the ½ inside
/// σ^(j) and the ±π/2 phases together produce the π/4 exponent.
pub fn ms_gate(params: &MsGateParams) -> Mat4 {
    let phase = params.mean_phase();
    let s = sigma_x() * C64::new(phase.cos(), 0.0) - sigma_y() * C64::new(phase.sin(), 0.0);
    let ss = kron(&s, &s);
    (identity4() + ss * I) * (C64::from_polar(FRAC_1_SQRT_2, -FRAC_PI_4))
}

/// The MS generator Σ_jk Φ_jk σ^(j)σ^(k) built term by term.
pub fn ms_generator(params: &MsGateParams) -> Mat4 {
    let phase = params.mean_phase();
    let half = C64::new(0.5, 0.0);
    let single = (sigma_x() * C64::new(phase.cos(), 0.0) - sigma_y() * C64::new(phase.sin(), 0.0)) * half;
    let ops = [kron(&single, &identity2()), kron(&identity2(), &single)];
    let mut gen = Mat4::zeros();
    for (j, a) in ops.iter().enumerate() {
        for (k, b) in ops.iter().enumerate() {
            let geometric = if j == k { FRAC_PI_2 } else { -FRAC_PI_2 };
            gen += (a * b) * C64::new(geometric, 0.0);
        }
    }
    gen
}

/// Rz(θ) as three resonant pulses, listed in the order they are applied.
///
/// The basis-change identity reads R_z(θ) = R_y(−π/2) ∘ R_x(−θ) ∘ R_y(π/2)
/// when the listed operators are played left to right in time; with the
/// usual right-to-left reading the product is R_z(−θ) instead.
pub fn rz_sequence(theta: f64) -> [Rotation; 3] {
    [Rotation::y(-FRAC_PI_2), Rotation::x(-theta), Rotation::y(FRAC_PI_2)]
}

/// Composed unitary of a pulse list given in application order.
pub fn compose(rotations: &[Rotation]) -> Mat2 {
    rotations.iter().fold(identity2(), |acc, r| r.matrix() * acc)
}

/// Micromotion-sideband Rabi rate Ω_MM = ½·(B′/√2)·|r_MM|·μ/(2ħ), rad/s.
pub fn micromotion_rabi_rate(p: &MicromotionParams) -> f64 {
    0.5 * (p.gradient_t_per_m / SQRT_2) * p.amplitude_m * p.matrix_element_j_per_t / (2.0 * HBAR)
}

/// Micromotion amplitude needed to reach `rabi_rate` for a given gradient and matrix element.
pub fn micromotion_amplitude_for_rate(rabi_rate: f64, gradient_t_per_m: f64, matrix_element_j_per_t: f64) -> f64 {
    rabi_rate * 2.0 * HBAR * 2.0 * SQRT_2 / (gradient_t_per_m * matrix_element_j_per_t)
}
