//! Imperfection mechanisms of the native operations and the global-fluorescence
//! detection model.
//!
//! Detection only resolves how many ions are bright (0, 1 or 2). SPAM is
//! modelled as an independent per-ion flip of the measured outcome; the lumped
//! survival p₀ = (1−ε₁)(1−ε₂) is derived from the two flip probabilities.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{generalized_rabi, ms_gate, MsGateParams, SqGateParams};
use crate::quantum::{embed_unchecked, Ion, Mat4, TwoQubitState};

/// Missing fields take the ideal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Δ^(k)_m in rad/s: row k is the addressed ion, column m the ion that is shifted.
    pub zeeman_shift_rad_per_s: [[f64; 2]; 2],
    /// Residual Rabi rate on the non-addressed ion, rad/s.
    pub omega_na_rad_per_s: f64,
    pub spam_eps1: f64,
    pub spam_eps2: f64,
    /// Depolarizing probability per MS gate.
    pub p_dep: f64,
    /// Phase offset between the single-qubit drive and the MS frame, rad.
    pub phi_offset_rad: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            zeeman_shift_rad_per_s: [[0.0; 2]; 2],
            omega_na_rad_per_s: 0.0,
            spam_eps1: 0.0,
            spam_eps2: 0.0,
            p_dep: 0.0,
            phi_offset_rad: 0.0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn ideal() -> Self {
        Self::default()
    }

    /// Every violated constraint, as (field, message).
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut prob = |name: &str, v: f64| {
            if !(0.0..=1.0).contains(&v) {
                out.push((name.to_string(), format!("must lie in [0, 1], got {v}")));
            }
        };
        prob("spam_eps1", self.spam_eps1);
        prob("spam_eps2", self.spam_eps2);
        prob("p_dep", self.p_dep);
        if !(self.omega_na_rad_per_s >= 0.0) || !self.omega_na_rad_per_s.is_finite() {
            out.push((
                "omega_na_rad_per_s".into(),
                format!("must be finite and non-negative, got {}", self.omega_na_rad_per_s),
            ));
        }
        if !self.phi_offset_rad.is_finite() {
            out.push(("phi_offset_rad".into(), "must be finite".into()));
        }
        for (k, row) in self.zeeman_shift_rad_per_s.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    out.push((format!("zeeman_shift_rad_per_s[{k}][{m}]"), "must be finite".into()));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().first() {
            None => Ok(()),
            Some((field, msg)) => Err(Error::InvalidNoise(format!("{field}: {msg}"))),
        }
    }

    pub fn spam(&self, ion: Ion) -> f64 {
        match ion {
            Ion::One => self.spam_eps1,
            Ion::Two => self.spam_eps2,
        }
    }

    /// Δ^(k)_m for addressed ion `k` and shifted ion `m`.
    pub fn zeeman_shift(&self, addressed: Ion, shifted: Ion) -> f64 {
        self.zeeman_shift_rad_per_s[addressed.index()][shifted.index()]
    }

    /// p₀ = (1−ε₁)(1−ε₂).
    pub fn p0(&self) -> f64 {
        (1.0 - self.spam_eps1) * (1.0 - self.spam_eps2)
    }

    pub fn with_symmetric_spam(mut self, eps: f64) -> Self {
        self.spam_eps1 = eps;
        self.spam_eps2 = eps;
        self
    }
}

/// Register unitary of a single-ion pulse on `addressed`, including the ac-Zeeman
/// shift on both ions and the residual drive on the spectator.
///
/// Negative rotation angles are played as |θ| with the drive phase advanced by π.
pub fn noisy_sq_pulse(addressed: Ion, params: &SqGateParams, noise: &NoiseConfig) -> Mat4 {
    let t = params.duration();
    let phi = if params.theta < 0.0 { params.phi + PI } else { params.phi };
    let spectator = addressed.other();
    let driven = generalized_rabi(params.rabi_rate, noise.zeeman_shift(addressed, addressed), phi, t);
    let idle = generalized_rabi(noise.omega_na_rad_per_s, noise.zeeman_shift(addressed, spectator), phi, t);
    embed_unchecked(&driven, addressed) * embed_unchecked(&idle, spectator)
}

/// Ideal MS gate followed by two-qubit depolarization with probability `p_dep`.
pub fn noisy_ms(state: &TwoQubitState, noise: &NoiseConfig) -> TwoQubitState {
    state
        .apply_unchecked(&ms_gate(&MsGateParams::default()))
        .depolarize(noise.p_dep)
}

/// Probabilities of detecting two, one or zero bright ions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightProbs {
    pub two: f64,
    pub one: f64,
    pub zero: f64,
}

impl BrightProbs {
    pub fn sum(&self) -> f64 {
        self.two + self.one + self.zero
    }

    /// p↑↑ + p↓↓ − p(one bright), as seen through the detector.
    pub fn parity(&self) -> f64 {
        self.two + self.zero - self.one
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BrightHistogram {
    pub shots: u64,
    pub n0: u64,
    pub n1: u64,
    pub n2: u64,
}

impl BrightHistogram {
    pub fn frequencies(&self) -> Option<BrightProbs> {
        if self.shots == 0 {
            return None;
        }
        let n = self.shots as f64;
        Some(BrightProbs {
            two: self.n2 as f64 / n,
            one: self.n1 as f64 / n,
            zero: self.n0 as f64 / n,
        })
    }

    pub fn merge(&self, other: &BrightHistogram) -> BrightHistogram {
        BrightHistogram {
            shots: self.shots + other.shots,
            n0: self.n0 + other.n0,
            n1: self.n1 + other.n1,
            n2: self.n2 + other.n2,
        }
    }
}

fn bright_given(up: bool, eps: f64) -> f64 {
    if up {
        1.0 - eps
    } else {
        eps
    }
}

/// Exact detector-level outcome probabilities of `state` under SPAM.
pub fn exact_bright_probs(state: &TwoQubitState, noise: &NoiseConfig) -> BrightProbs {
    let pops = state.populations();
    let total: f64 = pops.iter().sum();
    let mut out = BrightProbs {
        two: 0.0,
        one: 0.0,
        zero: 0.0,
    };
    for (index, &p) in pops.iter().enumerate() {
        let p = p / total;
        let b1 = bright_given(index < 2, noise.spam_eps1);
        let b2 = bright_given(index % 2 == 0, noise.spam_eps2);
        out.two += p * b1 * b2;
        out.one += p * (b1 * (1.0 - b2) + (1.0 - b1) * b2);
        out.zero += p * (1.0 - b1) * (1.0 - b2);
    }
    out
}

/// Probability that `ion` alone is detected bright.
pub fn ion_bright_probability(state: &TwoQubitState, ion: Ion, noise: &NoiseConfig) -> f64 {
    let pops = state.populations();
    let up = match ion {
        Ion::One => pops[0] + pops[1],
        Ion::Two => pops[0] + pops[2],
    };
    let total: f64 = pops.iter().sum();
    let eps = noise.spam(ion);
    (up / total) * (1.0 - eps) + (1.0 - up / total) * eps
}

/// Shot-by-shot detection: draw a basis state, flip each ion's outcome with its
/// SPAM probability, bin by the number of bright ions.
pub fn apply_spam_and_detect<R: Rng + ?Sized>(
    state: &TwoQubitState,
    noise: &NoiseConfig,
    shots: u64,
    rng: &mut R,
) -> BrightHistogram {
    let pops = state.populations();
    let total: f64 = pops.iter().sum();
    let mut hist = BrightHistogram {
        shots,
        ..BrightHistogram::default()
    };
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut index = 3;
        for (i, &p) in pops.iter().enumerate() {
            acc += p;
            if u < acc {
                index = i;
                break;
            }
        }
        let mut bright = 0;
        for (ion_up, eps) in [(index < 2, noise.spam_eps1), (index % 2 == 0, noise.spam_eps2)] {
            let flipped = rng.random::<f64>() < eps;
            if ion_up != flipped {
                bright += 1;
            }
        }
        match bright {
            0 => hist.n0 += 1,
            1 => hist.n1 += 1,
            _ => hist.n2 += 1,
        }
    }
    hist
}

/// Survival of the spectator after `n` addressed pulses:
/// F = ½(1 + (2p₀−1)·e^{−2Cn}).
pub fn crosstalk_fidelity_model(n: f64, c: f64, p0: f64) -> f64 {
    0.5 * (1.0 + (2.0 * p0 - 1.0) * (-2.0 * c * n).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{detuned_flip_probability, r_phi};
    use crate::quantum::{embed_single, max_entry_distance4, sigma_x, Ket4, C64, I, ZERO};
    use crate::rng::task_rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell() -> TwoQubitState {
        TwoQubitState::Pure(Ket4::new(
            C64::new(FRAC_1_SQRT_2, 0.0),
            ZERO,
            ZERO,
            C64::new(0.0, FRAC_1_SQRT_2),
        ))
    }

    #[test]
    fn ideal_pi_pulse_on_ion_one() {
        let p = SqGateParams::new(PI, 0.0, 2.0 * PI * 11.15e3).unwrap();
        let u = noisy_sq_pulse(Ion::One, &p, &NoiseConfig::ideal());
        let expected = embed_single(&(sigma_x() * -I), Ion::One).unwrap();
        assert!(max_entry_distance4(&u, &expected) < 1e-12);
    }

    #[test]
    fn spectator_sees_pure_z_phase() {
        let omega = 2.0 * PI * 11.15e3;
        let delta = 2.0 * PI * 500.0;
        let mut noise = NoiseConfig::ideal();
        noise.zeeman_shift_rad_per_s[0][1] = delta;
        let p = SqGateParams::new(1.3, 0.4, omega).unwrap();
        let t = p.duration();
        let u = noisy_sq_pulse(Ion::One, &p, &noise);
        let spectator = crate::gates::rz(delta * t);
        let expected = crate::quantum::kron(&r_phi(1.3, 0.4), &spectator);
        assert!(max_entry_distance4(&u, &expected) < 1e-12);
    }

    #[test]
    fn addressed_detuning_reduces_flip() {
        let omega = 2.0 * PI * 11.15e3;
        let mut noise = NoiseConfig::ideal();
        noise.zeeman_shift_rad_per_s[0][0] = omega;
        let p = SqGateParams::new(PI, 0.0, omega).unwrap();
        let out = TwoQubitState::up_up()
            .apply(&noisy_sq_pulse(Ion::One, &p, &noise))
            .unwrap();
        let flipped = out.populations()[2];
        let expected = 0.5 * (PI / 2f64.sqrt()).sin().powi(2);
        assert!((flipped - expected).abs() < 1e-12);
        assert!((flipped - detuned_flip_probability(omega, omega, PI / omega)).abs() < 1e-12);
    }

    #[test]
    fn negative_angles_match_ideal_rotation() {
        let p = SqGateParams::new(-0.9, 0.3, 5.0).unwrap();
        let u = noisy_sq_pulse(Ion::Two, &p, &NoiseConfig::ideal());
        let expected = embed_single(&r_phi(-0.9, 0.3), Ion::Two).unwrap();
        assert!(max_entry_distance4(&u, &expected) < 1e-12);
    }

    #[test]
    fn depolarizing_ms_limits() {
        let ideal = noisy_ms(&TwoQubitState::up_up(), &NoiseConfig::ideal());
        assert!((ideal.purity() - 1.0).abs() < 1e-12);
        let mut noise = NoiseConfig::ideal();
        noise.p_dep = 1.0;
        let mixed = noisy_ms(&TwoQubitState::up_up(), &noise);
        assert!((mixed.purity() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_ms_fidelity() {
        let ideal = noisy_ms(&TwoQubitState::up_up(), &NoiseConfig::ideal());
        let TwoQubitState::Pure(target) = ideal else { panic!() };
        let mut noise = NoiseConfig::ideal();
        noise.p_dep = 0.01;
        let out = noisy_ms(&TwoQubitState::up_up(), &noise);
        assert!((out.fidelity_with(&target) - 0.9925).abs() < 1e-12);
        out.validate().unwrap();
    }

    #[test]
    fn exact_probs_cases() {
        let p = exact_bright_probs(&TwoQubitState::basis(1), &NoiseConfig::ideal());
        assert_eq!((p.two, p.one, p.zero), (0.0, 1.0, 0.0));
        let p = exact_bright_probs(&bell(), &NoiseConfig::ideal());
        assert!((p.two - 0.5).abs() < 1e-15 && p.one.abs() < 1e-15 && (p.zero - 0.5).abs() < 1e-15);
        let noise = NoiseConfig::ideal().with_symmetric_spam(0.02);
        let p = exact_bright_probs(&TwoQubitState::up_up(), &noise);
        assert!((p.two - 0.9604).abs() < 1e-15);
        assert!((p.two - noise.p0()).abs() < 1e-15);
        assert!((p.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_ion_bright_probability() {
        let noise = NoiseConfig {
            spam_eps1: 0.1,
            spam_eps2: 0.3,
            ..NoiseConfig::ideal()
        };
        let s = TwoQubitState::basis(1);
        assert!((ion_bright_probability(&s, Ion::One, &noise) - 0.9).abs() < 1e-15);
        assert!((ion_bright_probability(&s, Ion::Two, &noise) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_shots_gives_empty_histogram() {
        let h = apply_spam_and_detect(&bell(), &NoiseConfig::ideal(), 0, &mut task_rng(1, 0));
        assert_eq!(h, BrightHistogram::default());
        assert!(h.frequencies().is_none());
    }

    #[test]
    fn sampled_frequencies_converge() {
        let noise = NoiseConfig {
            spam_eps1: 0.05,
            spam_eps2: 0.12,
            ..NoiseConfig::ideal()
        };
        let state = TwoQubitState::up_up()
            .apply(&embed_single(&r_phi(1.1, 0.2), Ion::One).unwrap())
            .unwrap();
        let exact = exact_bright_probs(&state, &noise);
        let shots = 100_000;
        let h = apply_spam_and_detect(&state, &noise, shots, &mut task_rng(42, 0));
        assert_eq!(h.n0 + h.n1 + h.n2, shots);
        let f = h.frequencies().unwrap();
        for (obs, p) in [(f.two, exact.two), (f.one, exact.one), (f.zero, exact.zero)] {
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            assert!((obs - p).abs() < 4.0 * sigma, "{obs} vs {p}");
        }
    }

    #[test]
    fn crosstalk_model_cases() {
        assert_eq!(crosstalk_fidelity_model(0.0, 1e-3, 0.96), 0.96);
        for n in [0.0, 10.0, 1000.0] {
            assert!((crosstalk_fidelity_model(n, 0.0, 0.93) - 0.93).abs() < 1e-15);
        }
        let f = crosstalk_fidelity_model(100.0, 1.2e-3, 0.96);
        let expected = 0.5 * (1.0 + 0.92 * (-0.24f64).exp());
        assert!((f - expected).abs() < 1e-15);
        assert!((f - 0.8618).abs() < 1e-4);
        assert!((crosstalk_fidelity_model(1e6, 1e-3, 0.96) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noise_validation() {
        let bad = NoiseConfig {
            spam_eps1: 1.5,
            p_dep: -0.1,
            omega_na_rad_per_s: -1.0,
            ..NoiseConfig::ideal()
        };
        let fields: Vec<String> = bad.violations().into_iter().map(|(f, _)| f).collect();
        assert_eq!(fields, vec!["spam_eps1", "p_dep", "omega_na_rad_per_s"]);
        assert!(bad.validate().is_err());
        assert!(NoiseConfig::ideal().validate().is_ok());
    }

    #[test]
    fn noise_json_field_names() {
        let json = serde_json::to_value(NoiseConfig::ideal()).unwrap();
        let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            vec![
                "omega_na_rad_per_s",
                "p_dep",
                "phi_offset_rad",
                "seed",
                "spam_eps1",
                "spam_eps2",
                "zeeman_shift_rad_per_s"
            ]
        );
        let err = serde_json::from_str::<NoiseConfig>(r#"{"bogus": 1}"#);
        assert!(err.is_err());
    }
}
